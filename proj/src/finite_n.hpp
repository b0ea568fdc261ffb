#pragma once

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "measure.hpp"

namespace freesing {

// Orthonormal polynomials for exp(-n V(x)) on the real line. Internally the
// weight is exp(-n (V - V_min)); p0() reports the normalization for the
// unshifted weight.
class OrthoBasis {
public:
    OrthoBasis(const Potential& V, int n, int degree_max);

    const Potential& potential() const { return V_; }
    int n() const { return n_; }
    int degree_max() const { return deg_; }
    double v_shift() const { return vmin_; }
    // x p_j = b_{j+1} p_{j+1} + a_j p_j + b_j p_{j-1}; b()[0] is unused (0).
    const std::vector<double>& a() const { return a_; }
    const std::vector<double>& b() const { return b_; }
    double p0() const;
    double p0_shifted() const { return p0_; }
    // kappa_j = leading coefficient of p_j for the unshifted weight.
    double leading_coefficient(int j) const;

    // p_0..p_{count-1} at z (shifted normalization); count <= degree_max + 1.
    void eval(double x, int count, double* out) const;
    void eval(std::complex<double> z, int count, std::complex<double>* out) const;
    // exp(-n (V(x) - V_min))
    double weight(double x) const;
    double lo() const { return lo_; }
    double hi() const { return hi_; }

    // Max |int p_j p_k w - delta_jk| over j, k < count, by independent adaptive quadrature.
    double orthonormality_residual(int count) const;

private:
    Potential V_;
    int n_, deg_;
    double vmin_ = 0.0, p0_ = 0.0, lo_ = 0.0, hi_ = 0.0;
    std::vector<double> a_, b_;
};

struct LocalScaling {
    double x_star = 0.0;
    double c0 = 0.0;
    double gamma = 0.0;
    double tau_crit = 0.0;  // -2 / V''(x*) unless given
};
// Builds the scaling data from a singular point, with tau_crit taken from V.
LocalScaling local_scaling(const SingularPoint& sp, const Potential& V);

struct GaugeData {
    double u = 0.0, t = 0.0;
    double s_n = 0.0;
    double R_n_value = 0.0;  // R_n(s_n)
    double R_hat = 0.0;      // R_hat_n(s_n, u, t)
    double H_hat = 0.0;
    double residual = 0.0;   // saddle equation residual
};

// Gauge and scaling quantities at the singular point; independent of the
// orthogonal-polynomial basis so they can be evaluated at large n.
class ScalingModel {
public:
    ScalingModel(Potential V, int n, LocalScaling sc);

    const LocalScaling& scaling() const { return sc_; }
    int n() const { return n_; }
    double t_crit() const;
    double c_hat(double t) const;
    double x_hat(double t) const;
    double R_n(double s) const;
    double R_n_prime(double s) const;
    GaugeData gauge(double u, double t) const;
    double H_single(double u, double tau) const;  // H_n(u; tau)
    // Scaled G_n term of the multi-time kernel, in log form (t < t').
    double log_F(double u, double v, double t, double tp) const;

private:
    double deriv_sum(double s, int shift) const;

    Potential V_;
    int n_;
    LocalScaling sc_;
};

struct KernelOptions {
    // Exact Gauss-Hermite evaluation on the vertical line through x / alpha;
    // otherwise adaptive quadrature on the truncated line at the abscissa below.
    bool exact_contour = true;
    bool through_x_star = false;  // abscissa x* + shift instead of x / alpha + shift
    double contour_shift = 0.0;
    double z_max = 0.0;  // 0: default truncation
    double w_max = 0.0;  // 0: default truncation
    double rel_tol = 1e-12;
};

struct KernelValue {
    double value = 0.0;
    double imag = 0.0;   // imaginary part of the assembled sum (zero in exact arithmetic)
    double error = 0.0;  // quadrature error estimate
};

class KernelEngine {
public:
    KernelEngine(OrthoBasis basis, std::optional<LocalScaling> scaling = {}, KernelOptions opt = {});

    const OrthoBasis& basis() const { return basis_; }
    const KernelOptions& options() const { return opt_; }
    int n() const { return basis_.n(); }

    double kernel_M(double x, double y) const;
    std::complex<double> kernel_PE(std::complex<double> z, double w) const;
    KernelValue kernel_X(double x, double y, double tau) const;
    // Polynomial part of the multi-time kernel.
    KernelValue kernel_tilde(double x, double y, double t, double tp) const;
    // Full multi-time kernel: kernel_tilde - 1_{t < t'} G_n.
    KernelValue kernel_multitime(double x, double y, double t, double tp) const;
    static double log_G(int n, double x, double y, double t, double tp);
    static double G(int n, double x, double y, double t, double tp);

    // Require scaling data.
    const ScalingModel& scaling_model() const;
    GaugeData gauge(double u, double t) const { return scaling_model().gauge(u, t); }
    double rescaled_kernel(double u, double v, double t, double tp) const;

    // Eynard-Mehta overlap matrix M_jk at time t (identity in exact arithmetic).
    Eigen::MatrixXd overlap_matrix(double t) const;

    // Contour and real-line factors, exposed for tests. alpha, beta describe
    // exp(+-n (x - alpha s)^2 / (2 beta)).
    std::vector<std::complex<double>> contour_factors(double x, double alpha, double beta,
                                                      double* err = nullptr) const;
    std::vector<double> line_factors(double y, double alpha, double beta, double* err = nullptr) const;

private:
    KernelValue assemble(double x, double y, double a1, double b1, double a2, double b2,
                         double pref) const;
    const LocalScaling& scaling() const { return scaling_model().scaling(); }

    OrthoBasis basis_;
    std::optional<LocalScaling> sc_;
    std::optional<ScalingModel> model_;
    KernelOptions opt_;
};

} // namespace freesing
