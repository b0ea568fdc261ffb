#include "finite_n.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/roots.hpp>

#include "error.hpp"
#include "quadrature.hpp"

namespace freesing {

namespace {

constexpr double kPi = 3.14159265358979323846;
using cd = std::complex<double>;

// Neumaier-compensated accumulator.
struct Sum {
    double s = 0.0, c = 0.0;
    void add(double v) {
        double t = s + v;
        if (std::fabs(s) >= std::fabs(v)) c += (s - t) + v;
        else c += (v - t) + s;
        s = t;
    }
    double value() const { return s + c; }
};

// Gauss-Hermite rule for exp(-x^2) by Golub-Welsch.
struct HermiteRule {
    std::vector<double> x, w;
};

HermiteRule hermite_rule(int m) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
    for (int k = 1; k < m; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(k / 2.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    HermiteRule r;
    for (int i = 0; i < m; ++i) {
        r.x.push_back(es.eigenvalues()(i));
        double v = es.eigenvectors()(0, i);
        r.w.push_back(std::sqrt(kPi) * v * v);
    }
    return r;
}

double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

} // namespace

OrthoBasis::OrthoBasis(const Potential& V, int n, int degree_max) : V_(V), n_(n), deg_(degree_max) {
    if (n < 1) fail(Code::InvalidArgument, "n must be >= 1");
    if (degree_max < 0 || degree_max > 24) fail(Code::InvalidArgument, "degree_max must lie in [0, 24]");

    // Locate the global minimum of V: grid scan inside a Cauchy bound for the
    // critical points, then Newton polish.
    const auto& c = V_.coefficients();
    int d = V_.degree();
    double bound = 1.0;
    for (int i = 1; i < d; ++i) bound = std::max(bound, 1.0 + std::fabs(i * c[i]) / (d * c[d]));
    double xmin = 0.0, best = INFINITY;
    const int scan = 4001;
    for (int i = 0; i < scan; ++i) {
        double x = -bound + 2 * bound * i / (scan - 1);
        double v = V_(x);
        if (v < best) best = v, xmin = x;
    }
    for (int it = 0; it < 50; ++it) {
        double d2 = V_.derivative(xmin, 2);
        if (!(d2 > 0)) break;
        double step = V_.derivative(xmin, 1) / d2;
        xmin -= step;
        if (std::fabs(step) < 1e-15 * std::max(1.0, std::fabs(xmin))) break;
    }
    vmin_ = std::min(best, V_(xmin));

    // Truncate where the weight, times the largest polynomial growth, is below e^-80.
    auto negligible = [&](double x) {
        return n_ * (V_(x) - vmin_) >= 80.0 + 2.0 * std::max(deg_, 1) * std::log1p(std::fabs(x));
    };
    double step = 0.01 * bound;
    hi_ = xmin;
    while (!negligible(hi_)) hi_ += step;
    lo_ = xmin;
    while (!negligible(lo_)) lo_ -= step;

    // Discretized Stieltjes procedure (Lanczos form with full reorthogonalization).
    const GaussRule& g = gauss_rule(20);
    const int panels = 400;
    const double h = (hi_ - lo_) / panels;
    std::vector<double> xs, lam;
    xs.reserve(panels * 20);
    lam.reserve(panels * 20);
    for (int p = 0; p < panels; ++p) {
        double mid = lo_ + (p + 0.5) * h;
        for (size_t k = 0; k < g.x.size(); ++k) {
            double x = mid + 0.5 * h * g.x[k];
            xs.push_back(x);
            lam.push_back(0.5 * h * g.w[k] * weight(x));
        }
    }
    const size_t N = xs.size();
    auto dot = [&](const std::vector<double>& u, const std::vector<double>& v) {
        Sum s;
        for (size_t i = 0; i < N; ++i) s.add(lam[i] * u[i] * v[i]);
        return s.value();
    };

    Sum m0;
    for (double l : lam) m0.add(l);
    p0_ = 1.0 / std::sqrt(m0.value());
    std::vector<std::vector<double>> q(deg_ + 1, std::vector<double>(N, 0.0));
    std::fill(q[0].begin(), q[0].end(), p0_);
    a_.assign(deg_, 0.0);
    b_.assign(deg_ + 1, 0.0);
    std::vector<double> r(N), xq(N);
    for (int j = 0; j < deg_; ++j) {
        for (size_t i = 0; i < N; ++i) xq[i] = xs[i] * q[j][i];
        a_[j] = dot(xq, q[j]);
        for (size_t i = 0; i < N; ++i)
            r[i] = xq[i] - a_[j] * q[j][i] - (j > 0 ? b_[j] * q[j - 1][i] : 0.0);
        double before = std::sqrt(dot(xq, xq));
        for (int pass = 0; pass < 2; ++pass)
            for (int i = 0; i <= j; ++i) {
                double proj = dot(r, q[i]);
                for (size_t l = 0; l < N; ++l) r[l] -= proj * q[i][l];
            }
        double nr = std::sqrt(dot(r, r));
        if (!(nr > 1e-12 * before))
            fail(Code::Instability, "Stieltjes recurrence lost orthogonality at degree " + std::to_string(j + 1));
        b_[j + 1] = nr;
        for (size_t i = 0; i < N; ++i) q[j + 1][i] = r[i] / nr;
    }
}

double OrthoBasis::p0() const { return p0_ * std::exp(0.5 * n_ * vmin_); }

double OrthoBasis::leading_coefficient(int j) const {
    if (j < 0 || j > deg_) fail(Code::OutOfRange, "degree outside the basis");
    double k = p0();
    for (int i = 1; i <= j; ++i) k /= b_[i];
    return k;
}

double OrthoBasis::weight(double x) const { return std::exp(-n_ * (V_(x) - vmin_)); }

void OrthoBasis::eval(double x, int count, double* out) const {
    if (count > deg_ + 1) fail(Code::OutOfRange, "requested more polynomials than the basis holds");
    if (count <= 0) return;
    out[0] = p0_;
    if (count > 1) out[1] = (x - a_[0]) * out[0] / b_[1];
    for (int j = 1; j + 1 < count; ++j) out[j + 1] = ((x - a_[j]) * out[j] - b_[j] * out[j - 1]) / b_[j + 1];
}

void OrthoBasis::eval(cd z, int count, cd* out) const {
    if (count > deg_ + 1) fail(Code::OutOfRange, "requested more polynomials than the basis holds");
    if (count <= 0) return;
    out[0] = p0_;
    if (count > 1) out[1] = (z - a_[0]) * out[0] / b_[1];
    for (int j = 1; j + 1 < count; ++j) out[j + 1] = ((z - a_[j]) * out[j] - b_[j] * out[j - 1]) / b_[j + 1];
}

double OrthoBasis::orthonormality_residual(int count) const {
    if (count > deg_ + 1) fail(Code::OutOfRange, "requested more polynomials than the basis holds");
    std::vector<double> p(count);
    VecIntegrand f = [&](double x, double* o) {
        eval(x, count, p.data());
        double w = weight(x);
        int idx = 0;
        for (int j = 0; j < count; ++j)
            for (int k = 0; k <= j; ++k) o[idx++] = p[j] * p[k] * w;
    };
    QuadOptions opt;
    opt.rel_tol = 1e-13;
    int dim = count * (count + 1) / 2;
    std::vector<double> br;
    for (int i = 1; i < 16; ++i) br.push_back(lo_ + (hi_ - lo_) * i / 16);
    QuadResult r = integrate(f, dim, make_pieces(lo_, hi_, br, false, false), opt);
    double worst = 0.0;
    int idx = 0;
    for (int j = 0; j < count; ++j)
        for (int k = 0; k <= j; ++k) worst = std::max(worst, std::fabs(r.value[idx++] - (j == k ? 1.0 : 0.0)));
    return worst;
}

LocalScaling local_scaling(const SingularPoint& sp, const Potential& V) {
    double v2 = V.derivative(sp.x_star, 2);
    if (!(v2 < 0)) fail(Code::InvalidArgument, "V''(x*) must be negative for a finite tau_crit");
    return {sp.x_star, sp.c0, sp.gamma(), -2.0 / v2};
}

KernelEngine::KernelEngine(OrthoBasis basis, std::optional<LocalScaling> scaling, KernelOptions opt)
    : basis_(std::move(basis)), sc_(scaling), opt_(opt) {
    if (sc_) model_.emplace(basis_.potential(), basis_.n(), *sc_);
    if (basis_.degree_max() + 1 < basis_.n())
        fail(Code::InvalidArgument, "basis must reach degree n - 1");
}

double KernelEngine::kernel_M(double x, double y) const {
    int n = basis_.n();
    std::vector<double> px(n), py(n);
    basis_.eval(x, n, px.data());
    basis_.eval(y, n, py.data());
    Sum s;
    for (int j = 0; j < n; ++j) s.add(px[j] * py[j]);
    return std::sqrt(basis_.weight(x) * basis_.weight(y)) * s.value();
}

cd KernelEngine::kernel_PE(cd z, double w) const {
    int n = basis_.n();
    std::vector<cd> pz(n);
    std::vector<double> pw(n);
    basis_.eval(z, n, pz.data());
    basis_.eval(w, n, pw.data());
    cd s = 0.0;
    for (int j = 0; j < n; ++j) s += pz[j] * pw[j];
    return basis_.weight(w) * s;
}

std::vector<cd> KernelEngine::contour_factors(double x, double alpha, double beta, double* err) const {
    const int n = basis_.n();
    const double sigma = std::sqrt(beta / (n * alpha * alpha));
    std::vector<cd> out(n, 0.0);
    std::vector<cd> pz(n);
    if (err) *err = 0.0;

    if (opt_.exact_contour && !opt_.through_x_star && opt_.contour_shift == 0.0) {
        // On the line through x / alpha the exponential is a real Gaussian, so a
        // Gauss-Hermite rule integrates the polynomial factor exactly.
        static thread_local std::vector<HermiteRule> rules(64);
        int m = std::max(8, n + 2);
        if (rules[m].x.empty()) rules[m] = hermite_rule(m);
        const HermiteRule& R = rules[m];
        const double c = x / alpha, sc = std::sqrt(2.0) * sigma;
        for (int i = 0; i < m; ++i) {
            basis_.eval(cd(c, sc * R.x[i]), n, pz.data());
            for (int j = 0; j < n; ++j) out[j] += R.w[i] * pz[j];
        }
        for (cd& v : out) v *= sc;
        return out;
    }

    double c = (opt_.through_x_star ? scaling().x_star : x / alpha) + opt_.contour_shift;
    double delta = x - alpha * c;
    double zdef = sigma * 6.0 * std::sqrt(std::log(1e12));
    double Z = opt_.z_max > 0 ? opt_.z_max : std::sqrt(zdef * zdef + (delta / alpha) * (delta / alpha));
    basis_.eval(cd(c, Z), n, pz.data());
    double pmax = 0.0;
    for (const cd& v : pz) pmax = std::max(pmax, std::abs(v));
    double tail = 2.0 * sigma * pmax * std::exp(n * (delta * delta - alpha * alpha * Z * Z) / (2 * beta));
    if (!(tail < 1e-12))
        fail(Code::TruncationTooTight, "vertical truncation tail bound " + std::to_string(tail));

    VecIntegrand f = [&](double zeta, double* o) {
        std::vector<cd> p(n);
        basis_.eval(cd(c, zeta), n, p.data());
        cd e = std::exp(cd(n * (delta * delta - alpha * alpha * zeta * zeta) / (2 * beta),
                           -n * alpha * delta * zeta / beta));
        for (int j = 0; j < n; ++j) {
            cd v = p[j] * e;
            o[2 * j] = v.real();
            o[2 * j + 1] = v.imag();
        }
    };
    std::vector<double> br{0.0};
    for (int k = 1; k <= 8; ++k) br.push_back(k * sigma), br.push_back(-k * sigma);
    QuadOptions qo;
    qo.rel_tol = opt_.rel_tol;
    QuadResult r = integrate(f, 2 * n, make_pieces(-Z, Z, br, false, false), qo);
    for (int j = 0; j < n; ++j) {
        out[j] = cd(r.value[2 * j], r.value[2 * j + 1]);
        if (err) *err = std::max(*err, std::hypot(r.error[2 * j], r.error[2 * j + 1]));
    }
    return out;
}

std::vector<double> KernelEngine::line_factors(double y, double alpha, double beta, double* err) const {
    const int n = basis_.n();
    double lo = basis_.lo(), hi = basis_.hi();
    if (opt_.w_max > 0) {
        lo = -opt_.w_max;
        hi = opt_.w_max;
        std::vector<double> p(n);
        double tail = 0.0;
        for (double w : {lo, hi}) {
            basis_.eval(w, n, p.data());
            double pm = 0.0;
            for (double v : p) pm = std::max(pm, std::fabs(v));
            double g = std::exp(-n * (y - alpha * w) * (y - alpha * w) / (2 * beta));
            tail = std::max(tail, pm * basis_.weight(w) * g / std::sqrt(double(n)));
        }
        if (!(tail < 1e-12))
            fail(Code::TruncationTooTight, "real-line truncation tail bound " + std::to_string(tail));
    }
    VecIntegrand f = [&](double w, double* o) {
        basis_.eval(w, n, o);
        double fac = basis_.weight(w) * std::exp(-n * (y - alpha * w) * (y - alpha * w) / (2 * beta));
        for (int j = 0; j < n; ++j) o[j] *= fac;
    };
    double centre = y / alpha, width = std::sqrt(beta / n) / alpha;
    std::vector<double> br = graded_breaks(centre, width, lo, hi);
    if (centre > lo && centre < hi) br.push_back(centre);
    for (int i = 1; i < 8; ++i) br.push_back(lo + (hi - lo) * i / 8);
    QuadOptions qo;
    qo.rel_tol = opt_.rel_tol;
    QuadResult r = integrate(f, n, make_pieces(lo, hi, br, false, false), qo);
    if (err) *err = *std::max_element(r.error.begin(), r.error.end());
    return r.value;
}

KernelValue KernelEngine::assemble(double x, double y, double a1, double b1, double a2, double b2,
                                   double pref) const {
    double ea = 0.0, eb = 0.0;
    std::vector<cd> A = contour_factors(x, a1, b1, &ea);
    std::vector<double> B = line_factors(y, a2, b2, &eb);
    cd s = 0.0;
    double amax = 0.0, bmax = 0.0;
    for (size_t j = 0; j < A.size(); ++j) {
        s += A[j] * B[j];
        amax = std::max(amax, std::abs(A[j]));
        bmax = std::max(bmax, std::fabs(B[j]));
    }
    KernelValue kv;
    kv.value = pref * s.real();
    kv.imag = pref * s.imag();
    kv.error = pref * A.size() * (ea * bmax + amax * eb);
    return kv;
}

KernelValue KernelEngine::kernel_X(double x, double y, double tau) const {
    if (!(tau > 0)) fail(Code::InvalidArgument, "tau must be positive");
    return assemble(x, y, 1.0, tau, 1.0, tau, n() / (2 * kPi * tau));
}

KernelValue KernelEngine::kernel_tilde(double x, double y, double t, double tp) const {
    if (!(t > 0 && t < 1 && tp > 0 && tp < 1)) fail(Code::InvalidArgument, "times must lie in (0, 1)");
    return assemble(x, y, 1 - t, t * (1 - t), 1 - tp, tp * (1 - tp), n() / (2 * kPi * std::sqrt(t * tp)));
}

double KernelEngine::log_G(int n, double x, double y, double t, double tp) {
    if (!(tp > t)) fail(Code::InvalidArgument, "G_n needs t < t'");
    double dt = tp - t;
    // Completed-square form keeps the exponent non-positive.
    double q = x * std::sqrt((1 - tp) / (1 - t)) - y * std::sqrt((1 - t) / (1 - tp));
    return 0.5 * std::log(double(n)) - 0.5 * std::log(2 * kPi * dt) - n * q * q / (2 * dt);
}

double KernelEngine::G(int n, double x, double y, double t, double tp) { return std::exp(log_G(n, x, y, t, tp)); }

KernelValue KernelEngine::kernel_multitime(double x, double y, double t, double tp) const {
    KernelValue kv = kernel_tilde(x, y, t, tp);
    if (t < tp) kv.value -= G(n(), x, y, t, tp);
    return kv;
}

ScalingModel::ScalingModel(Potential V, int n, LocalScaling sc) : V_(std::move(V)), n_(n), sc_(sc) {
    if (n < 1) fail(Code::InvalidArgument, "n must be >= 1");
    if (!(sc.c0 > 0) || !(sc.gamma > 0) || !(sc.tau_crit > 0))
        fail(Code::InvalidArgument, "scaling data must be positive");
}

double ScalingModel::t_crit() const {
    double tc = sc_.tau_crit;
    return tc / (1 + tc);
}

double ScalingModel::c_hat(double t) const {
    double tc = t_crit();
    return tc * sc_.c0 / (tc - t);
}

double ScalingModel::x_hat(double t) const {
    return (1 - t) * sc_.x_star + 0.5 * t * V_.derivative(sc_.x_star, 1);
}

// (1/2) sum_k V^(k)(x*) / (k - shift)! s^(k - shift) / (c0^k n^((k-3) gamma)), k >= 3.
double ScalingModel::deriv_sum(double s, int shift) const {
    double n = n_, tot = 0.0;
    for (int k = 3; k <= V_.degree(); ++k)
        tot += V_.derivative(sc_.x_star, k) / factorial(k - shift) * std::pow(s, k - shift) /
               (std::pow(sc_.c0, k) * std::pow(n, (k - 3) * sc_.gamma));
    return 0.5 * tot;
}

double ScalingModel::R_n(double s) const { return deriv_sum(s, 0); }

double ScalingModel::R_n_prime(double s) const { return deriv_sum(s, 1); }

GaugeData ScalingModel::gauge(double u, double t) const {
    const LocalScaling& sc = sc_;
    if (!(t > 0 && t < t_crit())) fail(Code::OutOfRange, "gauge needs 0 < t < t_crit");
    const Potential& V = V_;
    const double n = n_, g = sc.gamma, c0 = sc.c0, ch = c_hat(t);
    const double lam = t * c0 * ch * std::pow(n, -g);
    auto R2 = [&](double s) { return deriv_sum(s, 2); };
    auto f = [&](double s) { return s - u + lam * R_n_prime(s); };

    // Newton from s = u, then a bracketed fallback on the same fixed-point map.
    double s = u;
    bool ok = false;
    for (int it = 0; it < 100; ++it) {
        double fs = f(s), df = 1 + lam * R2(s);
        if (std::fabs(fs) <= 1e-15 * std::max(1.0, std::fabs(u))) {
            ok = true;
            break;
        }
        double next = s - fs / df;
        if (!std::isfinite(next) || df == 0.0) break;
        s = next;
    }
    if (!ok) {
        double h = 1e-3 * (1 + std::fabs(u));
        bool found = false;
        double lo = u, hi = u;
        for (int k = 0; k < 60 && !found; ++k, h *= 2) {
            lo = u - h, hi = u + h;
            found = f(lo) * f(hi) <= 0;
        }
        if (!found) fail(Code::NewtonDiverged, "no saddle point found for u = " + std::to_string(u));
        boost::uintmax_t iters = 200;
        auto r = boost::math::tools::bisect(f, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
        s = 0.5 * (r.first + r.second);
    }

    GaugeData gd;
    gd.u = u;
    gd.t = t;
    gd.s_n = s;
    gd.R_n_value = R_n(s);
    gd.R_hat = gd.R_n_value + std::pow(n, g) * (s - u) * (s - u) / (2 * t * c0 * ch);
    gd.residual = std::fabs((s - u) * std::pow(n, 1 - 2 * g) / (t * c0 * ch) + std::pow(n, 1 - 3 * g) * R_n_prime(s));
    double v1 = V.derivative(sc.x_star, 1), v2 = V.derivative(sc.x_star, 2);
    gd.H_hat = t * n * v1 * v1 / (8 * (1 - t)) + u * std::pow(n, 1 - g) * v1 / (2 * ch * (1 - t)) +
               u * u * std::pow(n, 1 - 2 * g) * v2 / (4 * c0 * ch * (1 - t)) + std::pow(n, 1 - 3 * g) * gd.R_hat;
    return gd;
}

double ScalingModel::H_single(double u, double tau) const {
    double v1 = V_.derivative(sc_.x_star, 1);
    return gauge(u, tau / (1 + tau)).H_hat - tau * n_ * v1 * v1 / 8;
}

double ScalingModel::log_F(double u, double v, double t, double tp) const {
    const double n = n_, g = sc_.gamma;
    const double ct = c_hat(t), ctp = c_hat(tp), ng = std::pow(n, g);
    double x = x_hat(t) + u / (ct * ng), y = x_hat(tp) + v / (ctp * ng);
    return -gauge(u, t).H_hat + gauge(v, tp).H_hat - 0.5 * std::log(ct * ctp) - g * std::log(n) +
           KernelEngine::log_G(n_, x, y, t, tp);
}

const ScalingModel& KernelEngine::scaling_model() const {
    if (!model_) fail(Code::InvalidArgument, "engine has no singular-point scaling data");
    return *model_;
}

double KernelEngine::rescaled_kernel(double u, double v, double t, double tp) const {
    if (!(t <= tp)) fail(Code::InvalidArgument, "rescaled kernel needs t <= t'");
    const ScalingModel& m = scaling_model();
    const double n = basis_.n(), g = m.scaling().gamma;
    const double ct = m.c_hat(t), ctp = m.c_hat(tp), ng = std::pow(n, g);
    double x = m.x_hat(t) + u / (ct * ng), y = m.x_hat(tp) + v / (ctp * ng);
    double gauge_fac = std::exp(-gauge(u, t).H_hat + gauge(v, tp).H_hat);
    return gauge_fac / (std::sqrt(ct * ctp) * ng) * kernel_tilde(x, y, t, tp).value;
}

Eigen::MatrixXd KernelEngine::overlap_matrix(double t) const {
    if (!(t > 0 && t < 1)) fail(Code::InvalidArgument, "time must lie in (0, 1)");
    const int n = basis_.n();
    const double alpha = 1 - t, beta = t * (1 - t);
    KernelOptions exact = opt_;
    exact.exact_contour = true;
    exact.through_x_star = false;
    exact.contour_shift = 0.0;
    KernelEngine eng(basis_, sc_, exact);
    double pad = 12.0 * std::sqrt(beta / n);
    double lo = alpha * basis_.lo() - pad, hi = alpha * basis_.hi() + pad;
    VecIntegrand f = [&](double x, double* o) {
        std::vector<cd> A = eng.contour_factors(x, alpha, beta);
        std::vector<double> B = eng.line_factors(x, alpha, beta);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) o[j * n + k] = B[j] * A[k].real();
    };
    std::vector<double> br;
    for (int i = 1; i < 16; ++i) br.push_back(lo + (hi - lo) * i / 16);
    QuadOptions qo;
    qo.rel_tol = 1e-10;
    QuadResult r = integrate(f, n * n, make_pieces(lo, hi, br, false, false), qo);
    Eigen::MatrixXd M(n, n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) M(j, k) = n / (2 * kPi * t) * r.value[j * n + k];
    return M;
}

} // namespace freesing
