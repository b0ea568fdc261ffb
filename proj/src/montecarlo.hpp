#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "measure.hpp"

namespace freesing {

// Reproducible stream: identical (seed, index) gives an identical sequence.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t index);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t index() const { return index_; }
    double normal() { return normal_(eng_); }
    double uniform() { return uniform_(eng_); }
    std::mt19937_64& engine() { return eng_; }

private:
    std::uint64_t seed_, index_;
    std::mt19937_64 eng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// Density proportional to exp(-(n/2) Tr H^2).
Eigen::MatrixXcd sample_gue(int n, RngStream& rng);

// Sorted eigenvalues of a Hermitian matrix; EigenFailure if the solver does not converge.
std::vector<double> hermitian_eigenvalues(const Eigen::MatrixXcd& h);

struct McmcOptions {
    int steps = 0;           // single-site updates between draws; 0 means 10 n
    double step_size = 0.0;  // initial proposal width; 0 means 1 / sqrt(n)
    int burn_in = 0;         // sweeps of n updates; 0 means 500
};

// Metropolis chain for the density prop. to Delta(x)^2 prod exp(-n V(x_j)).
class UeSampler {
public:
    UeSampler(Potential V, int n, RngStream rng, McmcOptions opt = {});

    // Advances the chain by the thinning interval and returns the sorted state.
    std::vector<double> next();
    double acceptance() const;  // since the end of burn-in
    double step_size() const { return step_; }
    // Acceptance outside [0.2, 0.6].
    bool mixing_warning() const;

private:
    bool update(int i);

    Potential V_;
    int n_;
    RngStream rng_;
    McmcOptions opt_;
    std::vector<double> x_;
    double step_;
    long long tried_ = 0, accepted_ = 0;
};

struct UeDraw {
    std::vector<double> eigs;
    double acceptance = 0.0;
    bool mixing_warning = false;
};
// One draw from a fresh chain (n <= 64).
UeDraw sample_ue_eigs(const Potential& V, int n, RngStream& rng, const McmcOptions& opt = {});

// Sorted eigenvalues of diag(eigs) + sqrt(tau) H.
std::vector<double> sample_perturbed(const std::vector<double>& eigs, double tau, RngStream& rng);
std::vector<double> sample_perturbed(const Eigen::MatrixXcd& m, double tau, RngStream& rng);

// Points q_i with mu((-inf, q_i]) = (i - 1/2) / n * mass, i = 1..n.
std::vector<double> measure_quantiles(const Measure& m, int n);

struct PathEnsemble {
    std::vector<double> times;
    int n = 0;
    // paths[replica][time][particle]
    std::vector<std::vector<std::vector<double>>> paths;
    int resampled = 0;  // replicas redrawn because of near-ties
};

// Draws M-eigenvalues for replica r.
using InitialSampler = std::function<std::vector<double>(int replica)>;

// Eigenvalues of the Hermitian bridge (1 - t) M + (1 - t) W(t / (1 - t)) at the
// given times, W a Hermitian Brownian motion with entry variance scale 1/n.
// Replica r uses stream (seed, stream_base + r).
PathEnsemble sample_nibm(const InitialSampler& initial, const std::vector<double>& times, int n,
                         int replicas, std::uint64_t seed, std::uint64_t stream_base = 0);

struct Histogram {
    double lo = 0.0, hi = 0.0;
    std::vector<double> centers;
    std::vector<double> heights;  // counts / (total * width)
    double width() const { return (hi - lo) / static_cast<double>(centers.size()); }
    // Sum of heights times width: the fraction of samples in [lo, hi].
    double mass() const;
};

Histogram empirical_density(const std::vector<double>& samples, double lo, double hi, int count);

struct KsResult {
    double statistic = 0.0;
    double p_value = 0.0;
};
// Asymptotic Kolmogorov distribution with the usual small-sample correction.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);
KsResult ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf);
double kolmogorov_survival(double lambda);

} // namespace freesing
