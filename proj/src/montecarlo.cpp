#include "montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/tools/roots.hpp>

#include "error.hpp"

namespace freesing {

RngStream::RngStream(std::uint64_t seed, std::uint64_t index) : seed_(seed), index_(index) {
    std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(index),
                      std::uint32_t(index >> 32)};
    eng_.seed(seq);
}

Eigen::MatrixXcd sample_gue(int n, RngStream& rng) {
    if (n < 1) fail(Code::InvalidArgument, "GUE size must be positive");
    Eigen::MatrixXcd h(n, n);
    const double sd = 1.0 / std::sqrt(double(n)), so = 1.0 / std::sqrt(2.0 * n);
    for (int i = 0; i < n; ++i) {
        h(i, i) = sd * rng.normal();
        for (int j = i + 1; j < n; ++j) {
            double re = so * rng.normal();
            double im = so * rng.normal();
            h(i, j) = {re, im};
            h(j, i) = {re, -im};
        }
    }
    return h;
}

std::vector<double> hermitian_eigenvalues(const Eigen::MatrixXcd& h) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) fail(Code::EigenFailure, "Hermitian eigensolver did not converge");
    const auto& ev = es.eigenvalues();
    std::vector<double> out(ev.data(), ev.data() + ev.size());
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------

UeSampler::UeSampler(Potential V, int n, RngStream rng, McmcOptions opt)
    : V_(std::move(V)), n_(n), rng_(std::move(rng)), opt_(opt) {
    if (n < 1) fail(Code::InvalidArgument, "n must be positive");
    if (n > 64) fail(Code::InvalidArgument, "Metropolis sampler is limited to n <= 64");
    if (V_.degree() < 2 || V_.coefficients().back() <= 0 || V_.degree() % 2)
        fail(Code::InvalidArgument, "potential must have even degree and positive leading coefficient");
    if (opt_.steps <= 0) opt_.steps = 10 * n;
    if (opt_.burn_in <= 0) opt_.burn_in = 500;
    step_ = opt_.step_size > 0 ? opt_.step_size : 1.0 / std::sqrt(double(n));

    x_.resize(n);
    for (int i = 0; i < n; ++i) x_[i] = n == 1 ? 0.0 : -1.0 + 2.0 * i / (n - 1);

    // Burn-in with the proposal width steered toward 0.35 acceptance.
    const int block = std::max(n, 50);
    int acc = 0, cnt = 0;
    for (long long s = 0; s < (long long)opt_.burn_in * n; ++s) {
        acc += update(int(s % n));
        if (++cnt == block) {
            step_ *= std::exp(double(acc) / cnt - 0.35);
            acc = cnt = 0;
        }
    }
}

bool UeSampler::update(int i) {
    const double xi = x_[i];
    const double xp = xi + step_ * rng_.normal();
    double logr = -n_ * (V_(xp) - V_(xi));
    double prod = 1.0;
    for (int j = 0; j < n_; ++j) {
        if (j == i) continue;
        double num = std::fabs(xp - x_[j]);
        if (num == 0.0) return false;
        prod *= num / std::fabs(xi - x_[j]);
        if (prod > 1e150 || prod < 1e-150) {
            logr += 2 * std::log(prod);
            prod = 1.0;
        }
    }
    logr += 2 * std::log(prod);
    bool ok = logr >= 0 || rng_.uniform() < std::exp(logr);
    if (ok) x_[i] = xp;
    return ok;
}

std::vector<double> UeSampler::next() {
    for (int s = 0; s < opt_.steps; ++s) {
        int i = int(rng_.uniform() * n_) % n_;
        accepted_ += update(i);
        ++tried_;
    }
    std::vector<double> out = x_;
    std::sort(out.begin(), out.end());
    return out;
}

double UeSampler::acceptance() const {
    return tried_ ? double(accepted_) / double(tried_) : std::numeric_limits<double>::quiet_NaN();
}

bool UeSampler::mixing_warning() const {
    double a = acceptance();
    return !(a >= 0.2 && a <= 0.6);
}

UeDraw sample_ue_eigs(const Potential& V, int n, RngStream& rng, const McmcOptions& opt) {
    std::uint64_t sub = rng.engine()();
    UeSampler s(V, n, RngStream(rng.seed() ^ sub, rng.index()), opt);
    UeDraw d;
    d.eigs = s.next();
    d.acceptance = s.acceptance();
    d.mixing_warning = s.mixing_warning();
    return d;
}

// ---------------------------------------------------------------------------

std::vector<double> sample_perturbed(const Eigen::MatrixXcd& m, double tau, RngStream& rng) {
    if (!(tau >= 0)) fail(Code::InvalidArgument, "tau must be non-negative");
    if (m.rows() != m.cols() || m.rows() == 0) fail(Code::InvalidArgument, "matrix must be square");
    if (tau == 0) return hermitian_eigenvalues(m);
    return hermitian_eigenvalues(m + std::sqrt(tau) * sample_gue(int(m.rows()), rng));
}

std::vector<double> sample_perturbed(const std::vector<double>& eigs, double tau, RngStream& rng) {
    if (!(tau >= 0)) fail(Code::InvalidArgument, "tau must be non-negative");
    if (eigs.empty()) fail(Code::InvalidArgument, "no eigenvalues given");
    if (tau == 0) {
        std::vector<double> out = eigs;
        std::sort(out.begin(), out.end());
        return out;
    }
    const int n = int(eigs.size());
    Eigen::MatrixXcd h = std::sqrt(tau) * sample_gue(n, rng);
    for (int i = 0; i < n; ++i) h(i, i) += eigs[i];
    return hermitian_eigenvalues(h);
}

// ---------------------------------------------------------------------------

std::vector<double> measure_quantiles(const Measure& m, int n) {
    if (n < 1) fail(Code::InvalidArgument, "quantile count must be positive");

    // Pieces in order of location: cells of absolutely continuous mass and atoms.
    struct Cell {
        double lo, hi, mass, start;
        const Segment* seg;  // null for an atom
        bool first, last;
    };
    std::vector<Cell> cells;
    constexpr int kCells = 128;
    for (const Segment& sg : m.segments()) {
        for (int c = 0; c < kCells; ++c) {
            double lo = sg.a + (sg.b - sg.a) * c / kCells;
            double hi = c + 1 == kCells ? sg.b : sg.a + (sg.b - sg.a) * (c + 1) / kCells;
            cells.push_back({lo, hi, 0.0, 0.0, &sg, c == 0, c + 1 == kCells});
        }
    }
    for (const Atom& a : m.atom_list()) cells.push_back({a.location, a.location, a.mass, 0.0, nullptr, false, false});
    std::stable_sort(cells.begin(), cells.end(), [](const Cell& p, const Cell& q) { return p.lo < q.lo; });

    auto partial = [](const Cell& c, double x) {
        const Segment& sg = *c.seg;
        return integrate_scalar([&](double s) { return sg.at(s, s - sg.a, sg.b - s); }, c.lo, x, {},
                                c.first, c.last && x == c.hi);
    };
    double total = 0.0;
    for (Cell& c : cells) {
        if (c.seg) c.mass = partial(c, c.hi);
        c.start = total;
        total += c.mass;
    }

    std::vector<double> q(n);
    std::size_t k = 0;
    for (int i = 0; i < n; ++i) {
        double target = (i + 0.5) / n * total;
        while (k + 1 < cells.size() && cells[k].start + cells[k].mass < target) ++k;
        const Cell& c = cells[k];
        if (!c.seg) {
            q[i] = c.lo;
            continue;
        }
        double need = target - c.start;
        auto f = [&](double x) { return partial(c, x) - need; };
        std::uintmax_t iters = 100;
        auto [a, b] = boost::math::tools::toms748_solve(f, c.lo, c.hi, -need, c.mass - need,
                                                        boost::math::tools::eps_tolerance<double>(50),
                                                        iters);
        q[i] = 0.5 * (a + b);
    }
    return q;
}

// ---------------------------------------------------------------------------

PathEnsemble sample_nibm(const InitialSampler& initial, const std::vector<double>& times, int n,
                         int replicas, std::uint64_t seed, std::uint64_t stream_base) {
    if (times.empty()) fail(Code::InvalidArgument, "no observation times");
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (!(times[k] >= 0 && times[k] < 1)) fail(Code::InvalidArgument, "times must lie in [0, 1)");
        if (k && !(times[k] > times[k - 1])) fail(Code::InvalidArgument, "times must be strictly increasing");
    }
    if (n < 1 || replicas < 1) fail(Code::InvalidArgument, "n and replicas must be positive");

    PathEnsemble pe;
    pe.times = times;
    pe.n = n;
    pe.paths.resize(replicas);
    constexpr int kMaxRedraw = 20;
    for (int r = 0; r < replicas; ++r) {
        RngStream rng(seed, stream_base + std::uint64_t(r));
        std::vector<double> m = initial(r);
        if (int(m.size()) != n) fail(Code::InvalidArgument, "initial sampler returned the wrong size");
        for (int attempt = 0;; ++attempt) {
            auto& rep = pe.paths[r];
            rep.assign(times.size(), {});
            Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(n, n);
            double s_prev = 0.0;
            bool tie = false;
            for (std::size_t k = 0; k < times.size() && !tie; ++k) {
                double t = times[k], s = t / (1 - t);
                if (s > s_prev) w += std::sqrt(s - s_prev) * sample_gue(n, rng);
                s_prev = s;
                Eigen::MatrixXcd b = (1 - t) * w;
                for (int i = 0; i < n; ++i) b(i, i) += (1 - t) * m[i];
                rep[k] = hermitian_eigenvalues(b);
                for (int i = 1; i < n; ++i)
                    if (!(rep[k][i] - rep[k][i - 1] >= 1e-13)) tie = true;
            }
            if (!tie) break;
            ++pe.resampled;
            if (attempt == kMaxRedraw)
                fail(Code::EigenFailure, "replica " + std::to_string(r) + " keeps producing coincident eigenvalues");
        }
    }
    return pe;
}

// ---------------------------------------------------------------------------

double Histogram::mass() const {
    double w = width();
    return std::accumulate(heights.begin(), heights.end(), 0.0) * w;
}

Histogram empirical_density(const std::vector<double>& samples, double lo, double hi, int count) {
    if (count < 2) fail(Code::InvalidArgument, "histogram needs at least 2 bins");
    if (!(hi > lo)) fail(Code::EmptyRange, "histogram range is empty");
    if (samples.empty()) fail(Code::EmptyRange, "no samples");
    Histogram h;
    h.lo = lo;
    h.hi = hi;
    const double w = (hi - lo) / count;
    h.centers.resize(count);
    for (int i = 0; i < count; ++i) h.centers[i] = lo + (i + 0.5) * w;
    std::vector<long long> cnt(count, 0);
    for (double x : samples) {
        if (!(x >= lo && x <= hi)) continue;
        int i = std::min(count - 1, int((x - lo) / w));
        ++cnt[i];
    }
    h.heights.resize(count);
    for (int i = 0; i < count; ++i) h.heights[i] = double(cnt[i]) / (double(samples.size()) * w);
    return h;
}

double kolmogorov_survival(double lambda) {
    if (lambda < 0.2) return 1.0;
    double sum = 0.0, sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        if (term < 1e-17 * sum) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {
double ks_p(double d, double ne) {
    double sq = std::sqrt(ne);
    return kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d);
}
} // namespace

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) fail(Code::InsufficientSamples, "KS test needs two non-empty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = double(a.size()), nb = double(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        d = std::max(d, std::fabs(i / na - j / nb));
    }
    return {d, ks_p(d, na * nb / (na + nb))};
}

KsResult ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf) {
    if (a.empty()) fail(Code::InsufficientSamples, "KS test needs a non-empty sample");
    std::sort(a.begin(), a.end());
    const double na = double(a.size());
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double f = cdf(a[i]);
        d = std::max({d, (i + 1) / na - f, f - i / na});
    }
    return {d, ks_p(d, na)};
}

} // namespace freesing
