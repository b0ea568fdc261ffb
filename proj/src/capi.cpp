#include "freesing/freesing.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <memory>
#include <new>
#include <string>

#include "config.hpp"
#include "error.hpp"
#include "finite_n.hpp"
#include "freeconv.hpp"
#include "measure.hpp"
#include "montecarlo.hpp"
#include "singular.hpp"

using namespace freesing;

struct fs_measure {
    Measure m;
};
struct fs_config {
    RunConfig rc;
    std::unique_ptr<fs_measure> measure;
};
struct fs_kernel {
    std::unique_ptr<KernelEngine> engine;
};
struct fs_ue_sampler {
    UeSampler s;
};

namespace {

thread_local std::string g_last;

fs_status record(fs_status s, const char* msg) {
    g_last = msg;
    return s;
}

template <class F>
fs_status guard(F&& f) {
    try {
        f();
        return FS_OK;
    } catch (const Error& e) {
        return record(static_cast<fs_status>(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return record(FS_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return record(FS_INTERNAL, e.what());
    }
}

void need(const void* p, const char* what) {
    if (!p) fail(Code::InvalidArgument, std::string("null pointer: ") + what);
}

const SingularPoint& declared(const Measure& m, double x_star) {
    const SingularPoint* sp = m.singular_at(x_star, 1e-12);
    if (!sp) fail(Code::InvalidArgument, "no singular point declared at x_star");
    return *sp;
}

Side to_side(fs_side s) {
    switch (s) {
    case FS_LEFT: return Side::Left;
    case FS_RIGHT: return Side::Right;
    case FS_BOTH: return Side::Both;
    }
    fail(Code::InvalidArgument, "unknown side");
}

fs_power_law to_c(const PowerLaw& p) {
    fs_power_law o;
    o.exponent = p.exponent;
    o.prefactor = p.prefactor;
    o.residual = p.residual;
    o.window_lo = p.window_lo;
    o.window_hi = p.window_hi;
    o.side = p.side == Side::Left ? FS_LEFT : p.side == Side::Right ? FS_RIGHT : FS_BOTH;
    return o;
}

fs_singular to_c(const SingularPoint& sp) {
    return {sp.x_star, static_cast<fs_kind>(sp.kind), sp.k, sp.c0, sp.kappa(), sp.gamma()};
}

Potential potential_from(const double* V, size_t count) {
    need(V, "V");
    return Potential(std::vector<double>(V, V + count));
}

void write_out(const std::vector<double>& v, double* out, size_t cap, size_t* count) {
    if (count) *count = v.size();
    if (out)
        for (size_t i = 0; i < v.size() && i < cap; ++i) out[i] = v[i];
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

} // namespace

extern "C" {

const char* fs_version(void) { return "0.1.0"; }
const char* fs_last_error(void) { return g_last.c_str(); }

const char* fs_status_name(fs_status s) {
    if (s == FS_OK) return "Ok";
    if (s < FS_INVALID_ARGUMENT || s > FS_INTERNAL) return "Unknown";
    return code_name(static_cast<Code>(s));
}

const char* fs_case_name(fs_case c) {
    if (c < FS_SUBCRITICAL || c > FS_CASE_V) return "?";
    return case_name(static_cast<CaseLabel>(c));
}

const char* fs_kind_name(fs_kind k) {
    if (k < FS_INTERIOR || k > FS_LEFT_EDGE) return "?";
    return kind_name(static_cast<SingularKind>(k));
}

// ---- measures ---------------------------------------------------------------

fs_status fs_measure_semicircle(double tau, fs_measure** out) {
    return guard([&] {
        need(out, "out");
        *out = new fs_measure{Measure::semicircle(tau)};
    });
}

fs_status fs_measure_jacobi_power(double C, double alpha, double beta, double a, double b,
                                  double declared_mass, fs_measure** out) {
    return guard([&] {
        need(out, "out");
        *out = new fs_measure{Measure::jacobi_power(C, alpha, beta, a, b, declared_mass)};
    });
}

fs_status fs_measure_poly_times_sqrt(const double* coeffs, size_t count, double radius,
                                     double declared_mass, fs_measure** out) {
    return guard([&] {
        need(out, "out");
        need(coeffs, "coeffs");
        *out = new fs_measure{
            Measure::poly_times_sqrt(std::vector<double>(coeffs, coeffs + count), radius, declared_mass)};
    });
}

fs_status fs_measure_atoms(const double* locations, const double* masses, size_t count,
                           double declared_mass, fs_measure** out) {
    return guard([&] {
        need(out, "out");
        need(locations, "locations");
        need(masses, "masses");
        std::vector<Atom> a;
        for (size_t i = 0; i < count; ++i) a.push_back({locations[i], masses[i]});
        *out = new fs_measure{Measure::atoms(a, declared_mass)};
    });
}

fs_status fs_measure_expression(const fs_segment* segments, size_t count, double declared_mass,
                                fs_measure** out) {
    return guard([&] {
        need(out, "out");
        need(segments, "segments");
        std::vector<Segment> segs;
        for (size_t i = 0; i < count; ++i) {
            need(segments[i].density, "segment density");
            Segment s;
            s.a = segments[i].a;
            s.b = segments[i].b;
            s.density = Expr::parse(segments[i].density);
            s.alpha_a = segments[i].alpha_a;
            s.alpha_b = segments[i].alpha_b;
            segs.push_back(s);
        }
        *out = new fs_measure{Measure(segs, {}, {"expression", {}}, declared_mass)};
    });
}

fs_measure* fs_measure_clone(const fs_measure* m) {
    if (!m) return nullptr;
    try {
        return new fs_measure{m->m};
    } catch (...) {
        record(FS_INTERNAL, "out of memory");
        return nullptr;
    }
}

void fs_measure_free(fs_measure* m) { delete m; }

fs_status fs_measure_derive_singular(fs_measure* m, double x_star) {
    return guard([&] {
        need(m, "measure");
        m->m = m->m.with_singular_point(m->m.derive_singular(x_star));
    });
}

fs_status fs_measure_declare_singular(fs_measure* m, double x_star, fs_kind kind, int k, double c0,
                                      const char* h) {
    return guard([&] {
        need(m, "measure");
        if (kind < FS_INTERIOR || kind > FS_LEFT_EDGE) fail(Code::InvalidArgument, "unknown kind");
        SingularPoint sp;
        sp.x_star = x_star;
        sp.kind = static_cast<SingularKind>(kind);
        sp.k = k;
        sp.c0 = c0;
        sp.h = Expr::parse(h ? h : "1");
        m->m = m->m.with_singular_point(sp);
    });
}

size_t fs_measure_singular_count(const fs_measure* m) { return m ? m->m.singular_points().size() : 0; }

fs_status fs_measure_singular(const fs_measure* m, size_t index, fs_singular* out) {
    return guard([&] {
        need(m, "measure");
        need(out, "out");
        if (index >= m->m.singular_points().size()) fail(Code::OutOfRange, "singular index out of range");
        *out = to_c(m->m.singular_points()[index]);
    });
}

fs_status fs_measure_support(const fs_measure* m, double* lo, double* hi) {
    return guard([&] {
        need(m, "measure");
        if (lo) *lo = m->m.support_lo();
        if (hi) *hi = m->m.support_hi();
    });
}

fs_status fs_measure_mass(const fs_measure* m, double* out) {
    return guard([&] {
        need(m, "measure");
        need(out, "out");
        *out = m->m.mass();
    });
}

fs_status fs_measure_integrate(const fs_measure* m, const char* f, double* out) {
    return guard([&] {
        need(m, "measure");
        need(f, "f");
        need(out, "out");
        *out = integrate(m->m, Expr::parse(f));
    });
}

fs_status fs_cauchy_transform(const fs_measure* m, double re, double im, double* g_re, double* g_im) {
    return guard([&] {
        need(m, "measure");
        cplx g = cauchy_transform(m->m, {re, im});
        if (g_re) *g_re = g.real();
        if (g_im) *g_im = g.imag();
    });
}

fs_status fs_moment_g(const fs_measure* m, double x_star, int j, double* out) {
    return guard([&] {
        need(m, "measure");
        need(out, "out");
        *out = moment_g(m->m, x_star, j);
    });
}

fs_status fs_measure_quantiles(const fs_measure* m, int n, double* out) {
    return guard([&] {
        need(m, "measure");
        need(out, "out");
        auto q = measure_quantiles(m->m, n);
        std::copy(q.begin(), q.end(), out);
    });
}

// ---- free convolution ---------------------------------------------------------

fs_status fs_tau_crit(const fs_measure* m, double x_star, double* out) {
    return guard([&] {
        need(m, "measure");
        need(out, "out");
        *out = tau_crit(m->m, x_star);
    });
}

fs_status fs_x_star_tau(const fs_measure* m, double x_star, double tau, double* out) {
    return guard([&] {
        need(m, "measure");
        need(out, "out");
        *out = x_star_tau(m->m, x_star, tau);
    });
}

fs_status fs_density(const fs_measure* m, double tau, const double* x, size_t count, double* psi) {
    return guard([&] {
        need(m, "measure");
        need(x, "x");
        need(psi, "psi");
        SubordinationSolver s(m->m, tau);
        for (size_t i = 0; i < count; ++i) psi[i] = s.density(x[i]);
    });
}

// ---- singular points ------------------------------------------------------------

fs_status fs_classify(const fs_measure* m, double x_star, double tau, fs_critical* out) {
    return guard([&] {
        need(m, "measure");
        need(out, "out");
        CriticalData cd = classify(m->m, declared(m->m, x_star), tau);
        fs_critical& o = *out;
        o.x_star = cd.spec.x_star;
        o.kind = static_cast<fs_kind>(cd.spec.kind);
        o.k = cd.spec.k;
        o.kappa = cd.kappa;
        o.gamma = cd.gamma;
        o.c0 = cd.spec.c0;
        o.tau = cd.tau;
        o.tau_crit = cd.tau_crit;
        o.x_star_tau = cd.x_star_tau;
        o.x_star_tau_crit = cd.x_star_tau_crit;
        o.c_tau = cd.label == CaseLabel::Subcritical ? cd.c_tau(tau) : kNaN;
        o.pv = cd.pv;
        o.r = cd.r;
        o.theta = cd.theta;
        o.g2 = cd.g2;
        o.g3 = cd.g3;
        o.label = static_cast<fs_case>(cd.label);
    });
}

fs_status fs_critical_moments(const fs_measure* m, double x_star, double* out, size_t cap, size_t* count) {
    return guard([&] {
        need(m, "measure");
        const Measure& mm = m->m;
        const SingularPoint& sp = declared(mm, x_star);
        CriticalData cd = classify(mm, sp, tau_crit(mm, x_star));
        write_out(cd.g, out, cap, count);
    });
}

fs_status fs_predicted_local_law(const fs_measure* m, double x_star, double tau, fs_side side,
                                 fs_power_law* out) {
    return guard([&] {
        need(m, "measure");
        need(out, "out");
        CriticalData cd = classify(m->m, declared(m->m, x_star), tau);
        *out = to_c(predicted_local_law(cd, tau, to_side(side)));
    });
}

fs_status fs_local_samples(const fs_measure* m, double x_star, double tau, fs_side side, double lo,
                           double hi, int count, double* distance, double* psi) {
    return guard([&] {
        need(m, "measure");
        need(distance, "distance");
        need(psi, "psi");
        const SingularPoint& sp = declared(m->m, x_star);
        SubordinationSolver s(m->m, tau);
        auto smp = local_samples(s, sp, to_side(side), lo, hi, count);
        for (size_t i = 0; i < smp.size(); ++i) {
            distance[i] = smp[i].first;
            psi[i] = smp[i].second;
        }
    });
}

fs_status fs_fit_power_law(const double* distance, const double* psi, size_t count, double lo, double hi,
                           fs_power_law* out) {
    return guard([&] {
        need(distance, "distance");
        need(psi, "psi");
        need(out, "out");
        std::vector<std::pair<double, double>> smp;
        for (size_t i = 0; i < count; ++i) smp.emplace_back(distance[i], psi[i]);
        *out = to_c(fit_power_law(smp, lo, hi));
    });
}

// ---- finite-n kernels -----------------------------------------------------------

fs_status fs_kernel_create(const double* V, size_t vcount, int n, int degree_max, const fs_measure* m,
                           double x_star, fs_kernel** out) {
    return guard([&] {
        need(out, "out");
        Potential pot = potential_from(V, vcount);
        int deg = degree_max > 0 ? degree_max : std::max(n - 1, 0);
        OrthoBasis basis(pot, n, deg);
        std::optional<LocalScaling> sc;
        if (m) sc = local_scaling(declared(m->m, x_star), pot);
        auto k = std::make_unique<fs_kernel>();
        k->engine = std::make_unique<KernelEngine>(std::move(basis), sc);
        *out = k.release();
    });
}

void fs_kernel_free(fs_kernel* k) { delete k; }

fs_status fs_kernel_recurrence(const fs_kernel* k, double* a, double* b, size_t cap) {
    return guard([&] {
        need(k, "kernel");
        const auto& ba = k->engine->basis();
        for (size_t i = 0; i < cap && i < ba.a().size(); ++i) {
            if (a) a[i] = ba.a()[i];
            if (b) b[i] = ba.b()[i];
        }
    });
}

fs_status fs_kernel_M(const fs_kernel* k, double x, double y, double* out) {
    return guard([&] {
        need(k, "kernel");
        need(out, "out");
        *out = k->engine->kernel_M(x, y);
    });
}

fs_status fs_kernel_X(const fs_kernel* k, double x, double y, double tau, fs_kernel_value* out) {
    return guard([&] {
        need(k, "kernel");
        need(out, "out");
        KernelValue v = k->engine->kernel_X(x, y, tau);
        *out = {v.value, v.imag, v.error};
    });
}

fs_status fs_kernel_multitime(const fs_kernel* k, double x, double y, double t, double tprime,
                              fs_kernel_value* out) {
    return guard([&] {
        need(k, "kernel");
        need(out, "out");
        KernelValue v = k->engine->kernel_multitime(x, y, t, tprime);
        *out = {v.value, v.imag, v.error};
    });
}

fs_status fs_kernel_rescaled(const fs_kernel* k, double u, double v, double t, double tprime, double* out) {
    return guard([&] {
        need(k, "kernel");
        need(out, "out");
        *out = k->engine->rescaled_kernel(u, v, t, tprime);
    });
}

fs_status fs_kernel_gauge(const fs_kernel* k, double u, double t, fs_gauge* out) {
    return guard([&] {
        need(k, "kernel");
        need(out, "out");
        GaugeData g = k->engine->gauge(u, t);
        *out = {g.u, g.t, g.s_n, g.R_n_value, g.R_hat, g.H_hat, g.residual};
    });
}

fs_status fs_kernel_overlap(const fs_kernel* k, double t, double* out) {
    return guard([&] {
        need(k, "kernel");
        need(out, "out");
        Eigen::MatrixXd M = k->engine->overlap_matrix(t);
        for (int i = 0; i < M.rows(); ++i)
            for (int j = 0; j < M.cols(); ++j) out[i * M.cols() + j] = M(i, j);
    });
}

fs_status fs_kernel_log_G(int n, double x, double y, double t, double tprime, double* out) {
    return guard([&] {
        need(out, "out");
        *out = KernelEngine::log_G(n, x, y, t, tprime);
    });
}

// ---- Monte Carlo -----------------------------------------------------------------

fs_status fs_sample_gue_eigs(int n, uint64_t seed, uint64_t stream, double* out) {
    return guard([&] {
        need(out, "out");
        RngStream rng(seed, stream);
        auto e = hermitian_eigenvalues(sample_gue(n, rng));
        std::copy(e.begin(), e.end(), out);
    });
}

fs_status fs_sample_perturbed(const double* eigs, size_t n, double tau, uint64_t seed, uint64_t stream,
                              double* out) {
    return guard([&] {
        need(eigs, "eigs");
        need(out, "out");
        RngStream rng(seed, stream);
        auto e = sample_perturbed(std::vector<double>(eigs, eigs + n), tau, rng);
        std::copy(e.begin(), e.end(), out);
    });
}

fs_status fs_ue_sampler_create(const double* V, size_t vcount, int n, uint64_t seed, uint64_t stream,
                               int steps, int burn_in, fs_ue_sampler** out) {
    return guard([&] {
        need(out, "out");
        McmcOptions opt;
        opt.steps = steps;
        opt.burn_in = burn_in;
        *out = new fs_ue_sampler{UeSampler(potential_from(V, vcount), n, RngStream(seed, stream), opt)};
    });
}

fs_status fs_ue_sampler_next(fs_ue_sampler* s, double* out) {
    return guard([&] {
        need(s, "sampler");
        need(out, "out");
        auto e = s->s.next();
        std::copy(e.begin(), e.end(), out);
    });
}

double fs_ue_sampler_acceptance(const fs_ue_sampler* s) { return s ? s->s.acceptance() : kNaN; }
int fs_ue_sampler_mixing_warning(const fs_ue_sampler* s) { return s && s->s.mixing_warning() ? 1 : 0; }
void fs_ue_sampler_free(fs_ue_sampler* s) { delete s; }

fs_status fs_sample_nibm(const double* initial, int n, int replicas, const double* times, size_t ntimes,
                         uint64_t seed, uint64_t stream_base, double* out, int* resampled) {
    return guard([&] {
        need(initial, "initial");
        need(times, "times");
        need(out, "out");
        auto init = [&](int r) {
            const double* p = initial + size_t(r) * size_t(n);
            return std::vector<double>(p, p + n);
        };
        PathEnsemble pe = sample_nibm(init, std::vector<double>(times, times + ntimes), n, replicas, seed,
                                      stream_base);
        double* o = out;
        for (const auto& rep : pe.paths)
            for (const auto& tk : rep) o = std::copy(tk.begin(), tk.end(), o);
        if (resampled) *resampled = pe.resampled;
    });
}

fs_status fs_histogram(const double* samples, size_t count, double lo, double hi, int bins, double* centers,
                       double* heights) {
    return guard([&] {
        need(samples, "samples");
        Histogram h = empirical_density(std::vector<double>(samples, samples + count), lo, hi, bins);
        if (centers) std::copy(h.centers.begin(), h.centers.end(), centers);
        if (heights) std::copy(h.heights.begin(), h.heights.end(), heights);
    });
}

fs_status fs_ks_two_sample(const double* a, size_t na, const double* b, size_t nb, double* statistic,
                           double* p_value) {
    return guard([&] {
        need(a, "a");
        need(b, "b");
        KsResult r = ks_two_sample(std::vector<double>(a, a + na), std::vector<double>(b, b + nb));
        if (statistic) *statistic = r.statistic;
        if (p_value) *p_value = r.p_value;
    });
}

// ---- configuration -------------------------------------------------------------

static void adopt(fs_config* c) {
    if (c->rc.measure) c->measure = std::make_unique<fs_measure>(fs_measure{*c->rc.measure});
}

fs_status fs_config_load(const char* path, fs_config** out) {
    return guard([&] {
        need(path, "path");
        need(out, "out");
        auto c = std::make_unique<fs_config>();
        c->rc = load_config(path);
        adopt(c.get());
        *out = c.release();
    });
}

fs_status fs_config_parse(const char* text, fs_config** out) {
    return guard([&] {
        need(text, "text");
        need(out, "out");
        auto c = std::make_unique<fs_config>();
        c->rc = parse_config(text);
        adopt(c.get());
        *out = c.release();
    });
}

void fs_config_free(fs_config* c) { delete c; }

const fs_measure* fs_config_measure(const fs_config* c) { return c ? c->measure.get() : nullptr; }

fs_status fs_config_numbers(const fs_config* c, const char* key, double* out, size_t cap, size_t* count) {
    return guard([&] {
        need(c, "config");
        need(key, "key");
        const RunConfig& rc = c->rc;
        const std::string k = key;
        std::vector<double> v;
        auto opt = [&](const std::optional<double>& x) {
            if (x) v.push_back(*x);
        };
        if (k == "tau") v = rc.tau;
        else if (k == "t") opt(rc.t);
        else if (k == "tprime") opt(rc.tprime);
        else if (k == "n") v.assign(rc.n.begin(), rc.n.end());
        else if (k == "grid") {
            if (rc.grid) v = {rc.grid->lo, rc.grid->hi, double(rc.grid->count)};
        } else if (k == "window") {
            if (rc.window) v = {rc.window->first, rc.window->second};
        } else if (k == "times") v = rc.times;
        else if (k == "seed") {
            if (rc.seed) v.push_back(double(*rc.seed));
        } else if (k == "potential") {
            if (rc.potential) v = rc.potential->coefficients();
        } else if (k == "x_star") {
            if (rc.singular) v.push_back(rc.singular->x_star);
        } else if (k == "mc.replicas") v.push_back(rc.mc.replicas);
        else if (k == "mc.bins") v.push_back(rc.mc.bins);
        else if (k == "mc.lo") v.push_back(rc.mc.lo);
        else if (k == "mc.hi") v.push_back(rc.mc.hi);
        else if (k == "mc.mcmc_steps") v.push_back(rc.mc.mcmc_steps);
        else if (k == "mc.burn_in") v.push_back(rc.mc.burn_in);
        else fail(Code::InvalidArgument, "unknown config key '" + k + "'");
        write_out(v, out, cap, count);
    });
}

fs_status fs_config_seed(const fs_config* c, uint64_t* seed, int* present) {
    return guard([&] {
        need(c, "config");
        need(present, "present");
        *present = c->rc.seed.has_value();
        if (seed && c->rc.seed) *seed = *c->rc.seed;
    });
}

fs_status fs_config_string(const fs_config* c, const char* key, char* buf, size_t cap, size_t* length) {
    return guard([&] {
        need(c, "config");
        need(key, "key");
        const std::string k = key;
        std::string v;
        if (k == "out") v = c->rc.out_dir;
        else if (k == "mc.initial") v = c->rc.mc.initial;
        else fail(Code::InvalidArgument, "unknown config key '" + k + "'");
        if (length) *length = v.size();
        if (buf && cap) {
            size_t m = std::min(cap - 1, v.size());
            std::memcpy(buf, v.data(), m);
            buf[m] = '\0';
        }
    });
}

} // extern "C"
