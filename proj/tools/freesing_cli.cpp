#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "freesing/freesing.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Failure {
    int exit_code;
    std::string message;
};

int exit_for(fs_status s) {
    switch (s) {
    case FS_CONFIG:
    case FS_INVALID_ARGUMENT:
    case FS_OUT_OF_RANGE: return 2;
    default: return 3;
    }
}

void check(fs_status s) {
    if (s != FS_OK) throw Failure{exit_for(s), std::string(fs_status_name(s)) + ": " + fs_last_error()};
}

[[noreturn]] void config_error(const std::string& msg) { throw Failure{2, "Config: " + msg}; }

void warn(const std::string& command, const std::string& msg) {
    json w;
    w["level"] = "warning";
    w["command"] = command;
    w["message"] = msg;
    std::cerr << w.dump() << "\n";
}

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <class... T>
std::string row(T... v) {
    std::string s;
    ((s += (s.empty() ? "" : ",") + num(double(v))), ...);
    return s + "\n";
}

struct Grid {
    double lo, hi;
    int count;
    std::vector<double> points() const {
        std::vector<double> g(count);
        for (int i = 0; i < count; ++i) g[i] = count == 1 ? lo : lo + (hi - lo) * i / double(count - 1);
        return g;
    }
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string p; std::getline(ss, p, sep);) out.push_back(p);
    return out;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        config_error("cannot parse " + what + " '" + s + "'");
    }
}

Grid parse_grid(const std::string& s) {
    auto p = split(s, ':');
    if (p.size() != 3) config_error("--grid expects LO:HI:COUNT");
    Grid g{parse_double(p[0], "grid lo"), parse_double(p[1], "grid hi"), 0};
    double c = parse_double(p[2], "grid count");
    if (c != std::floor(c) || c < 1 || c > 1e7) config_error("grid count must be a positive integer");
    g.count = int(c);
    if (g.count > 1 && !(g.hi > g.lo)) config_error("grid needs LO < HI");
    return g;
}

std::pair<double, double> parse_window(const std::string& s) {
    auto p = split(s, ':');
    if (p.size() != 2) config_error("--window expects E1:E2");
    double a = parse_double(p[0], "window"), b = parse_double(p[1], "window");
    if (!(a > 0) || !(b > a)) config_error("window needs 0 < E1 < E2");
    return {a, b};
}

// Command-line values override the configuration file.
struct Options {
    std::string config;
    std::vector<double> tau;
    std::optional<double> t, tprime;
    std::optional<int> n;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string grid, window;
};

class Context {
public:
    Context(const Options& o, std::string command) : opt_(o), cmd_(std::move(command)) {
        if (!o.config.empty()) check(fs_config_load(o.config.c_str(), &cfg_));
    }
    ~Context() { fs_config_free(cfg_); }
    Context(const Context&) = delete;
    Context& operator=(const Context&) = delete;

    const std::string& command() const { return cmd_; }

    std::vector<double> numbers(const char* key) const {
        if (!cfg_) return {};
        size_t count = 0;
        check(fs_config_numbers(cfg_, key, nullptr, 0, &count));
        std::vector<double> v(count);
        check(fs_config_numbers(cfg_, key, v.data(), v.size(), &count));
        return v;
    }
    std::optional<double> number(const char* key) const {
        auto v = numbers(key);
        if (v.empty()) return std::nullopt;
        return v.front();
    }
    std::string string(const char* key, const std::string& dflt) const {
        if (!cfg_) return dflt;
        size_t len = 0;
        check(fs_config_string(cfg_, key, nullptr, 0, &len));
        std::string s(len + 1, '\0');
        check(fs_config_string(cfg_, key, s.data(), s.size(), &len));
        s.resize(len);
        return s;
    }

    const fs_measure* measure() const {
        const fs_measure* m = cfg_ ? fs_config_measure(cfg_) : nullptr;
        if (!m) config_error("command '" + cmd_ + "' needs a [measure] section");
        return m;
    }
    bool has_measure() const { return cfg_ && fs_config_measure(cfg_); }
    bool has_singular() const { return has_measure() && fs_measure_singular_count(measure()) > 0; }
    fs_singular singular() const {
        if (!has_singular()) config_error("command '" + cmd_ + "' needs a [singular] declaration");
        fs_singular sp;
        check(fs_measure_singular(measure(), 0, &sp));
        return sp;
    }
    std::vector<double> potential() const {
        auto v = numbers("potential");
        if (v.empty()) config_error("command '" + cmd_ + "' needs a [potential] section");
        return v;
    }

    std::vector<double> taus() const { return opt_.tau.empty() ? numbers("tau") : opt_.tau; }
    std::vector<double> taus_required() const {
        auto v = taus();
        if (v.empty()) config_error("command '" + cmd_ + "' needs --tau or run.tau");
        for (double x : v)
            if (!(x > 0)) config_error("tau must be positive");
        return v;
    }
    std::optional<double> t() const { return opt_.t ? opt_.t : number("t"); }
    std::optional<double> tprime() const { return opt_.tprime ? opt_.tprime : number("tprime"); }
    int n(int dflt) const {
        if (opt_.n) return *opt_.n;
        auto v = number("n");
        return v ? int(*v) : dflt;
    }
    std::uint64_t seed() const {
        if (opt_.seed) return *opt_.seed;
        std::uint64_t s = 0;
        int present = 0;
        if (cfg_) check(fs_config_seed(cfg_, &s, &present));
        if (!present) config_error("command '" + cmd_ + "' needs a seed (--seed or top-level seed)");
        return s;
    }
    std::optional<Grid> grid() const {
        if (!opt_.grid.empty()) return parse_grid(opt_.grid);
        auto v = numbers("grid");
        if (v.size() == 3) return Grid{v[0], v[1], int(v[2])};
        return std::nullopt;
    }
    std::optional<std::pair<double, double>> window() const {
        if (!opt_.window.empty()) return parse_window(opt_.window);
        auto v = numbers("window");
        if (v.size() == 2) return std::make_pair(v[0], v[1]);
        return std::nullopt;
    }
    std::string out_dir() const { return !opt_.out.empty() ? opt_.out : string("out", "."); }

private:
    const Options& opt_;
    std::string cmd_;
    fs_config* cfg_ = nullptr;
};

// Files are staged in memory and written only after the command succeeded.
class Outputs {
public:
    void add(const std::string& name, std::string content) { files_[name] = std::move(content); }
    void add_json(const std::string& name, const json& j) { add(name, j.dump(2) + "\n"); }
    void commit(const std::string& dir) const {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw Failure{2, "cannot create output directory '" + dir + "': " + ec.message()};
        for (const auto& [name, content] : files_) {
            fs::path final_path = fs::path(dir) / name;
            fs::path tmp = final_path;
            tmp += ".tmp";
            {
                std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
                f << content;
                if (!f) throw Failure{3, "cannot write '" + tmp.string() + "'"};
            }
            fs::rename(tmp, final_path, ec);
            if (ec) throw Failure{3, "cannot rename to '" + final_path.string() + "': " + ec.message()};
        }
    }

private:
    std::map<std::string, std::string> files_;
};

std::string gnuplot_stub(const std::string& csv, const std::string& x, const std::string& y,
                         const std::string& using_cols) {
    std::string s;
    s += "# gnuplot script for " + csv + "\n";
    s += "set datafile separator ','\n";
    s += "set key autotitle columnhead\n";
    s += "set xlabel '" + x + "'\n";
    s += "set ylabel '" + y + "'\n";
    s += "plot '" + csv + "' using " + using_cols + " with lines\n";
    return s;
}

// ---- shared pieces ----------------------------------------------------------

Grid default_density_grid(const fs_measure* m, double tau) {
    double lo, hi;
    check(fs_measure_support(m, &lo, &hi));
    double pad = 2 * std::sqrt(tau) + 0.25;
    double r = std::max(std::fabs(lo - pad), std::fabs(hi + pad));
    if (lo + hi == 0) return Grid{-r, r, 401};
    return Grid{lo - pad, hi + pad, 401};
}

const char* side_text(fs_side s) { return s == FS_LEFT ? "left" : s == FS_RIGHT ? "right" : "both"; }

json critical_fields(const fs_critical& c) {
    json r;
    r["tau"] = c.tau;
    r["tau_crit"] = c.tau_crit;
    r["x_star"] = c.x_star;
    r["kind"] = fs_kind_name(c.kind);
    r["k"] = c.k;
    r["kappa"] = c.kappa;
    r["gamma"] = c.gamma;
    r["c0"] = c.c0;
    r["x_star_tau"] = c.x_star_tau;
    r["x_star_tau_crit"] = c.x_star_tau_crit;
    r["c_tau"] = jnum(c.c_tau);
    r["case"] = fs_case_name(c.label);
    r["r"] = jnum(c.r);
    r["theta"] = jnum(c.theta);
    r["g2"] = jnum(c.g2);
    r["g3"] = jnum(c.g3);
    return r;
}

// Predicted law on one side; exponent is null where the density vanishes identically.
json predicted_record(const fs_measure* m, const fs_singular& sp, double tau, fs_side side) {
    fs_critical c;
    check(fs_classify(m, sp.x_star, tau, &c));
    json r = critical_fields(c);
    r["side"] = side_text(side);
    r["source"] = "predicted";
    fs_power_law p;
    fs_status s = fs_predicted_local_law(m, sp.x_star, tau, side, &p);
    if (s == FS_SIDE_UNDEFINED) {
        r["exponent"] = nullptr;
        r["prefactor"] = nullptr;
        r["note"] = "density vanishes identically on this side";
    } else {
        check(s);
        r["exponent"] = p.exponent;
        r["prefactor"] = p.prefactor;
    }
    r["residual"] = nullptr;
    r["window"] = nullptr;
    return r;
}

std::pair<double, double> default_window(const fs_measure* m) {
    double lo, hi;
    check(fs_measure_support(m, &lo, &hi));
    double d = hi - lo;
    return {1e-3 * d, 1e-2 * d};
}

json fit_record(const fs_measure* m, const fs_singular& sp, double tau, fs_side side,
                std::pair<double, double> win, std::string* samples_csv) {
    json r = predicted_record(m, sp, tau, side);
    r["source"] = "fit";
    r["predicted_exponent"] = r["exponent"];
    r["predicted_prefactor"] = r["prefactor"];
    r["window"] = {win.first, win.second};
    const int count = 32;
    std::vector<double> d(count), psi(count);
    check(fs_local_samples(m, sp.x_star, tau, side, win.first, win.second, count, d.data(), psi.data()));
    if (samples_csv)
        for (int i = 0; i < count; ++i) *samples_csv += std::string(side_text(side)) + "," + row(tau, d[i], psi[i]);
    if (r["predicted_exponent"].is_null()) {
        double mx = *std::max_element(psi.begin(), psi.end());
        r["exponent"] = nullptr;
        r["prefactor"] = nullptr;
        r["max_psi"] = mx;
        return r;
    }
    fs_power_law p;
    check(fs_fit_power_law(d.data(), psi.data(), d.size(), win.first, win.second, &p));
    r["exponent"] = p.exponent;
    r["prefactor"] = p.prefactor;
    r["residual"] = p.residual;
    double pe = r["predicted_exponent"], pp = r["predicted_prefactor"];
    r["exponent_error"] = p.exponent - pe;
    r["prefactor_ratio"] = p.prefactor / pp;
    return r;
}

json report_header(const Context& cx) {
    json j;
    j["command"] = cx.command();
    j["version"] = fs_version();
    return j;
}

std::vector<fs_side> sides_for(const fs_singular&) { return {FS_LEFT, FS_RIGHT}; }

// M-eigenvalues for replica r: quantiles of mu0, or a unitary-ensemble chain.
class InitialLaw {
public:
    InitialLaw(const Context& cx, int n, std::uint64_t seed) : n_(n) {
        std::string kind = cx.string("mc.initial", "quantiles");
        if (kind == "quantiles") {
            q_.resize(n);
            check(fs_measure_quantiles(cx.measure(), n, q_.data()));
        } else {
            auto V = cx.potential();
            int steps = int(cx.number("mc.mcmc_steps").value_or(0));
            int burn = int(cx.number("mc.burn_in").value_or(0));
            check(fs_ue_sampler_create(V.data(), V.size(), n, seed, std::uint64_t(1) << 62, steps, burn, &ue_));
        }
    }
    ~InitialLaw() { fs_ue_sampler_free(ue_); }
    InitialLaw(const InitialLaw&) = delete;
    InitialLaw& operator=(const InitialLaw&) = delete;

    std::vector<double> next() {
        if (!ue_) return q_;
        std::vector<double> e(n_);
        check(fs_ue_sampler_next(ue_, e.data()));
        return e;
    }
    bool sampled() const { return ue_ != nullptr; }
    double acceptance() const { return ue_ ? fs_ue_sampler_acceptance(ue_) : kNaN; }
    bool mixing_warning() const { return ue_ && fs_ue_sampler_mixing_warning(ue_); }

private:
    int n_;
    std::vector<double> q_;
    fs_ue_sampler* ue_ = nullptr;
};

// ---- commands -----------------------------------------------------------------

void cmd_density(const Context& cx, Outputs& out) {
    const fs_measure* m = cx.measure();
    std::string csv = "tau,x,psi\n";
    for (double tau : cx.taus_required()) {
        Grid g = cx.grid().value_or(default_density_grid(m, tau));
        auto x = g.points();
        std::vector<double> psi(x.size());
        check(fs_density(m, tau, x.data(), x.size(), psi.data()));
        for (size_t i = 0; i < x.size(); ++i) csv += row(tau, x[i], psi[i]);
    }
    out.add("density.csv", csv);
    out.add("density.gp", gnuplot_stub("density.csv", "x", "psi", "2:3"));
}

void cmd_critical(const Context& cx, Outputs& out) {
    const fs_measure* m = cx.measure();
    fs_singular sp = cx.singular();
    double tc;
    check(fs_tau_crit(m, sp.x_star, &tc));
    json j = report_header(cx);
    json recs = json::array();
    for (fs_side s : sides_for(sp)) recs.push_back(predicted_record(m, sp, tc, s));
    size_t cnt = 0;
    check(fs_critical_moments(m, sp.x_star, nullptr, 0, &cnt));
    std::vector<double> g(cnt);
    check(fs_critical_moments(m, sp.x_star, g.data(), g.size(), &cnt));
    json gj = json::array();
    for (double v : g) gj.push_back(jnum(v));
    j["moments_g"] = gj;
    auto V = cx.numbers("potential");
    if (V.size() >= 3 && sp.kind == FS_INTERIOR) {
        double v2 = 0;
        for (size_t i = V.size(); i-- > 2;) v2 = v2 * sp.x_star + double(i) * double(i - 1) * V[i];
        double from_v = -2.0 / v2;
        j["tau_crit_from_potential"] = jnum(from_v);
        j["tau_crit_potential_residual"] = jnum(std::fabs(from_v - tc));
    }
    j["records"] = recs;
    out.add_json("critical.json", j);
}

void cmd_classify(const Context& cx, Outputs& out) {
    const fs_measure* m = cx.measure();
    fs_singular sp = cx.singular();
    json j = report_header(cx);
    json recs = json::array();
    for (double tau : cx.taus_required())
        for (fs_side s : sides_for(sp)) recs.push_back(predicted_record(m, sp, tau, s));
    j["records"] = recs;
    out.add_json("classify.json", j);
}

json fit_records(const Context& cx, const std::vector<double>& taus, std::string* csv) {
    const fs_measure* m = cx.measure();
    fs_singular sp = cx.singular();
    auto win = cx.window().value_or(default_window(m));
    json recs = json::array();
    for (double tau : taus)
        for (fs_side s : sides_for(sp)) recs.push_back(fit_record(m, sp, tau, s, win, csv));
    return recs;
}

void cmd_fit(const Context& cx, Outputs& out) {
    std::string csv = "side,tau,distance,psi\n";
    json j = report_header(cx);
    j["records"] = fit_records(cx, cx.taus_required(), &csv);
    out.add_json("fit.json", j);
    out.add("fit_samples.csv", csv);
    out.add("fit_samples.gp", "set logscale xy\n" + gnuplot_stub("fit_samples.csv", "distance", "psi", "3:4"));
}

void cmd_report(const Context& cx, Outputs& out) {
    const fs_measure* m = cx.measure();
    fs_singular sp = cx.singular();
    double tc;
    check(fs_tau_crit(m, sp.x_star, &tc));
    auto taus = cx.taus();
    if (std::find(taus.begin(), taus.end(), tc) == taus.end()) taus.push_back(tc);
    json j = report_header(cx);
    json recs = json::array();
    for (fs_side s : sides_for(sp)) recs.push_back(predicted_record(m, sp, tc, s));
    for (auto& r : fit_records(cx, taus, nullptr)) recs.push_back(r);
    j["records"] = recs;
    out.add_json("report.json", j);
}

struct KernelHandle {
    fs_kernel* k = nullptr;
    ~KernelHandle() { fs_kernel_free(k); }
};

void make_kernel(const Context& cx, int n, KernelHandle& kh, bool scaled) {
    auto V = cx.potential();
    const fs_measure* m = scaled ? cx.measure() : nullptr;
    double xs = scaled ? cx.singular().x_star : 0.0;
    check(fs_kernel_create(V.data(), V.size(), n, 0, m, xs, &kh.k));
}

Grid kernel_grid(const Context& cx) {
    if (auto g = cx.grid()) return *g;
    if (cx.has_measure()) {
        double lo, hi;
        check(fs_measure_support(cx.measure(), &lo, &hi));
        return Grid{lo - 1, hi + 1, 121};
    }
    return Grid{-3, 3, 121};
}

void cmd_kernel(const Context& cx, Outputs& out) {
    int n = cx.n(4);
    KernelHandle kh;
    make_kernel(cx, n, kh, false);
    auto taus = cx.taus();
    std::string csv = "x,one_point_M";
    for (double tau : taus) csv += ",one_point_X_tau_" + num(tau);
    csv += "\n";
    for (double x : kernel_grid(cx).points()) {
        double km;
        check(fs_kernel_M(kh.k, x, x, &km));
        csv += num(x) + "," + num(km / n);
        for (double tau : taus) {
            fs_kernel_value v;
            check(fs_kernel_X(kh.k, x, x, tau, &v));
            csv += "," + num(v.value / n);
        }
        csv += "\n";
    }
    out.add("kernel.csv", csv);
    out.add("kernel.gp", gnuplot_stub("kernel.csv", "x", "density", "1:2"));
}

void cmd_multitime(const Context& cx, Outputs& out) {
    int n = cx.n(4);
    auto t = cx.t(), tp = cx.tprime();
    if (!t || !tp) config_error("multitime needs --t and --tprime");
    if (!(*t > 0 && *t < 1 && *tp > 0 && *tp < 1)) config_error("t and tprime must lie in (0, 1)");
    bool scaled = cx.has_singular() && !cx.numbers("potential").empty();
    KernelHandle kh;
    make_kernel(cx, n, kh, scaled);
    auto pts = kernel_grid(cx).points();
    std::string csv = "x,y,value,imag,error\n";
    for (double x : pts)
        for (double y : pts) {
            fs_kernel_value v;
            check(fs_kernel_multitime(kh.k, x, y, *t, *tp, &v));
            csv += row(x, y, v.value, v.imag, v.error);
        }
    out.add("multitime.csv", csv);
    out.add("multitime.gp", "set datafile separator ','\nsplot 'multitime.csv' using 1:2:3 with points\n");
    if (scaled) {
        std::string rs = "u,v,rescaled\n";
        for (double u : pts)
            for (double v : pts) {
                double val;
                check(fs_kernel_rescaled(kh.k, u, v, *t, *tp, &val));
                rs += row(u, v, val);
            }
        out.add("rescaled.csv", rs);
    }
}

double bin_average(const fs_measure* m, double tau, double a, double b) {
    const int k = 8;
    std::vector<double> x(k), psi(k);
    for (int i = 0; i < k; ++i) x[i] = a + (i + 0.5) * (b - a) / k;
    check(fs_density(m, tau, x.data(), k, psi.data()));
    double s = 0;
    for (double p : psi) s += p;
    return s / k;
}

void cmd_mc(const Context& cx, Outputs& out) {
    const int n = cx.n(200);
    const std::uint64_t seed = cx.seed();
    const int replicas = int(cx.number("mc.replicas").value_or(100));
    const int bins = int(cx.number("mc.bins").value_or(61));
    auto taus = cx.taus_required();
    const bool ref = cx.has_measure();

    InitialLaw init(cx, n, seed);
    std::vector<std::vector<double>> M(replicas);
    for (auto& e : M) e = init.next();
    if (init.mixing_warning())
        warn(cx.command(), "Metropolis acceptance " + num(init.acceptance()) + " outside [0.2, 0.6]");

    std::string csv = "tau,center,height,reference\n";
    json j = report_header(cx);
    j["n"] = n;
    j["replicas"] = replicas;
    j["seed"] = seed;
    j["initial"] = init.sampled() ? "ue" : "quantiles";
    if (init.sampled()) j["acceptance"] = init.acceptance();
    json recs = json::array();
    for (size_t ti = 0; ti < taus.size(); ++ti) {
        const double tau = taus[ti];
        std::vector<double> all;
        for (int r = 0; r < replicas; ++r) {
            std::vector<double> e(n);
            check(fs_sample_perturbed(M[r].data(), n, tau, seed, (std::uint64_t(ti) << 32) + r, e.data()));
            all.insert(all.end(), e.begin(), e.end());
        }
        double lo = cx.number("mc.lo").value_or(0), hi = cx.number("mc.hi").value_or(0);
        if (!(hi > lo)) {
            double a = *std::min_element(all.begin(), all.end()), b = *std::max_element(all.begin(), all.end());
            if (ref) {
                double s0, s1;
                check(fs_measure_support(cx.measure(), &s0, &s1));
                a = std::min(a, s0 - 2 * std::sqrt(tau));
                b = std::max(b, s1 + 2 * std::sqrt(tau));
            }
            double r = std::max(std::fabs(a), std::fabs(b)) + 0.1;
            lo = -r;
            hi = r;
        }
        std::vector<double> c(bins), h(bins);
        check(fs_histogram(all.data(), all.size(), lo, hi, bins, c.data(), h.data()));
        const double w = (hi - lo) / bins;
        double mass = 0;
        for (double v : h) mass += v * w;
        if (mass < 0.999) warn(cx.command(), "histogram range misses " + num(1 - mass) + " of the mass");

        json rec;
        rec["tau"] = tau;
        rec["bins"] = bins;
        rec["lo"] = lo;
        rec["hi"] = hi;
        rec["mass_in_range"] = mass;
        double sup = 0;
        for (int i = 0; i < bins; ++i) {
            double rv = ref ? bin_average(cx.measure(), tau, c[i] - w / 2, c[i] + w / 2) : kNaN;
            if (ref) sup = std::max(sup, std::fabs(rv - h[i]));
            csv += row(tau, c[i], h[i], rv);
        }
        rec["sup_deviation"] = ref ? json(sup) : json(nullptr);
        if (cx.has_singular()) {
            fs_singular sp = cx.singular();
            fs_critical cd;
            check(fs_classify(cx.measure(), sp.x_star, tau, &cd));
            rec["x_star_tau"] = cd.x_star_tau;
            int i0 = std::clamp(int((cd.x_star_tau - lo) / w), 0, bins - 1);
            rec["height_at_x_star_tau"] = h[i0];
            // Power-law fit of the histogram around x*_tau on both sides.
            auto win = std::make_pair(1.5 * w, 6.5 * w);
            std::vector<double> d, p;
            for (int i = 0; i < bins; ++i) {
                double dist = std::fabs(c[i] - cd.x_star_tau);
                if (dist >= win.first && dist <= win.second && h[i] > 0) d.push_back(dist), p.push_back(h[i]);
            }
            fs_power_law pl;
            if (fs_fit_power_law(d.data(), p.data(), d.size(), win.first, win.second, &pl) == FS_OK) {
                rec["exponent"] = pl.exponent;
                rec["prefactor"] = pl.prefactor;
                rec["residual"] = pl.residual;
                rec["window"] = {win.first, win.second};
            } else {
                warn(cx.command(), std::string("histogram power-law fit skipped: ") + fs_last_error());
            }
        }
        recs.push_back(rec);
    }
    j["records"] = recs;
    out.add("mc.csv", csv);
    out.add_json("mc.json", j);
    out.add("mc.gp", gnuplot_stub("mc.csv", "x", "density", "2:3"));
}

void cmd_nibm(const Context& cx, Outputs& out) {
    const int n = cx.n(50);
    const std::uint64_t seed = cx.seed();
    const int replicas = int(cx.number("mc.replicas").value_or(1000));
    std::vector<double> times = cx.numbers("times");
    if (times.empty()) {
        auto t = cx.t(), tp = cx.tprime();
        if (t) times.push_back(*t);
        if (tp) times.push_back(*tp);
    }
    if (times.empty()) config_error("nibm needs run.times or --t/--tprime");

    InitialLaw init(cx, n, seed);
    std::vector<double> M(size_t(replicas) * n);
    for (int r = 0; r < replicas; ++r) {
        auto e = init.next();
        std::copy(e.begin(), e.end(), M.begin() + size_t(r) * n);
    }
    if (init.mixing_warning())
        warn(cx.command(), "Metropolis acceptance " + num(init.acceptance()) + " outside [0.2, 0.6]");

    const size_t nt = times.size();
    std::vector<double> paths(size_t(replicas) * nt * n);
    int resampled = 0;
    check(fs_sample_nibm(M.data(), n, replicas, times.data(), nt, seed, 0, paths.data(), &resampled));
    if (resampled) warn(cx.command(), std::to_string(resampled) + " replicas redrawn after near-coincident eigenvalues");
    auto at = [&](int r, size_t k, int i) { return paths[(size_t(r) * nt + k) * n + i]; };

    std::string csv = "time,particle,mean,variance\n";
    for (size_t k = 0; k < nt; ++k)
        for (int i = 0; i < n; ++i) {
            double s = 0, s2 = 0;
            for (int r = 0; r < replicas; ++r) s += at(r, k, i), s2 += at(r, k, i) * at(r, k, i);
            double mean = s / replicas;
            csv += row(times[k], i, mean, s2 / replicas - mean * mean);
        }

    json j = report_header(cx);
    j["n"] = n;
    j["replicas"] = replicas;
    j["seed"] = seed;
    j["times"] = times;
    j["resampled"] = resampled;

    // Tracked particles: the ranks adjacent to the singular point (or the middle).
    std::vector<int> tracked;
    double t_crit = kNaN;
    if (cx.has_singular()) {
        fs_singular sp = cx.singular();
        std::vector<double> q(n);
        check(fs_measure_quantiles(cx.measure(), n, q.data()));
        int below = int(std::count_if(q.begin(), q.end(), [&](double v) { return v < sp.x_star; }));
        tracked = {std::max(below - 1, 0), std::min(below, n - 1)};
        double tc;
        check(fs_tau_crit(cx.measure(), sp.x_star, &tc));
        t_crit = tc / (1 + tc);
        j["t_crit"] = t_crit;
    } else {
        tracked = {std::max(n / 2 - 1, 0), n / 2};
    }
    tracked.erase(std::unique(tracked.begin(), tracked.end()), tracked.end());
    j["tracked_particles"] = tracked;

    json incs = json::array();
    for (size_t k = 0; k + 1 < nt; ++k) {
        // Conditional variance: residual of the increment regressed on the earlier position.
        double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0, cnt = 0;
        for (int r = 0; r < replicas; ++r)
            for (int i : tracked) {
                double x = at(r, k, i), y = at(r, k + 1, i) - x;
                sx += x, sy += y, sxx += x * x, sxy += x * y, syy += y * y, ++cnt;
            }
        double mx = sx / cnt, my = sy / cnt, cxx = sxx / cnt - mx * mx, cxy = sxy / cnt - mx * my,
               cyy = syy / cnt - my * my;
        json rec;
        rec["t"] = times[k];
        rec["tprime"] = times[k + 1];
        rec["variance"] = cyy;
        rec["conditional_variance"] = cxx > 0 ? cyy - cxy * cxy / cxx : cyy;
        if (std::isfinite(t_crit) && times[k + 1] < t_crit) {
            double t = times[k], tp = times[k + 1];
            double pred = (tp - t) * (t_crit - tp) / ((t_crit - t) * n);
            rec["predicted_variance"] = pred;
            rec["ratio"] = rec["conditional_variance"].get<double>() / pred;
        }
        incs.push_back(rec);
    }
    j["increments"] = incs;

    // Single-time marginal of the last time against independent perturbed spectra.
    {
        const size_t k = nt - 1;
        const double t = times[k];
        InitialLaw init2(cx, n, seed ^ 0x9e3779b97f4a7c15ULL);
        std::vector<double> a, b;
        const int mid = tracked.front();
        for (int r = 0; r < replicas; ++r) {
            auto m = init2.next();
            for (auto& v : m) v *= 1 - t;
            std::vector<double> e(n);
            check(fs_sample_perturbed(m.data(), n, t * (1 - t), seed ^ 0x5bd1e995ULL, std::uint64_t(r), e.data()));
            b.push_back(e[mid]);
            a.push_back(at(r, k, mid));
        }
        double D, p;
        check(fs_ks_two_sample(a.data(), a.size(), b.data(), b.size(), &D, &p));
        json ks;
        ks["time"] = t;
        ks["particle"] = mid;
        ks["statistic"] = D;
        ks["p_value"] = p;
        j["marginal_ks"] = ks;
    }
    out.add("nibm_stats.csv", csv);
    out.add_json("nibm.json", j);
    out.add("nibm_stats.gp", gnuplot_stub("nibm_stats.csv", "particle", "mean", "2:3"));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Free additive convolution, singular points and finite-n kernels"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    Options opt;
    app.add_option("--config", opt.config, "TOML run configuration")->check(CLI::ExistingFile);
    app.add_option("--tau", opt.tau, "perturbation strength (repeatable)")->expected(1)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    app.add_option("--t", opt.t, "first time");
    app.add_option("--tprime", opt.tprime, "second time");
    app.add_option("--n", opt.n, "matrix size")->check(CLI::PositiveNumber);
    app.add_option("--seed", opt.seed, "random seed");
    app.add_option("--out", opt.out, "output directory");
    app.add_option("--grid", opt.grid, "grid LO:HI:COUNT");
    app.add_option("--window", opt.window, "fit window E1:E2");

    using Cmd = void (*)(const Context&, Outputs&);
    const std::vector<std::pair<std::string, Cmd>> cmds = {
        {"density", cmd_density},     {"critical", cmd_critical}, {"classify", cmd_classify},
        {"fit", cmd_fit},             {"kernel", cmd_kernel},     {"multitime", cmd_multitime},
        {"mc", cmd_mc},               {"nibm", cmd_nibm},         {"report", cmd_report},
    };
    const std::map<std::string, std::string> help = {
        {"density", "psi_tau on a grid (density.csv)"},
        {"critical", "critical constants and case at tau_crit (critical.json)"},
        {"classify", "case label and predicted local laws per tau (classify.json)"},
        {"fit", "log-log fits near x*_tau (fit.json, fit_samples.csv)"},
        {"kernel", "finite-n one-point densities (kernel.csv)"},
        {"multitime", "multi-time kernel on a grid (multitime.csv, rescaled.csv)"},
        {"mc", "Monte Carlo spectra of M + sqrt(tau) H (mc.csv, mc.json)"},
        {"nibm", "nonintersecting bridge statistics (nibm_stats.csv, nibm.json)"},
        {"report", "critical data and fits in one report (report.json)"},
    };
    for (const auto& [name, fn] : cmds) app.add_subcommand(name, help.at(name));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        Context cx(opt, name);
        Outputs out;
        for (const auto& [cname, fn] : cmds)
            if (cname == name) fn(cx, out);
        out.commit(cx.out_dir());
        return 0;
    } catch (const Failure& f) {
        json e;
        e["level"] = "error";
        e["command"] = name;
        e["message"] = f.message;
        std::cerr << e.dump() << "\n";
        return f.exit_code;
    }
}
