#include "config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <toml.hpp>

#include "error.hpp"
#include "expr.hpp"

namespace freesing {

std::vector<double> GridSpec::points() const {
    std::vector<double> g(count);
    for (int i = 0; i < count; ++i)
        g[i] = count == 1 ? lo : lo + (hi - lo) * double(i) / double(count - 1);
    return g;
}

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
    fail(Code::Config, where + ": " + what);
}

double number(const toml::node& nd, const std::string& where) {
    if (auto v = nd.value<double>(); v && nd.is_number()) return *v;
    if (auto s = nd.value<std::string>()) {
        try {
            return eval_constant(*s);
        } catch (const Error& e) {
            bad(where, e.what());
        }
    }
    bad(where, "expected a number or a constant expression");
}

std::optional<double> opt_number(const toml::table& t, const char* key, const std::string& where) {
    const toml::node* nd = t.get(key);
    if (!nd) return std::nullopt;
    return number(*nd, where + "." + key);
}

double req_number(const toml::table& t, const char* key, const std::string& where) {
    auto v = opt_number(t, key, where);
    if (!v) bad(where, std::string("missing key '") + key + "'");
    return *v;
}

// A scalar or an array of scalars.
std::vector<double> numbers(const toml::node& nd, const std::string& where) {
    std::vector<double> out;
    if (const toml::array* a = nd.as_array()) {
        for (std::size_t i = 0; i < a->size(); ++i)
            out.push_back(number(*a->get(i), where + "[" + std::to_string(i) + "]"));
    } else {
        out.push_back(number(nd, where));
    }
    return out;
}

std::vector<double> req_numbers(const toml::table& t, const char* key, const std::string& where) {
    const toml::node* nd = t.get(key);
    if (!nd) bad(where, std::string("missing key '") + key + "'");
    return numbers(*nd, where + "." + key);
}

int integer(double v, const std::string& where) {
    if (v != std::floor(v) || std::fabs(v) > 1e9) bad(where, "expected an integer");
    return int(v);
}

std::string req_string(const toml::table& t, const char* key, const std::string& where) {
    auto s = t[key].value<std::string>();
    if (!s) bad(where, std::string("missing string '") + key + "'");
    return *s;
}

const toml::table* sub(const toml::table& root, const char* key) {
    const toml::node* nd = root.get(key);
    if (!nd) return nullptr;
    if (!nd->is_table()) bad(key, "expected a table");
    return nd->as_table();
}

std::optional<SingularKind> parse_kind(const std::string& s, const std::string& where) {
    if (s == "interior") return SingularKind::Interior;
    if (s == "right_edge") return SingularKind::RightEdge;
    if (s == "left_edge") return SingularKind::LeftEdge;
    bad(where, "unknown singular kind '" + s + "'");
}

Measure build_measure(const toml::table& t) {
    const std::string w = "measure";
    const std::string fam = req_string(t, "family", w);
    double mass = opt_number(t, "declared_mass", w).value_or(1.0);
    if (fam == "semicircle") return Measure::semicircle(req_number(t, "tau", w));
    if (fam == "jacobi_power")
        return Measure::jacobi_power(req_number(t, "C", w), req_number(t, "alpha", w), req_number(t, "beta", w),
                                     req_number(t, "a", w), req_number(t, "b", w), mass);
    if (fam == "poly_times_sqrt")
        return Measure::poly_times_sqrt(req_numbers(t, "coefficients", w), req_number(t, "radius", w), mass);
    if (fam == "atoms") {
        auto loc = req_numbers(t, "locations", w), ms = req_numbers(t, "masses", w);
        if (loc.size() != ms.size()) bad(w, "locations and masses differ in length");
        std::vector<Atom> atoms;
        for (std::size_t i = 0; i < loc.size(); ++i) atoms.push_back({loc[i], ms[i]});
        return Measure::atoms(atoms, mass);
    }
    if (fam == "expression") {
        const toml::array* segs = t["segments"].as_array();
        if (!segs || segs->empty()) bad(w, "expression family needs a non-empty 'segments' array");
        std::vector<Segment> out;
        for (std::size_t i = 0; i < segs->size(); ++i) {
            const std::string ws = w + ".segments[" + std::to_string(i) + "]";
            const toml::table* st = segs->get(i)->as_table();
            if (!st) bad(ws, "expected a table");
            Segment sg;
            sg.a = req_number(*st, "a", ws);
            sg.b = req_number(*st, "b", ws);
            try {
                sg.density = Expr::parse(req_string(*st, "density", ws));
            } catch (const Error& e) {
                bad(ws, e.what());
            }
            sg.alpha_a = opt_number(*st, "alpha_a", ws).value_or(0.0);
            sg.alpha_b = opt_number(*st, "alpha_b", ws).value_or(0.0);
            out.push_back(sg);
        }
        return Measure(out, {}, {"expression", {}}, mass);
    }
    bad(w, "unknown family '" + fam + "'");
}

SingularPoint build_singular(const toml::table& t, const Measure& m) {
    const std::string w = "singular";
    double x = req_number(t, "x_star", w);
    std::optional<SingularKind> kind;
    if (auto s = t["kind"].value<std::string>()) kind = parse_kind(*s, w + ".kind");
    if (m.family().name == "poly_times_sqrt" || m.family().name == "jacobi_power") {
        SingularPoint sp = m.derive_singular(x, kind);
        return sp;
    }
    if (!kind) bad(w, "'kind' is required for this family");
    SingularPoint sp;
    sp.x_star = x;
    sp.kind = *kind;
    sp.k = integer(req_number(t, "k", w), w + ".k");
    sp.c0 = req_number(t, "c0", w);
    try {
        sp.h = Expr::parse(t["h"].value<std::string>().value_or("1"));
    } catch (const Error& e) {
        bad(w + ".h", e.what());
    }
    return sp;
}

} // namespace

GridSpec parse_grid(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) bad("grid", "expected LO:HI:COUNT, got '" + text + "'");
    GridSpec g;
    try {
        g.lo = eval_constant(parts[0]);
        g.hi = eval_constant(parts[1]);
        g.count = integer(eval_constant(parts[2]), "grid count");
    } catch (const Error& e) {
        bad("grid", e.what());
    }
    if (g.count < 1 || !(g.hi >= g.lo) || (g.count > 1 && !(g.hi > g.lo)))
        bad("grid", "need LO < HI and COUNT >= 1");
    return g;
}

std::pair<double, double> parse_window(const std::string& text) {
    auto pos = text.find(':');
    if (pos == std::string::npos || text.find(':', pos + 1) != std::string::npos)
        bad("window", "expected E1:E2, got '" + text + "'");
    double a, b;
    try {
        a = eval_constant(text.substr(0, pos));
        b = eval_constant(text.substr(pos + 1));
    } catch (const Error& e) {
        bad("window", e.what());
    }
    if (!(a > 0) || !(b > a)) bad("window", "need 0 < E1 < E2");
    return {a, b};
}

RunConfig parse_config(const std::string& text, const std::string& source) {
    toml::table root;
    try {
        root = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << source << ":" << e.source().begin.line << ": " << e.description();
        fail(Code::Config, os.str());
    }

    static const char* known[] = {"seed", "out", "measure", "potential", "singular", "run", "mc"};
    for (const auto& [k, v] : root) {
        bool ok = false;
        for (const char* q : known) ok |= k.str() == q;
        if (!ok) bad(source, "unknown top-level key '" + std::string(k.str()) + "'");
    }

    RunConfig rc;
    if (const toml::node* s = root.get("seed")) {
        auto v = s->value<std::int64_t>();
        if (!v || *v < 0) bad("seed", "expected a non-negative integer");
        rc.seed = std::uint64_t(*v);
    }
    if (auto o = root["out"].value<std::string>()) rc.out_dir = *o;

    try {
        if (const toml::table* t = sub(root, "measure")) rc.measure = build_measure(*t);
        if (const toml::table* t = sub(root, "potential")) {
            rc.potential = Potential(req_numbers(*t, "coefficients", "potential"));
            const auto& c = rc.potential->coefficients();
            if (rc.potential->degree() < 2 || rc.potential->degree() % 2 || !(c.back() > 0))
                bad("potential", "degree must be even and >= 2 with a positive leading coefficient");
        }
        if (const toml::table* t = sub(root, "singular")) {
            if (!rc.measure) bad("singular", "declared without a [measure]");
            rc.singular = build_singular(*t, *rc.measure);
            rc.measure = rc.measure->with_singular_point(*rc.singular);
        }
    } catch (const Error& e) {
        if (e.code() == Code::Config) throw;
        fail(Code::Config, e.what());
    }

    if (const toml::table* t = sub(root, "run")) {
        const std::string w = "run";
        if (const toml::node* nd = t->get("tau")) rc.tau = numbers(*nd, w + ".tau");
        rc.t = opt_number(*t, "t", w);
        rc.tprime = opt_number(*t, "tprime", w);
        if (const toml::node* nd = t->get("n"))
            for (double v : numbers(*nd, w + ".n")) rc.n.push_back(integer(v, w + ".n"));
        if (auto g = (*t)["grid"].value<std::string>()) rc.grid = parse_grid(*g);
        if (auto g = (*t)["window"].value<std::string>()) rc.window = parse_window(*g);
        if (const toml::node* nd = t->get("times")) rc.times = numbers(*nd, w + ".times");
    }
    if (const toml::table* t = sub(root, "mc")) {
        const std::string w = "mc";
        if (auto v = opt_number(*t, "replicas", w)) rc.mc.replicas = integer(*v, w + ".replicas");
        if (auto v = opt_number(*t, "bins", w)) rc.mc.bins = integer(*v, w + ".bins");
        if (auto v = opt_number(*t, "lo", w)) rc.mc.lo = *v;
        if (auto v = opt_number(*t, "hi", w)) rc.mc.hi = *v;
        if (auto v = opt_number(*t, "mcmc_steps", w)) rc.mc.mcmc_steps = integer(*v, w + ".mcmc_steps");
        if (auto v = opt_number(*t, "burn_in", w)) rc.mc.burn_in = integer(*v, w + ".burn_in");
        if (auto s = (*t)["initial"].value<std::string>()) rc.mc.initial = *s;
        if (rc.mc.initial != "quantiles" && rc.mc.initial != "ue")
            bad(w + ".initial", "expected 'quantiles' or 'ue'");
        if (rc.mc.replicas < 1 || rc.mc.bins < 2) bad(w, "need replicas >= 1 and bins >= 2");
    }
    for (double v : rc.tau)
        if (!(v > 0)) bad("run.tau", "values must be positive");
    for (int v : rc.n)
        if (v < 1) bad("run.n", "values must be positive");
    return rc;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Code::Config, "cannot read config file '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return parse_config(os.str(), path);
}

} // namespace freesing
