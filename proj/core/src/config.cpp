#include "ronsfp/config.hpp"

#include "ronsfp/projection.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace ronsfp {

using nlohmann::json;

std::string ConfigError::join(const std::vector<std::string>& issues) {
    std::ostringstream out;
    out << "configuration invalid (" << issues.size()
        << (issues.size() == 1 ? " issue)" : " issues)");
    for (const std::string& s : issues) out << "\n  - " << s;
    return out.str();
}

namespace {

constexpr int kMaxDriftDegree = 8;

struct Parser {
    std::vector<std::string> issues;

    void fail(const std::string& path, const std::string& msg) {
        issues.push_back(path + ": " + msg);
    }

    void check_keys(const json& j, const std::string& path,
                    std::initializer_list<const char*> allowed) {
        for (const auto& item : j.items()) {
            bool known = false;
            for (const char* k : allowed) {
                if (item.key() == k) { known = true; break; }
            }
            if (!known) fail(path + "." + item.key(), "unknown field");
        }
    }

    const json* object(const json& j, const std::string& path, const char* key,
                       bool required) {
        if (!j.contains(key)) {
            if (required) fail(path + "." + key, "missing");
            return nullptr;
        }
        if (!j.at(key).is_object()) {
            fail(path + "." + key, "must be an object");
            return nullptr;
        }
        return &j.at(key);
    }

    std::optional<double> number(const json& j, const std::string& path, const char* key,
                                 std::optional<double> def, bool required = false) {
        if (!j.contains(key)) {
            if (required) fail(path + "." + key, "missing");
            return def;
        }
        if (!j.at(key).is_number()) {
            fail(path + "." + key, "must be a number");
            return def;
        }
        const double v = j.at(key).get<double>();
        if (!std::isfinite(v)) {
            fail(path + "." + key, "must be finite");
            return def;
        }
        return v;
    }

    double positive(const json& j, const std::string& path, const char* key, double def,
                    bool required = false) {
        auto v = number(j, path, key, def, required);
        if (v && !(*v > 0.0)) {
            fail(path + "." + key, "must be positive");
            return def;
        }
        return v.value_or(def);
    }

    double nonnegative(const json& j, const std::string& path, const char* key, double def) {
        auto v = number(j, path, key, def);
        if (v && *v < 0.0) {
            fail(path + "." + key, "must be nonnegative");
            return def;
        }
        return v.value_or(def);
    }

    long long integer(const json& j, const std::string& path, const char* key,
                      long long def, long long lo, long long hi, bool required = false) {
        if (!j.contains(key)) {
            if (required) fail(path + "." + key, "missing");
            return def;
        }
        if (!j.at(key).is_number_integer()) {
            fail(path + "." + key, "must be an integer");
            return def;
        }
        const long long v = j.at(key).get<long long>();
        if (v < lo || v > hi) {
            fail(path + "." + key,
                 "out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
            return def;
        }
        return v;
    }

    std::string str(const json& j, const std::string& path, const char* key,
                    std::string def, bool required = false) {
        if (!j.contains(key)) {
            if (required) fail(path + "." + key, "missing");
            return def;
        }
        if (!j.at(key).is_string()) {
            fail(path + "." + key, "must be a string");
            return def;
        }
        return j.at(key).get<std::string>();
    }

    bool boolean(const json& j, const std::string& path, const char* key, bool def) {
        if (!j.contains(key)) return def;
        if (!j.at(key).is_boolean()) {
            fail(path + "." + key, "must be a boolean");
            return def;
        }
        return j.at(key).get<bool>();
    }

    std::vector<double> num_array(const json& j, const std::string& path, const char* key,
                                  int expected, bool required) {
        std::vector<double> out;
        if (!j.contains(key)) {
            if (required) fail(path + "." + key, "missing");
            return out;
        }
        const json& a = j.at(key);
        if (!a.is_array()) {
            fail(path + "." + key, "must be an array of numbers");
            return out;
        }
        for (const json& v : a) {
            if (!v.is_number() || !std::isfinite(v.get<double>())) {
                fail(path + "." + key, "entries must be finite numbers");
                return {};
            }
            out.push_back(v.get<double>());
        }
        if (expected >= 0 && static_cast<int>(out.size()) != expected) {
            fail(path + "." + key, "expected " + std::to_string(expected) + " entries, got " +
                                       std::to_string(out.size()));
        }
        return out;
    }
};

CoeffFn parse_coeff(Parser& P, const json& j, const std::string& path) {
    if (j.is_number()) return CoeffFn::constant(j.get<double>());
    if (!j.is_object()) {
        P.fail(path, "must be a number or a coefficient object");
        return CoeffFn::constant(0.0);
    }
    const std::string kind = P.str(j, path, "kind", "", true);
    if (kind == "constant") {
        P.check_keys(j, path, {"kind", "value"});
        return CoeffFn::constant(P.number(j, path, "value", 0.0, true).value_or(0.0));
    }
    if (kind == "affine") {
        P.check_keys(j, path, {"kind", "c0", "c1"});
        return CoeffFn::affine(P.number(j, path, "c0", 0.0, true).value_or(0.0),
                               P.number(j, path, "c1", 0.0, true).value_or(0.0));
    }
    if (kind == "sinusoid") {
        P.check_keys(j, path, {"kind", "amp", "omega", "offset"});
        return CoeffFn::sinusoid(P.number(j, path, "amp", 0.0, true).value_or(0.0),
                                 P.number(j, path, "omega", 0.0, true).value_or(0.0),
                                 P.number(j, path, "offset", 0.0, true).value_or(0.0));
    }
    P.fail(path + ".kind", "unknown coefficient kind '" + kind + "'");
    return CoeffFn::constant(0.0);
}

DriftModel parse_custom_drift(Parser& P, const json& drift, ProblemParams& params) {
    DriftModel m;
    m.dim = static_cast<int>(P.integer(drift, "$.drift", "dim", 1, 1, kMaxDim, true));
    m.nu = P.positive(drift, "$.drift", "nu", 1e-2, true);
    params.nu = m.nu;
    m.axis_diffusion = P.num_array(drift, "$.drift", "axis_diffusion", -1, false);
    if (m.axis_diffusion.empty()) {
        m.axis_diffusion.assign(m.dim, 1.0);
    } else if (static_cast<int>(m.axis_diffusion.size()) != m.dim) {
        P.fail("$.drift.axis_diffusion", "expected dim entries");
        m.axis_diffusion.assign(m.dim, 1.0);
    } else {
        for (double s : m.axis_diffusion) {
            if (s < 0.0) {
                P.fail("$.drift.axis_diffusion", "entries must be nonnegative");
                break;
            }
        }
    }

    if (!drift.contains("components") || !drift.at("components").is_array() ||
        static_cast<int>(drift.at("components").size()) != m.dim) {
        P.fail("$.drift.components", "must be an array with one entry per axis");
        return m;
    }
    m.components.resize(m.dim);
    for (int l = 0; l < m.dim; ++l) {
        const json& comp = drift.at("components").at(l);
        const std::string cpath = "$.drift.components[" + std::to_string(l) + "]";
        if (!comp.is_array()) {
            P.fail(cpath, "must be an array of monomial terms");
            continue;
        }
        for (std::size_t ti = 0; ti < comp.size(); ++ti) {
            const json& term = comp.at(ti);
            const std::string tpath = cpath + "[" + std::to_string(ti) + "]";
            if (!term.is_object()) {
                P.fail(tpath, "must be an object with exponents and coeff");
                continue;
            }
            P.check_keys(term, tpath, {"exponents", "coeff"});
            DriftTerm dt;
            const std::vector<double> exps = P.num_array(term, tpath, "exponents", m.dim, true);
            int degree = 0;
            bool ok = static_cast<int>(exps.size()) == m.dim;
            for (int ax = 0; ok && ax < m.dim; ++ax) {
                const double e = exps[ax];
                if (e < 0 || e != std::floor(e) || e > kMaxDriftDegree) {
                    P.fail(tpath + ".exponents",
                           "entries must be integers in [0, " +
                               std::to_string(kMaxDriftDegree) + "]");
                    ok = false;
                    break;
                }
                dt.exps[ax] = static_cast<std::uint8_t>(e);
                degree += static_cast<int>(e);
            }
            if (ok && degree > kMaxDriftDegree) {
                P.fail(tpath + ".exponents",
                       "total degree must not exceed " + std::to_string(kMaxDriftDegree));
                ok = false;
            }
            if (!term.contains("coeff")) {
                P.fail(tpath + ".coeff", "missing");
                ok = false;
            } else {
                dt.coeff = parse_coeff(P, term.at("coeff"), tpath + ".coeff");
            }
            if (ok) m.components[l].push_back(dt);
        }
    }
    return m;
}

void parse_init(Parser& P, const json& init, RunConfig& cfg) {
    const std::string path = "$.ansatz.init";
    const std::string kind = P.str(init, path, "kind", "", true);
    const int d = cfg.drift.dim;

    if (kind == "explicit") {
        P.check_keys(init, path, {"kind", "amp", "width", "center"});
        cfg.init.kind = InitSpec::Kind::explicit_terms;
        cfg.init.amp = P.num_array(init, path, "amp", cfg.r, true);
        cfg.init.width = P.num_array(init, path, "width", cfg.r, true);
        for (double w : cfg.init.width) {
            if (!(w > 0.0)) {
                P.fail(path + ".width", "entries must be positive");
                break;
            }
        }
        if (!init.contains("center") || !init.at("center").is_array() ||
            static_cast<int>(init.at("center").size()) != cfg.r) {
            P.fail(path + ".center", "must be an array of r center vectors");
        } else {
            for (int i = 0; i < cfg.r; ++i) {
                const json& c = init.at("center").at(i);
                if (!c.is_array() || static_cast<int>(c.size()) != d) {
                    P.fail(path + ".center[" + std::to_string(i) + "]",
                           "expected " + std::to_string(d) + " coordinates");
                    break;
                }
                for (const json& v : c) {
                    if (!v.is_number()) {
                        P.fail(path + ".center", "coordinates must be numbers");
                        break;
                    }
                    cfg.init.center.push_back(v.get<double>());
                }
            }
        }
    } else if (kind == "grouped") {
        P.check_keys(init, path, {"kind", "amp", "width", "groups", "jitter"});
        cfg.init.kind = InitSpec::Kind::grouped;
        cfg.init.group_amp = P.number(init, path, "amp", {}, true).value_or(0.0);
        cfg.init.group_width = P.positive(init, path, "width", 1.0, true);
        cfg.init.jitter = P.nonnegative(init, path, "jitter", 1e-8);
        if (cfg.init.group_amp == 0.0) P.fail(path + ".amp", "must be nonzero");
        if (!init.contains("groups") || !init.at("groups").is_array() ||
            init.at("groups").empty()) {
            P.fail(path + ".groups", "must be a nonempty array");
        } else {
            int total = 0;
            for (std::size_t gi = 0; gi < init.at("groups").size(); ++gi) {
                const json& g = init.at("groups").at(gi);
                const std::string gpath = path + ".groups[" + std::to_string(gi) + "]";
                if (!g.is_object()) {
                    P.fail(gpath, "must be an object");
                    continue;
                }
                P.check_keys(g, gpath, {"count", "center"});
                problems::InitGroup group;
                group.count = static_cast<int>(P.integer(g, gpath, "count", 1, 1, 100000, true));
                group.center = P.num_array(g, gpath, "center", d, true);
                total += group.count;
                cfg.init.groups.push_back(std::move(group));
            }
            if (total != cfg.r) {
                P.fail(path + ".groups", "group counts sum to " + std::to_string(total) +
                                             " but ansatz.r is " + std::to_string(cfg.r));
            }
        }
    } else if (kind == "ou-exact") {
        P.check_keys(init, path, {"kind", "t0"});
        cfg.init.kind = InitSpec::Kind::ou_exact;
        cfg.init.t0 = P.positive(init, path, "t0", 0.01, true);
        if (cfg.problem != "ou") P.fail(path + ".kind", "ou-exact requires problem 'ou'");
        if (cfg.r != 1) P.fail("$.ansatz.r", "ou-exact initialization requires r = 1");
    } else if (kind == "project") {
        P.check_keys(init, path, {"kind", "target", "guess", "jitter"});
        cfg.init.kind = InitSpec::Kind::project;
        cfg.init.jitter = P.nonnegative(init, path, "jitter", 1e-8);
        if (const json* target = P.object(init, path, "target", true)) {
            P.check_keys(*target, path + ".target", {"kind", "mean", "variance"});
            const std::string tkind = P.str(*target, path + ".target", "kind", "gaussian");
            if (tkind != "gaussian") {
                P.fail(path + ".target.kind", "only 'gaussian' targets are supported");
            }
            cfg.init.target_mean = P.num_array(*target, path + ".target", "mean", d, true);
            cfg.init.target_variance =
                P.positive(*target, path + ".target", "variance", 1.0, true);
        }
        if (const json* guess = P.object(init, path, "guess", true)) {
            P.check_keys(*guess, path + ".guess", {"amp", "width", "groups"});
            cfg.init.group_amp = P.number(*guess, path + ".guess", "amp", {}, true).value_or(0.0);
            cfg.init.group_width = P.positive(*guess, path + ".guess", "width", 1.0, true);
            if (cfg.init.group_amp == 0.0) P.fail(path + ".guess.amp", "must be nonzero");
            if (!guess->contains("groups") || !guess->at("groups").is_array() ||
                guess->at("groups").empty()) {
                P.fail(path + ".guess.groups", "must be a nonempty array");
            } else {
                int total = 0;
                for (std::size_t gi = 0; gi < guess->at("groups").size(); ++gi) {
                    const json& g = guess->at("groups").at(gi);
                    const std::string gpath = path + ".guess.groups[" + std::to_string(gi) + "]";
                    if (!g.is_object()) {
                        P.fail(gpath, "must be an object");
                        continue;
                    }
                    P.check_keys(g, gpath, {"count", "center"});
                    problems::InitGroup group;
                    group.count =
                        static_cast<int>(P.integer(g, gpath, "count", 1, 1, 100000, true));
                    group.center = P.num_array(g, gpath, "center", d, true);
                    total += group.count;
                    cfg.init.groups.push_back(std::move(group));
                }
                if (total != cfg.r) {
                    P.fail(path + ".guess.groups",
                           "group counts sum to " + std::to_string(total) +
                               " but ansatz.r is " + std::to_string(cfg.r));
                }
            }
        }
    } else {
        P.fail(path + ".kind", "must be one of explicit, grouped, ou-exact, project");
    }
}

void parse_collocation(Parser& P, const json& h, RunConfig& cfg) {
    const std::string path = "$.hilbert.collocation";
    const json* c = P.object(h, "$.hilbert", "collocation",
                             cfg.mode != HilbertMode::l2_symbolic);
    if (!c) return;
    P.check_keys(*c, path, {"scheme", "n_points", "counts", "lo", "hi", "seed"});
    const int d = cfg.drift.dim;
    cfg.colloc.scheme = P.str(*c, path, "scheme", "equidistant");
    cfg.colloc.lo = P.num_array(*c, path, "lo", d, true);
    cfg.colloc.hi = P.num_array(*c, path, "hi", d, true);
    if (cfg.colloc.lo.size() == cfg.colloc.hi.size()) {
        for (std::size_t ax = 0; ax < cfg.colloc.lo.size(); ++ax) {
            if (!(cfg.colloc.lo[ax] < cfg.colloc.hi[ax])) {
                P.fail(path, "lo must be strictly below hi on every axis");
                break;
            }
        }
    }
    cfg.colloc.seed = static_cast<std::uint64_t>(
        P.integer(*c, path, "seed", 0, 0, std::numeric_limits<long long>::max()));

    if (cfg.colloc.scheme == "equidistant") {
        if (c->contains("counts")) {
            const std::vector<double> counts = P.num_array(*c, path, "counts", d, true);
            long long total = 1;
            for (double v : counts) {
                if (v < 1 || v != std::floor(v)) {
                    P.fail(path + ".counts", "entries must be positive integers");
                    total = 0;
                    break;
                }
                cfg.colloc.counts.push_back(static_cast<int>(v));
                total *= static_cast<long long>(v);
            }
            if (total > 10'000'000) P.fail(path + ".counts", "grid exceeds 1e7 points");
        } else {
            const int n = static_cast<int>(
                P.integer(*c, path, "n_points", 0, 1, 10'000'000, true));
            if (d != 1) {
                P.fail(path, "multi-axis equidistant grids need per-axis counts");
            } else {
                cfg.colloc.counts = {n};
                cfg.colloc.n_points = n;
            }
        }
    } else if (cfg.colloc.scheme == "random") {
        cfg.colloc.n_points =
            static_cast<int>(P.integer(*c, path, "n_points", 0, 1, 10'000'000, true));
    } else {
        P.fail(path + ".scheme", "must be equidistant or random");
    }
}

} // namespace

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("not valid JSON: ") + e.what()});
    }
    if (!j.is_object()) throw ConfigError({"top level must be a JSON object"});

    Parser P;
    RunConfig cfg;
    P.check_keys(j, "$",
                 {"problem", "drift", "ansatz", "hilbert", "alpha", "time",
                  "equilibrium_stop", "ensemble", "output", "seed", "threads"});

    cfg.problem = P.str(j, "$", "problem", "", true);
    const json empty = json::object();
    const json& drift = j.contains("drift") && j.at("drift").is_object() ? j.at("drift") : empty;
    if (j.contains("drift") && !j.at("drift").is_object()) {
        P.fail("$.drift", "must be an object");
    }

    if (cfg.problem == "ou") {
        P.check_keys(drift, "$.drift", {"gamma", "sigma"});
        cfg.params.gamma = P.positive(drift, "$.drift", "gamma", 1.0);
        cfg.params.sigma = P.positive(drift, "$.drift", "sigma", 1.0);
        if (P.issues.empty()) cfg.drift = problems::ou_drift(cfg.params.gamma, cfg.params.sigma);
        else cfg.drift.dim = 1;
    } else if (cfg.problem == "bistable") {
        P.check_keys(drift, "$.drift", {"sigma"});
        cfg.params.sigma = P.positive(drift, "$.drift", "sigma", 0.5);
        if (P.issues.empty()) cfg.drift = problems::bistable_drift(cfg.params.sigma);
        else cfg.drift.dim = 1;
    } else if (cfg.problem == "duffing") {
        P.check_keys(drift, "$.drift", {"a1", "a2", "a3", "sigma"});
        cfg.params.a1 = P.number(drift, "$.drift", "a1", 1.0).value_or(1.0);
        cfg.params.a2 = P.number(drift, "$.drift", "a2", -0.2).value_or(-0.2);
        cfg.params.a3 = P.number(drift, "$.drift", "a3", -1.0).value_or(-1.0);
        cfg.params.sigma =
            P.positive(drift, "$.drift", "sigma", 1.0 / std::sqrt(20.0));
        if (P.issues.empty()) {
            cfg.drift = problems::duffing_drift(cfg.params.a1, cfg.params.a2, cfg.params.a3,
                                                cfg.params.sigma);
        } else {
            cfg.drift.dim = 2;
        }
    } else if (cfg.problem == "harmonic-trap") {
        P.check_keys(drift, "$.drift", {"dim", "gamma", "nu", "forcing"});
        const int d = static_cast<int>(P.integer(drift, "$.drift", "dim", 8, 1, kMaxDim));
        cfg.params.gamma = P.nonnegative(drift, "$.drift", "gamma", 0.25);
        cfg.params.nu = P.positive(drift, "$.drift", "nu", 0.01);
        cfg.params.force_amp = 1.25;
        cfg.params.force_omega = std::numbers::pi;
        cfg.params.force_offset = 1.5;
        if (const json* f = P.object(drift, "$.drift", "forcing", false)) {
            P.check_keys(*f, "$.drift.forcing", {"amp", "omega", "offset"});
            cfg.params.force_amp =
                P.number(*f, "$.drift.forcing", "amp", 1.25).value_or(1.25);
            cfg.params.force_omega = P.number(*f, "$.drift.forcing", "omega",
                                              std::numbers::pi)
                                         .value_or(std::numbers::pi);
            cfg.params.force_offset =
                P.number(*f, "$.drift.forcing", "offset", 1.5).value_or(1.5);
        }
        if (P.issues.empty()) {
            cfg.drift = problems::harmonic_trap_drift(d, cfg.params.force_amp,
                                                      cfg.params.force_omega,
                                                      cfg.params.force_offset,
                                                      cfg.params.gamma, cfg.params.nu);
        } else {
            cfg.drift.dim = d;
        }
    } else if (cfg.problem == "custom-polynomial") {
        cfg.drift = parse_custom_drift(P, drift, cfg.params);
    } else {
        P.fail("$.problem",
               "must be one of ou, bistable, duffing, harmonic-trap, custom-polynomial");
        cfg.drift.dim = 1;
    }

    if (const json* ansatz = P.object(j, "$", "ansatz", true)) {
        P.check_keys(*ansatz, "$.ansatz", {"r", "init"});
        cfg.r = static_cast<int>(P.integer(*ansatz, "$.ansatz", "r", 1, 1, 100000, true));
        if (const json* init = P.object(*ansatz, "$.ansatz", "init", true)) {
            parse_init(P, *init, cfg);
        }
    }

    if (const json* h = P.object(j, "$", "hilbert", true)) {
        P.check_keys(*h, "$.hilbert", {"mode", "collocation"});
        const std::string mode = P.str(*h, "$.hilbert", "mode", "", true);
        if (mode == "l2-symbolic") cfg.mode = HilbertMode::l2_symbolic;
        else if (mode == "l2-collocation") cfg.mode = HilbertMode::l2_collocation;
        else if (mode == "weighted-collocation") cfg.mode = HilbertMode::weighted_collocation;
        else P.fail("$.hilbert.mode",
                    "must be one of l2-symbolic, l2-collocation, weighted-collocation");
        parse_collocation(P, *h, cfg);
    }

    cfg.alpha = P.nonnegative(j, "$", "alpha", 1e-6);

    if (const json* t = P.object(j, "$", "time", true)) {
        P.check_keys(*t, "$.time",
                     {"t0", "t_end", "h0", "rtol", "atol", "max_steps", "output_dt",
                      "stepper"});
        cfg.time.t0 = P.number(*t, "$.time", "t0", 0.0).value_or(0.0);
        cfg.time.t_end = P.number(*t, "$.time", "t_end", {}, true).value_or(0.0);
        cfg.time.h0 = P.positive(*t, "$.time", "h0", 1e-4);
        cfg.time.rtol = P.positive(*t, "$.time", "rtol", 1e-6);
        cfg.time.atol = P.positive(*t, "$.time", "atol", 1e-9);
        cfg.time.max_steps = static_cast<long>(
            P.integer(*t, "$.time", "max_steps", 5'000'000, 1, 2'000'000'000));
        cfg.output_dt = P.nonnegative(*t, "$.time", "output_dt", 0.0);
        if (!(cfg.time.t_end > cfg.time.t0)) P.fail("$.time.t_end", "must exceed t0");
        const std::string stepper = P.str(*t, "$.time", "stepper", "dp5");
        if (stepper == "dp5") cfg.stepper = Stepper::dp5;
        else if (stepper == "rosenbrock") cfg.stepper = Stepper::rosenbrock;
        else P.fail("$.time.stepper", "must be dp5 or rosenbrock");
    }
    if (cfg.init.kind == InitSpec::Kind::ou_exact &&
        std::abs(cfg.time.t0 - cfg.init.t0) > 1e-15) {
        P.fail("$.time.t0", "must equal ansatz.init.t0 for ou-exact initialization");
    }

    if (const json* e = P.object(j, "$", "equilibrium_stop", false)) {
        P.check_keys(*e, "$.equilibrium_stop", {"enabled", "threshold", "window"});
        cfg.equilibrium.enabled = P.boolean(*e, "$.equilibrium_stop", "enabled", true);
        cfg.equilibrium.threshold = P.positive(*e, "$.equilibrium_stop", "threshold", 1e-5);
        cfg.equilibrium.window = P.positive(*e, "$.equilibrium_stop", "window", 1.0);
    }

    if (const json* e = P.object(j, "$", "ensemble", false)) {
        P.check_keys(*e, "$.ensemble", {"enabled", "particles", "h", "scheme", "times", "seed"});
        cfg.ensemble.enabled = P.boolean(*e, "$.ensemble", "enabled", true);
        cfg.ensemble.spec.particles = static_cast<std::size_t>(
            P.integer(*e, "$.ensemble", "particles", 100'000, 1, 1'000'000'000));
        cfg.ensemble.spec.h = P.positive(*e, "$.ensemble", "h", 1e-3);
        cfg.ensemble.spec.seed = static_cast<std::uint64_t>(P.integer(
            *e, "$.ensemble", "seed", 0, 0, std::numeric_limits<long long>::max()));
        const std::string scheme =
            P.str(*e, "$.ensemble", "scheme", "euler-maruyama");
        if (scheme == "euler-maruyama") cfg.ensemble.spec.scheme = SdeScheme::euler_maruyama;
        else if (scheme == "predictor-corrector")
            cfg.ensemble.spec.scheme = SdeScheme::predictor_corrector;
        else P.fail("$.ensemble.scheme", "must be euler-maruyama or predictor-corrector");
        cfg.ensemble.times = P.num_array(*e, "$.ensemble", "times", -1, true);
        if (cfg.ensemble.times.empty() && cfg.ensemble.enabled) {
            P.fail("$.ensemble.times", "must list at least one snapshot time");
        }
        for (std::size_t i = 0; i < cfg.ensemble.times.size(); ++i) {
            if (cfg.ensemble.times[i] < cfg.time.t0 ||
                (i > 0 && cfg.ensemble.times[i] <= cfg.ensemble.times[i - 1])) {
                P.fail("$.ensemble.times", "must be ascending and not precede time.t0");
                break;
            }
        }
    }

    if (const json* o = P.object(j, "$", "output", false)) {
        P.check_keys(*o, "$.output", {"dir", "density_slices"});
        cfg.out_dir = P.str(*o, "$.output", "dir", "out");
        if (cfg.out_dir.empty()) P.fail("$.output.dir", "must be nonempty");
        if (const json* s = P.object(*o, "$.output", "density_slices", false)) {
            P.check_keys(*s, "$.output.density_slices", {"times", "axes", "lo", "hi", "counts"});
            const std::string spath = "$.output.density_slices";
            cfg.slices.times = P.num_array(*s, spath, "times", -1, true);
            const std::vector<double> axes = P.num_array(*s, spath, "axes", -1, true);
            for (double a : axes) {
                if (a < 0 || a != std::floor(a) || a >= cfg.drift.dim) {
                    P.fail(spath + ".axes", "axis indices must lie in [0, dim)");
                    break;
                }
                cfg.slices.axes.push_back(static_cast<int>(a));
            }
            if (cfg.slices.axes.size() < 1 || cfg.slices.axes.size() > 2) {
                P.fail(spath + ".axes", "slices support 1 or 2 axes");
            }
            if (cfg.slices.axes.size() == 2 && cfg.slices.axes[0] == cfg.slices.axes[1]) {
                P.fail(spath + ".axes", "axes must be distinct");
            }
            const int na = static_cast<int>(cfg.slices.axes.size());
            cfg.slices.lo = P.num_array(*s, spath, "lo", na, true);
            cfg.slices.hi = P.num_array(*s, spath, "hi", na, true);
            const std::vector<double> counts = P.num_array(*s, spath, "counts", na, true);
            for (double c : counts) {
                if (c < 2 || c != std::floor(c) || c > 100000) {
                    P.fail(spath + ".counts", "entries must be integers in [2, 100000]");
                    break;
                }
                cfg.slices.counts.push_back(static_cast<int>(c));
            }
            if (cfg.slices.lo.size() == cfg.slices.hi.size()) {
                for (std::size_t i = 0; i < cfg.slices.lo.size(); ++i) {
                    if (!(cfg.slices.lo[i] < cfg.slices.hi[i])) {
                        P.fail(spath, "lo must be strictly below hi");
                        break;
                    }
                }
            }
            for (std::size_t i = 0; i < cfg.slices.times.size(); ++i) {
                if (cfg.slices.times[i] < cfg.time.t0 ||
                    (i > 0 && cfg.slices.times[i] <= cfg.slices.times[i - 1])) {
                    P.fail(spath + ".times", "must be ascending and within the run window");
                    break;
                }
            }
        }
    }

    cfg.seed = static_cast<std::uint64_t>(
        P.integer(j, "$", "seed", 0, 0, std::numeric_limits<long long>::max()));
    cfg.threads = static_cast<int>(P.integer(j, "$", "threads", 1, 1, 1024));
    cfg.ensemble.spec.threads = cfg.threads;

    if (!P.issues.empty()) throw ConfigError(std::move(P.issues));
    cfg.drift.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str());
}

MixtureState build_initial_state(const RunConfig& cfg) {
    MixtureState state;
    switch (cfg.init.kind) {
    case InitSpec::Kind::explicit_terms:
        state.dim = cfg.drift.dim;
        state.amp = cfg.init.amp;
        state.width = cfg.init.width;
        state.center = cfg.init.center;
        state.validate();
        break;
    case InitSpec::Kind::grouped:
        state = problems::grouped_initial(cfg.drift.dim, cfg.init.groups, cfg.init.group_amp,
                                          cfg.init.group_width, cfg.init.jitter, cfg.seed);
        break;
    case InitSpec::Kind::ou_exact:
        state = problems::ou_exact_initial(cfg.params.gamma, cfg.params.sigma, cfg.init.t0);
        break;
    case InitSpec::Kind::project: {
        MixtureState guess =
            problems::grouped_initial(cfg.drift.dim, cfg.init.groups, cfg.init.group_amp,
                                      cfg.init.group_width, cfg.init.jitter, cfg.seed);
        const int d = cfg.drift.dim;
        const double v = cfg.init.target_variance;
        const std::vector<double> mean = cfg.init.target_mean;
        const double norm = std::pow(2.0 * std::numbers::pi * v, -0.5 * d);
        auto p0 = [d, v, mean, norm](std::span<const double> x) {
            double q = 0.0;
            for (int ax = 0; ax < d; ++ax) {
                const double diff = x[ax] - mean[ax];
                q += diff * diff;
            }
            return norm * std::exp(-q / (2.0 * v));
        };
        HilbertChoice space{cfg.mode, build_collocation_grid(cfg)};
        state = project_initial_condition(p0, guess, space);
        break;
    }
    }
    normalize_total_probability(state);
    return state;
}

CollocationGrid build_collocation_grid(const RunConfig& cfg) {
    if (cfg.mode == HilbertMode::l2_symbolic && cfg.colloc.lo.empty()) {
        return CollocationGrid{};
    }
    if (cfg.colloc.scheme == "random") {
        return CollocationGrid::random_uniform_box(cfg.colloc.lo, cfg.colloc.hi,
                                                   cfg.colloc.n_points, cfg.colloc.seed);
    }
    return CollocationGrid::equidistant_box(cfg.colloc.lo, cfg.colloc.hi, cfg.colloc.counts);
}

} // namespace ronsfp
