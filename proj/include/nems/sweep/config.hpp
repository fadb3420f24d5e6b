// config.hpp - JSON run configuration: parsing, validation, unit conversion and canonical re-serialization

#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "nems/errors.hpp"
#include "nems/grid.hpp"
#include "nems/leads.hpp"
#include "nems/master_equation.hpp"
#include "nems/transport.hpp"
#include "nems/units.hpp"

namespace nems::sweep {

using json = nlohmann::json;

inline constexpr int schema_version = 1;

// Parameters a scan or map may vary.
inline const std::vector<std::string>& sweepable_parameters() {
    static const std::vector<std::string> names{"mu_tilde", "lambda",  "delta_mu", "T_L",     "T_R",    "gamma_L",
                                                "gamma_R",  "delta_L", "delta_R",  "Gamma_L", "Gamma_R"};
    return names;
}

struct Axis {
    std::string param;
    std::vector<double> values;
};

enum class TaskType { point, scan, map, transient, diagnostics };

inline const char* task_name(TaskType t) {
    switch (t) {
    case TaskType::point: return "point";
    case TaskType::scan: return "scan";
    case TaskType::map: return "map";
    case TaskType::transient: return "transient";
    case TaskType::diagnostics: return "diagnostics";
    }
    return "point";
}

struct DiagnosticsSpec {
    double correlation_t_max{10.0};
    std::size_t correlation_steps{401};
    double correlation_threshold{1e-3};
    std::vector<double> lamb_energies;
    double secular_threshold{0.1};
};

struct TransientSpec {
    int initial_dot{0};
    std::size_t initial_fock{0};
    std::vector<double> times;
};

struct SolverSpec {
    GeneratorKind kind{GeneratorKind::redfield};
    std::size_t n_fock{8};
    bool auto_converge{false};
    std::vector<std::size_t> n_fock_ladder{8, 12, 16};
    double converge_tolerance{1e-6};
    double residual_tolerance{1e-10};
    std::size_t memory_budget_mb{2048};
};

struct OutputSpec {
    std::size_t qho_populations{0}; // number of qho_p* columns, 0 disables them
    bool si_current{false};         // report currents in amperes instead of particles per ns
};

struct RunConfig {
    SystemParams system{};
    LeadPair leads{};
    SolverSpec solver{};
    TaskType task{TaskType::point};
    Axis scan;     // scan task
    Axis map_x;    // map task, fast axis (differentiated for the conductance column)
    Axis map_y;    // map task, slow axis
    TransientSpec transient;
    DiagnosticsSpec diagnostics;
    OutputSpec output;

    PointOptions point_options() const {
        PointOptions o;
        o.kind = solver.kind;
        o.auto_converge = solver.auto_converge;
        o.n_fock_ladder = solver.n_fock_ladder;
        o.converge_tolerance = solver.converge_tolerance;
        o.steady.residual_tolerance = solver.residual_tolerance;
        o.liouvillian.memory_budget_bytes = solver.memory_budget_mb * std::size_t{1024} * 1024;
        return o;
    }
};

namespace detail {

inline std::string join(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }

class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }
    const json& at(const std::string& key) {
        used_.insert(key);
        if (!j_.contains(key)) throw ConfigError(join(path_, key), "missing required field");
        return j_.at(key);
    }
    const json* find(const std::string& key) {
        used_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }
    std::string path(const std::string& key) const { return join(path_, key); }

    void finish(bool strict) const {
        if (!strict) return;
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw ConfigError(join(path_, it.key()), "unknown field");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

inline double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
    return x;
}

// number (angular 1e9 rad/s), {"ghz_over_2pi": x}, or for temperatures {"mK": x}.
inline double quantity(const json& v, const std::string& path, bool temperature) {
    if (v.is_number()) return as_number(v, path);
    if (!v.is_object() || v.size() != 1) throw ConfigError(path, "expected a number or a single-unit object");
    if (v.contains("ghz_over_2pi")) return units::from_cyclic_ghz(as_number(v.at("ghz_over_2pi"), path + ".ghz_over_2pi"));
    if (v.contains("mK")) {
        if (!temperature) throw ConfigError(path, "mK is only accepted for temperatures");
        const double mk = as_number(v.at("mK"), path + ".mK");
        if (!(mk > 0.0)) throw ConfigError(path + ".mK", "temperature must be positive");
        return units::temperature_from_millikelvin(mk);
    }
    throw ConfigError(path + "." + v.begin().key(), "unknown unit");
}

inline std::size_t as_count(const json& v, const std::string& path, std::size_t min_value) {
    if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
    const auto x = v.get<long long>();
    if (x < static_cast<long long>(min_value)) throw ConfigError(path, "must be at least " + std::to_string(min_value));
    return static_cast<std::size_t>(x);
}

inline bool as_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) throw ConfigError(path, "expected a boolean");
    return v.get<bool>();
}

// {"from", "to", "steps"} or {"values": [...]}
inline std::vector<double> parse_grid(const json& j, const std::string& path, bool strict, bool temperature) {
    ObjectReader r(j, path);
    std::vector<double> out;
    if (r.has("values")) {
        const json& vals = r.at("values");
        if (!vals.is_array() || vals.empty()) throw ConfigError(r.path("values"), "expected a non-empty array");
        for (std::size_t i = 0; i < vals.size(); ++i)
            out.push_back(quantity(vals[i], r.path("values") + "[" + std::to_string(i) + "]", temperature));
    } else {
        const double from = quantity(r.at("from"), r.path("from"), temperature);
        const double to = quantity(r.at("to"), r.path("to"), temperature);
        const std::size_t steps = as_count(r.at("steps"), r.path("steps"), 2);
        out = uniform_grid(from, to, steps);
    }
    r.finish(strict);
    return out;
}

inline bool is_temperature_param(const std::string& p) { return p == "T_L" || p == "T_R"; }

inline Axis parse_axis(const json& j, const std::string& path, bool strict) {
    ObjectReader r(j, path);
    Axis a;
    const json& p = r.at("param");
    if (!p.is_string()) throw ConfigError(r.path("param"), "expected a string");
    a.param = p.get<std::string>();
    bool known = false;
    for (const auto& n : sweepable_parameters()) known = known || n == a.param;
    if (!known) throw ConfigError(r.path("param"), "unknown sweep parameter '" + a.param + "'");
    // Grid keys live next to "param"; parse them through a copy without it.
    json grid = j;
    grid.erase("param");
    a.values = parse_grid(grid, path, strict, is_temperature_param(a.param));
    r.find("from");
    r.find("to");
    r.find("steps");
    r.find("values");
    r.finish(strict);
    return a;
}

inline LeadParams parse_lead(const json& j, const std::string& path, bool strict) {
    ObjectReader r(j, path);
    LeadParams lead;
    lead.gamma_rate = quantity(r.at("Gamma"), r.path("Gamma"), false);
    lead.temperature = quantity(r.at("T"), r.path("T"), true);
    lead.chem_potential = quantity(r.at("mu"), r.path("mu"), false);
    if (const json* wb = r.find("wide_band")) lead.wide_band = as_bool(*wb, r.path("wide_band"));
    if (const json* g = r.find("gamma")) lead.lorentz_center = quantity(*g, r.path("gamma"), false);
    else if (!lead.wide_band) throw ConfigError(r.path("gamma"), "missing required field");
    if (const json* d = r.find("delta")) lead.lorentz_width = quantity(*d, r.path("delta"), false);
    else if (!lead.wide_band) throw ConfigError(r.path("delta"), "missing required field");
    r.finish(strict);

    if (!(lead.gamma_rate > 0.0)) throw ConfigError(r.path("Gamma"), "must be positive");
    if (!(lead.temperature > 0.0)) throw ConfigError(r.path("T"), "must be positive");
    if (!(lead.lorentz_width > 0.0)) throw ConfigError(r.path("delta"), "must be positive");
    return lead;
}

} // namespace detail

struct ParseOptions {
    bool strict{true}; // reject unknown fields
};

inline RunConfig parse_config(const json& root, const ParseOptions& popts = {}) {
    using namespace detail;
    const bool strict = popts.strict;
    ObjectReader r(root, "");
    RunConfig cfg;

    const json& schema = r.at("schema");
    if (!schema.is_number_integer() || schema.get<int>() != schema_version)
        throw ConfigError("schema", "unsupported schema version (expected 1)");

    // system
    {
        ObjectReader s(r.at("system"), "system");
        cfg.system.omega = quantity(s.at("omega"), s.path("omega"), false);
        if (!(cfg.system.omega > 0.0)) throw ConfigError(s.path("omega"), "must be positive");
        const bool has_mu_tilde = s.has("mu_tilde"), has_mu = s.has("mu");
        const bool has_lambda = s.has("lambda"), has_g = s.has("g");
        if (has_mu_tilde == has_mu) throw ConfigError(s.path("mu_tilde"), "give exactly one of mu_tilde or mu");
        if (has_lambda == has_g) throw ConfigError(s.path("lambda"), "give exactly one of lambda or g");
        cfg.system.lambda = has_lambda ? as_number(s.at("lambda"), s.path("lambda"))
                                       : quantity(s.at("g"), s.path("g"), false) / cfg.system.omega;
        const double om = cfg.system.omega, lam = cfg.system.lambda;
        cfg.system.mu_tilde = has_mu_tilde ? quantity(s.at("mu_tilde"), s.path("mu_tilde"), false)
                                           : quantity(s.at("mu"), s.path("mu"), false) - om * lam * lam;
        s.finish(strict);
    }

    // leads
    {
        ObjectReader l(r.at("leads"), "leads");
        cfg.leads[0] = parse_lead(l.at("left"), "leads.left", strict);
        cfg.leads[1] = parse_lead(l.at("right"), "leads.right", strict);
        l.finish(strict);
    }

    // solver
    if (const json* sj = r.find("solver")) {
        ObjectReader s(*sj, "solver");
        if (const json* k = s.find("kind")) {
            if (!k->is_string()) throw ConfigError(s.path("kind"), "expected a string");
            const auto v = k->get<std::string>();
            if (v == "redfield") cfg.solver.kind = GeneratorKind::redfield;
            else if (v == "gkls") cfg.solver.kind = GeneratorKind::gkls;
            else throw ConfigError(s.path("kind"), "expected 'redfield' or 'gkls'");
        }
        if (const json* n = s.find("n_fock")) cfg.solver.n_fock = as_count(*n, s.path("n_fock"), 1);
        if (const json* a = s.find("auto_converge")) cfg.solver.auto_converge = as_bool(*a, s.path("auto_converge"));
        if (const json* lad = s.find("n_fock_ladder")) {
            if (!lad->is_array() || lad->size() < 2) throw ConfigError(s.path("n_fock_ladder"), "expected at least two truncations");
            cfg.solver.n_fock_ladder.clear();
            for (std::size_t i = 0; i < lad->size(); ++i)
                cfg.solver.n_fock_ladder.push_back(
                    as_count((*lad)[i], s.path("n_fock_ladder") + "[" + std::to_string(i) + "]", 1));
        }
        if (const json* t = s.find("converge_tolerance")) {
            cfg.solver.converge_tolerance = as_number(*t, s.path("converge_tolerance"));
            if (!(cfg.solver.converge_tolerance > 0.0)) throw ConfigError(s.path("converge_tolerance"), "must be positive");
        }
        if (const json* t = s.find("residual_tolerance")) {
            cfg.solver.residual_tolerance = as_number(*t, s.path("residual_tolerance"));
            if (!(cfg.solver.residual_tolerance > 0.0)) throw ConfigError(s.path("residual_tolerance"), "must be positive");
        }
        if (const json* m = s.find("memory_budget_mb")) cfg.solver.memory_budget_mb = as_count(*m, s.path("memory_budget_mb"), 1);
        s.finish(strict);
    }
    cfg.system.n_fock = cfg.solver.n_fock;

    // task
    {
        ObjectReader t(r.at("task"), "task");
        const json& type = t.at("type");
        if (!type.is_string()) throw ConfigError(t.path("type"), "expected a string");
        const auto name = type.get<std::string>();
        if (name == "point") {
            cfg.task = TaskType::point;
        } else if (name == "scan") {
            cfg.task = TaskType::scan;
            cfg.scan = parse_axis(t.at("axis"), t.path("axis"), strict);
        } else if (name == "map") {
            cfg.task = TaskType::map;
            cfg.map_x = parse_axis(t.at("x"), t.path("x"), strict);
            cfg.map_y = parse_axis(t.at("y"), t.path("y"), strict);
            if (cfg.map_x.param == cfg.map_y.param) throw ConfigError(t.path("y.param"), "map axes must differ");
            if (cfg.map_x.values.size() < 3) throw ConfigError(t.path("x"), "need at least three points for central differences");
        } else if (name == "transient") {
            cfg.task = TaskType::transient;
            if (const json* init = t.find("initial_state")) {
                ObjectReader i(*init, t.path("initial_state"));
                if (const json* d = i.find("dot")) {
                    const auto dot = as_count(*d, i.path("dot"), 0);
                    if (dot > 1) throw ConfigError(i.path("dot"), "must be 0 or 1");
                    cfg.transient.initial_dot = static_cast<int>(dot);
                }
                if (const json* f = i.find("fock")) cfg.transient.initial_fock = as_count(*f, i.path("fock"), 0);
                i.finish(strict);
            }
            cfg.transient.times = parse_grid(t.at("times"), t.path("times"), strict, false);
            for (std::size_t k = 1; k < cfg.transient.times.size(); ++k)
                if (!(cfg.transient.times[k] > cfg.transient.times[k - 1]))
                    throw ConfigError(t.path("times"), "must be strictly increasing");
            if (cfg.transient.initial_fock > cfg.solver.n_fock)
                throw ConfigError(t.path("initial_state.fock"), "exceeds solver.n_fock");
        } else if (name == "diagnostics") {
            cfg.task = TaskType::diagnostics;
        } else {
            throw ConfigError(t.path("type"), "unknown task type '" + name + "'");
        }
        // Diagnostics settings are accepted on any task so the diagnostics subcommand can use them.
        if (const json* d = t.find("diagnostics")) {
            ObjectReader dr(*d, t.path("diagnostics"));
            if (const json* c = dr.find("correlation")) {
                ObjectReader cr(*c, dr.path("correlation"));
                if (const json* v = cr.find("t_max")) cfg.diagnostics.correlation_t_max = as_number(*v, cr.path("t_max"));
                if (const json* v = cr.find("steps")) cfg.diagnostics.correlation_steps = as_count(*v, cr.path("steps"), 2);
                if (const json* v = cr.find("threshold")) cfg.diagnostics.correlation_threshold = as_number(*v, cr.path("threshold"));
                cr.finish(strict);
                if (!(cfg.diagnostics.correlation_t_max > 0.0)) throw ConfigError(cr.path("t_max"), "must be positive");
            }
            if (const json* l = dr.find("lamb_shift")) {
                ObjectReader lr(*l, dr.path("lamb_shift"));
                cfg.diagnostics.lamb_energies = parse_grid(lr.at("energies"), lr.path("energies"), strict, false);
                lr.finish(strict);
            }
            if (const json* s = dr.find("secular")) {
                ObjectReader sr(*s, dr.path("secular"));
                if (const json* v = sr.find("threshold")) cfg.diagnostics.secular_threshold = as_number(*v, sr.path("threshold"));
                sr.finish(strict);
            }
            dr.finish(strict);
        }
        t.finish(strict);
    }
    if (cfg.diagnostics.lamb_energies.empty()) cfg.diagnostics.lamb_energies = uniform_grid(-10.0 * cfg.system.omega, 10.0 * cfg.system.omega, 50);

    // output
    if (const json* oj = r.find("output")) {
        ObjectReader o(*oj, "output");
        if (const json* q = o.find("qho_populations")) cfg.output.qho_populations = as_count(*q, o.path("qho_populations"), 0);
        if (const json* s = o.find("si_current")) cfg.output.si_current = as_bool(*s, o.path("si_current"));
        o.finish(strict);
    }

    r.finish(strict);
    if (!(cfg.system.lambda == cfg.system.lambda)) throw ConfigError("system.lambda", "must be finite");
    return cfg;
}

inline RunConfig parse_config(const std::string& text, const ParseOptions& popts = {}) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<document>", std::string("malformed JSON: ") + e.what());
    }
    return parse_config(root, popts);
}

namespace detail {

inline json axis_json(const Axis& a) { return json{{"param", a.param}, {"values", a.values}}; }

inline json lead_json(const LeadParams& l) {
    json j{{"Gamma", l.gamma_rate}, {"T", l.temperature}, {"mu", l.chem_potential}, {"wide_band", l.wide_band}};
    j["gamma"] = l.lorentz_center;
    j["delta"] = l.lorentz_width;
    return j;
}

} // namespace detail

// Canonical form with every quantity in angular units; parse_config(to_json(c)) reproduces c.
inline json to_json(const RunConfig& c) {
    using namespace detail;
    json j;
    j["schema"] = schema_version;
    j["system"] = {{"mu_tilde", c.system.mu_tilde}, {"omega", c.system.omega}, {"lambda", c.system.lambda}};
    j["leads"] = {{"left", lead_json(c.leads[0])}, {"right", lead_json(c.leads[1])}};
    j["solver"] = {{"kind", kind_name(c.solver.kind)},
                   {"n_fock", c.solver.n_fock},
                   {"auto_converge", c.solver.auto_converge},
                   {"n_fock_ladder", c.solver.n_fock_ladder},
                   {"converge_tolerance", c.solver.converge_tolerance},
                   {"residual_tolerance", c.solver.residual_tolerance},
                   {"memory_budget_mb", c.solver.memory_budget_mb}};
    json task{{"type", task_name(c.task)}};
    switch (c.task) {
    case TaskType::scan: task["axis"] = axis_json(c.scan); break;
    case TaskType::map:
        task["x"] = axis_json(c.map_x);
        task["y"] = axis_json(c.map_y);
        break;
    case TaskType::transient:
        task["initial_state"] = {{"dot", c.transient.initial_dot}, {"fock", c.transient.initial_fock}};
        task["times"] = {{"values", c.transient.times}};
        break;
    default: break;
    }
    task["diagnostics"] = {
        {"correlation",
         {{"t_max", c.diagnostics.correlation_t_max},
          {"steps", c.diagnostics.correlation_steps},
          {"threshold", c.diagnostics.correlation_threshold}}},
        {"lamb_shift", {{"energies", {{"values", c.diagnostics.lamb_energies}}}}},
        {"secular", {{"threshold", c.diagnostics.secular_threshold}}}};
    j["task"] = task;
    j["output"] = {{"qho_populations", c.output.qho_populations}, {"si_current", c.output.si_current}};
    return j;
}

// Applies one swept parameter value to the system and leads.
inline void apply_parameter(const std::string& name, double value, SystemParams& sys, LeadPair& leads) {
    if (name == "mu_tilde") sys.mu_tilde = value;
    else if (name == "lambda") sys.lambda = value;
    else if (name == "delta_mu") leads = with_bias(leads, value);
    else if (name == "T_L") leads[0].temperature = value;
    else if (name == "T_R") leads[1].temperature = value;
    else if (name == "gamma_L") leads[0].lorentz_center = value;
    else if (name == "gamma_R") leads[1].lorentz_center = value;
    else if (name == "delta_L") leads[0].lorentz_width = value;
    else if (name == "delta_R") leads[1].lorentz_width = value;
    else if (name == "Gamma_L") leads[0].gamma_rate = value;
    else if (name == "Gamma_R") leads[1].gamma_rate = value;
    else throw ConfigError("task", "unknown sweep parameter '" + name + "'");
}

} // namespace nems::sweep
