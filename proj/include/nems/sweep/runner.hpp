// runner.hpp - executes run configurations and renders results.csv, trajectory.csv, meta.json and diagnostics

#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <json.hpp>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "nems/correlation.hpp"
#include "nems/lamb_shift.hpp"
#include "nems/master_equation.hpp"
#include "nems/observables.hpp"
#include "nems/parallel.hpp"
#include "nems/steady_state.hpp"
#include "nems/sweep/config.hpp"
#include "nems/sweep/csv.hpp"
#include "nems/transport.hpp"

namespace nems::sweep {

inline constexpr const char* version = "1.0.0";

// Keeps multi-megabyte generator buffers on the heap between grid points instead of
// returning them to the OS, which otherwise costs a page-fault storm per solve.
inline void retain_heap_memory() {
#if defined(__GLIBC__)
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
}

struct PointRecord {
    std::vector<double> params; // same order as RunOutput::param_names
    std::optional<PointResult> result;
    std::string error;
    double seconds{0.0};
};

struct RunOutput {
    std::vector<std::string> param_names;
    std::vector<PointRecord> records;
    std::string results_csv;
    std::optional<std::string> trajectory_csv;
    std::size_t failures{0};
    double wall_seconds{0.0};
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline double current_scale(const RunConfig& cfg) { return cfg.output.si_current ? current_in_amperes(1.0) : 1.0; }

// Swept parameter names (slow axis first) and the grid points in row order.
inline std::pair<std::vector<std::string>, std::vector<std::vector<double>>> grid_points(const RunConfig& cfg) {
    std::vector<std::vector<double>> pts;
    switch (cfg.task) {
    case TaskType::scan:
        for (double v : cfg.scan.values) pts.push_back({v});
        return {{cfg.scan.param}, pts};
    case TaskType::map:
        for (double y : cfg.map_y.values)
            for (double x : cfg.map_x.values) pts.push_back({y, x});
        return {{cfg.map_y.param, cfg.map_x.param}, pts};
    default: return {{}, {{}}};
    }
}

inline std::vector<std::string> results_header(const RunConfig& cfg, const std::vector<std::string>& params) {
    std::vector<std::string> h = params;
    for (const char* c : {"I_L", "I_R", "conservation_residual", "dot_population", "qho_mean_occupation",
                          "min_eigenvalue", "residual", "n_fock", "converged"})
        h.emplace_back(c);
    for (std::size_t k = 0; k < cfg.output.qho_populations; ++k) h.push_back("qho_p" + std::to_string(k));
    if (cfg.task == TaskType::map) h.push_back("dIR_d" + cfg.map_x.param);
    h.emplace_back("error");
    return h;
}

// dI_R / dx along each row of a map, NaN where a stencil touches a failed point.
inline std::vector<double> map_conductance(const RunConfig& cfg, const std::vector<PointRecord>& records) {
    const std::size_t nx = cfg.map_x.values.size();
    std::vector<double> g(records.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t row = 0; row * nx < records.size(); ++row) {
        std::vector<double> current(nx);
        for (std::size_t j = 0; j < nx; ++j) {
            const auto& rec = records[row * nx + j];
            current[j] = rec.result ? rec.result->current.current_right : std::numeric_limits<double>::quiet_NaN();
        }
        const auto d = finite_difference(cfg.map_x.values, current);
        for (std::size_t j = 0; j < nx; ++j) g[row * nx + j] = d[j];
    }
    return g;
}

inline std::string render_results(const RunConfig& cfg, const std::vector<std::string>& params,
                                  const std::vector<PointRecord>& records) {
    CsvTable table(results_header(cfg, params));
    const double scale = current_scale(cfg);
    std::vector<double> conductance;
    if (cfg.task == TaskType::map) conductance = map_conductance(cfg, records);
    const std::string nan = format_double(std::numeric_limits<double>::quiet_NaN());

    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        std::vector<std::string> row;
        for (double p : rec.params) row.push_back(format_double(p));
        if (rec.result) {
            const auto& r = *rec.result;
            row.push_back(format_double(scale * r.current.current_left));
            row.push_back(format_double(scale * r.current.current_right));
            row.push_back(format_double(scale * r.current.conservation_residual));
            row.push_back(format_double(r.dot_population));
            row.push_back(format_double(r.qho_mean_occupation));
            row.push_back(format_double(r.min_eigenvalue));
            row.push_back(format_double(r.residual));
            row.push_back(std::to_string(r.n_fock));
            row.push_back(r.converged ? "1" : "0");
            for (std::size_t k = 0; k < cfg.output.qho_populations; ++k) {
                const auto kk = static_cast<Eigen::Index>(k);
                row.push_back(format_double(kk < r.qho_populations.size() ? r.qho_populations(kk) : 0.0));
            }
        } else {
            for (int c = 0; c < 7; ++c) row.push_back(nan);
            row.emplace_back("0");
            row.emplace_back("0");
            for (std::size_t k = 0; k < cfg.output.qho_populations; ++k) row.push_back(nan);
        }
        if (cfg.task == TaskType::map) row.push_back(format_double(scale * conductance[i]));
        row.push_back(rec.error);
        table.add_row(std::move(row));
    }
    return table.str();
}

inline PointResult observe_state(const SystemParams& sys, const LeadPair& leads, const Liouvillian& L,
                                 const std::array<RedfieldTensorSet, 2>* tensors, const Eigen::MatrixXd& D,
                                 const BlockDensityMatrix& rho) {
    PointResult r;
    r.state = rho;
    r.n_fock = sys.n_fock;
    r.current = tensors ? particle_currents(*tensors, rho) : gkls_particle_currents(sys, leads, D, rho);
    r.dot_population = dot_population(rho);
    r.min_eigenvalue = state_spectrum(rho)(0);
    const auto lab = to_lab_frame(rho, sys.lambda);
    r.qho_populations = reduced_qho(lab).diagonal().real();
    r.qho_mean_occupation = qho_mean_occupation(lab);
    const double lnorm = L.matrix.norm(), vnorm = vectorize(rho).norm();
    r.residual = (lnorm > 0.0 && vnorm > 0.0) ? vectorize(apply_generator(L, rho)).norm() / (lnorm * vnorm) : 0.0;
    return r;
}

inline RunOutput run_transient(const RunConfig& cfg) {
    RunOutput out;
    const auto t0 = std::chrono::steady_clock::now();
    PointRecord rec;
    try {
        const SystemParams& sys = cfg.system;
        sys.validate();
        const std::size_t M = sys.levels();
        const auto d = displacement_elements(FockSpace::with_default_pad(M), sys.lambda);
        auto lopts = cfg.point_options().liouvillian;
        lopts.displacement = &d;
        const Liouvillian L = build_liouvillian(sys, cfg.leads, cfg.solver.kind, lopts);
        std::optional<std::array<RedfieldTensorSet, 2>> tensors;
        if (cfg.solver.kind == GeneratorKind::redfield) tensors = redfield_tensor_pair(sys, cfg.leads, d);

        const auto rho0 = BlockDensityMatrix::basis_state(M, cfg.transient.initial_dot, cfg.transient.initial_fock);
        const auto traj = evolve(L, rho0, cfg.transient.times);

        const double scale = current_scale(cfg);
        CsvTable table({"t", "trace", "dot_population", "qho_mean_occupation", "I_L", "I_R", "min_eigenvalue"});
        for (std::size_t i = 0; i < traj.times.size(); ++i) {
            const auto obs = observe_state(sys, cfg.leads, L, tensors ? &*tensors : nullptr, d.elements, traj.states[i]);
            table.add_row({format_double(traj.times[i]), format_double(traj.states[i].total_trace().real()),
                           format_double(obs.dot_population), format_double(obs.qho_mean_occupation),
                           format_double(scale * obs.current.current_left),
                           format_double(scale * obs.current.current_right), format_double(obs.min_eigenvalue)});
        }
        out.trajectory_csv = table.str();
        rec.result = observe_state(sys, cfg.leads, L, tensors ? &*tensors : nullptr, d.elements, traj.states.back());
    } catch (const std::exception& e) {
        rec.error = e.what();
        out.failures = 1;
    }
    rec.seconds = seconds_since(t0);
    out.records.push_back(std::move(rec));
    out.results_csv = render_results(cfg, out.param_names, out.records);
    out.wall_seconds = seconds_since(t0);
    return out;
}

} // namespace detail

// Solves every grid point of a point, scan or map task (or a transient run) and renders results.csv.
// Row content does not depend on `threads`.
inline RunOutput run(const RunConfig& cfg, std::size_t threads = 1) {
    if (cfg.task == TaskType::transient) return detail::run_transient(cfg);
    if (cfg.task == TaskType::diagnostics) throw InvalidParameter("run: diagnostics tasks are handled by run_diagnostics");

    const auto t0 = std::chrono::steady_clock::now();
    RunOutput out;
    auto [names, points] = detail::grid_points(cfg);
    out.param_names = names;
    const PointOptions popts = cfg.point_options();

    out.records = parallel_map(points.size(), threads, [&](std::size_t i) {
        const auto p0 = std::chrono::steady_clock::now();
        PointRecord rec;
        rec.params = points[i];
        try {
            SystemParams sys = cfg.system;
            LeadPair leads = cfg.leads;
            for (std::size_t k = 0; k < names.size(); ++k) apply_parameter(names[k], points[i][k], sys, leads);
            rec.result = solve_point(sys, leads, popts);
            rec.result->state = BlockDensityMatrix{}; // not needed downstream, keeps large maps light
        } catch (const std::exception& e) {
            rec.error = e.what();
        }
        rec.seconds = detail::seconds_since(p0);
        return rec;
    });
    for (const auto& r : out.records) out.failures += r.result ? 0 : 1;
    out.results_csv = detail::render_results(cfg, out.param_names, out.records);
    out.wall_seconds = detail::seconds_since(t0);
    return out;
}

struct DiagnosticsOutput {
    std::string correlation_csv;
    std::string lamb_shift_csv;
    std::string secular_csv;
    json report;
    std::size_t guard_violations{0};
};

// Correlation traces, Lamb-shift table and secular-validity report for the configured leads.
inline DiagnosticsOutput run_diagnostics(const RunConfig& cfg) {
    DiagnosticsOutput out;
    const char* lead_names[2] = {"left", "right"};
    const std::string nan = format_double(std::numeric_limits<double>::quiet_NaN());
    json guards = json::array();

    // Bath correlation functions.
    CsvTable corr({"lead", "q", "s", "re", "im", "abs"});
    json corr_report = json::array();
    const auto times = uniform_grid(0.0, cfg.diagnostics.correlation_t_max, cfg.diagnostics.correlation_steps);
    CorrelationOptions copts;
    copts.decay_threshold = cfg.diagnostics.correlation_threshold;
    for (std::size_t l = 0; l < 2; ++l) {
        const auto& lead = cfg.leads[l];
        if (lead.wide_band) {
            corr_report.push_back({{"lead", lead_names[l]}, {"status", "skipped"}, {"reason", "wide-band lead"}});
            continue;
        }
        for (int q = 0; q <= 1; ++q) {
            const auto trace = bath_correlation(lead, q, times, copts);
            for (std::size_t i = 0; i < times.size(); ++i)
                corr.add_row({lead_names[l], std::to_string(q), format_double(times[i]),
                              format_double(trace.values[i].real()), format_double(trace.values[i].imag()),
                              format_double(std::abs(trace.values[i]))});
            json entry{{"lead", lead_names[l]},
                       {"q", q},
                       {"status", trace.decayed() ? "decayed" : "not_decayed"},
                       {"abs_at_zero", std::abs(trace.values.front())},
                       {"threshold", copts.decay_threshold},
                       {"window_half_width", trace.window_half_width},
                       {"frequency_points", trace.frequency_points}};
            entry["decay_time"] = trace.decay_time ? json(*trace.decay_time) : json(nullptr);
            if (!trace.decayed()) {
                guards.push_back({{"check", "correlation_decay"}, {"lead", lead_names[l]}, {"q", q},
                                  {"message", "|C(s)| did not fall below threshold within the sampled window"}});
            }
            corr_report.push_back(entry);
        }
    }
    out.correlation_csv = corr.str();

    // Lamb shift on the lower branch.
    CsvTable lamb({"lead", "q", "energy", "im_g", "re_g", "ratio", "triangle_bound", "near_pole", "status"});
    json lamb_report = json::array();
    for (std::size_t l = 0; l < 2; ++l) {
        try {
            const auto rep = lamb_shift_bound_report(cfg.leads[l], cfg.diagnostics.lamb_energies);
            for (const auto& e : rep.entries)
                lamb.add_row({lead_names[l], std::to_string(e.q), format_double(e.energy), format_double(e.im),
                              format_double(e.re), format_double(e.ratio), format_double(e.triangle_bound),
                              e.near_pole ? "1" : "0", "ok"});
            lamb_report.push_back(
                {{"lead", lead_names[l]}, {"status", "ok"}, {"any_ratio_exceeds_one", rep.any_ratio_exceeds_one}});
        } catch (const GuardViolation& e) {
            lamb.add_row({lead_names[l], "", nan, nan, nan, nan, nan, "0", "guard_violation"});
            lamb_report.push_back({{"lead", lead_names[l]}, {"status", "guard_violation"}, {"message", e.what()}});
            guards.push_back({{"check", "lamb_shift_pole_guard"}, {"lead", lead_names[l]}, {"message", e.what()}});
        } catch (const InvalidParameter& e) {
            lamb.add_row({lead_names[l], "", nan, nan, nan, nan, nan, "0", "skipped"});
            lamb_report.push_back({{"lead", lead_names[l]}, {"status", "skipped"}, {"message", e.what()}});
        }
    }
    out.lamb_shift_csv = lamb.str();

    // Secular validity.
    CsvTable sec({"lead", "Gamma", "ratio", "ratio_no_factor2", "threshold", "pass", "pass_no_factor2"});
    const auto s = secular_validity(cfg.system, cfg.leads, cfg.diagnostics.secular_threshold);
    for (std::size_t l = 0; l < 2; ++l) {
        const bool p = s.ratio[l] < s.threshold, p2 = s.ratio_no_factor2[l] < s.threshold;
        sec.add_row({lead_names[l], format_double(cfg.leads[l].gamma_rate), format_double(s.ratio[l]),
                     format_double(s.ratio_no_factor2[l]), format_double(s.threshold), p ? "1" : "0", p2 ? "1" : "0"});
    }
    out.secular_csv = sec.str();
    if (!s.pass)
        guards.push_back({{"check", "secular_validity"}, {"message", "Gamma / (2 max(|mu_tilde|, omega)) exceeds threshold"}});

    json lead_warnings = json::object();
    for (std::size_t l = 0; l < 2; ++l) lead_warnings[lead_names[l]] = cfg.leads[l].warnings();

    out.guard_violations = guards.size();
    out.report = {{"correlation", corr_report},
                  {"lamb_shift", lamb_report},
                  {"secular", {{"ratio", s.ratio}, {"ratio_no_factor2", s.ratio_no_factor2}, {"threshold", s.threshold},
                               {"pass", s.pass}, {"pass_no_factor2", s.pass_no_factor2}}},
                  {"lead_warnings", lead_warnings},
                  {"guard_violations", guards}};
    return out;
}

inline json versions_json() {
    return {{"nems", version},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"boost", BOOST_LIB_VERSION},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                                  "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
            {"compiler", __VERSION__}};
}

inline json meta_json(const RunConfig& cfg, const RunOutput& out, std::size_t threads, std::optional<long long> seed) {
    std::map<std::size_t, std::size_t> n_fock_counts;
    std::size_t unconverged = 0;
    double max_point = 0.0, sum_point = 0.0;
    for (const auto& r : out.records) {
        if (r.result) {
            ++n_fock_counts[r.result->n_fock];
            unconverged += r.result->converged ? 0 : 1;
        }
        max_point = std::max(max_point, r.seconds);
        sum_point += r.seconds;
    }
    json counts = json::object();
    for (const auto& [n, c] : n_fock_counts) counts[std::to_string(n)] = c;
    json meta{{"resolved_config", to_json(cfg)},
              {"versions", versions_json()},
              {"threads", threads},
              {"points", out.records.size()},
              {"failed_points", out.failures},
              {"n_fock_used", counts},
              {"unconverged_points", unconverged},
              {"current_unit", cfg.output.si_current ? "ampere" : "particles per ns"},
              {"timings",
               {{"wall_seconds", out.wall_seconds},
                {"point_seconds_mean", out.records.empty() ? 0.0 : sum_point / static_cast<double>(out.records.size())},
                {"point_seconds_max", max_point}}}};
    if (cfg.task == TaskType::map)
        meta["notes"] = {{"dIR_d" + cfg.map_x.param, "central differences on the grid, one-sided at the edges"}};
    meta["seed"] = seed ? json(*seed) : json(nullptr);
    return meta;
}

// Ratio of integrated |dI_R/d delta_mu| over delta_mu > 0 and delta_mu < 0 for a (mu_tilde, delta_mu) map run.
// An invented summary metric for comparing bias polarities.
inline double edge_asymmetry_ratio(const RunConfig& cfg, const RunOutput& out) {
    if (cfg.task != TaskType::map || cfg.map_x.param != "delta_mu")
        throw InvalidParameter("edge_asymmetry_ratio: needs a map with delta_mu on the x axis");
    const auto g = detail::map_conductance(cfg, out.records);
    const auto nx = static_cast<Eigen::Index>(cfg.map_x.values.size());
    const auto ny = static_cast<Eigen::Index>(cfg.map_y.values.size());
    Eigen::MatrixXd m(ny, nx);
    for (Eigen::Index i = 0; i < ny; ++i)
        for (Eigen::Index j = 0; j < nx; ++j) m(i, j) = g[static_cast<std::size_t>(i * nx + j)];
    return nems::edge_asymmetry_ratio(cfg.map_y.values, cfg.map_x.values, m);
}

} // namespace nems::sweep
