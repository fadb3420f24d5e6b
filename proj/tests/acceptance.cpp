// acceptance - one PASS/FAIL line per primary acceptance criterion, with measured runtimes

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nems/nems.hpp"
#include "nems/sweep/config.hpp"
#include "nems/sweep/runner.hpp"
#include "support/oracles.hpp"

namespace {

using namespace nems;
namespace fs = std::filesystem;

struct Outcome {
    bool pass{false};
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double limit_seconds;
    std::function<Outcome()> check;
};

std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

sweep::RunConfig load(const std::string& name) {
    std::ifstream f(fs::path(NEMS_CONFIG_DIR) / name, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return sweep::parse_config(ss.str());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

LeadPair fig3_leads() {
    return {LeadParams{0.2 * M_PI, 2.0, 2.5, 2.5, 2.0, false}, LeadParams{0.2 * M_PI, 2.0, -2.5, -2.5, 2.0, false}};
}

Outcome zero_coupling_recovery() {
    SystemParams sys{1.3, 2.0 * M_PI, 0.0, 8};
    const auto leads = fig3_leads();
    SteadyStateOptions opts;
    opts.reference = BlockDensityMatrix::basis_state(sys.levels(), 0, 0);
    const auto ss = steady_state(build_liouvillian(sys, leads, GeneratorKind::redfield), opts);
    const double p1 = qd_rate_equation(leads, sys.mu_tilde);
    const double err = std::abs(dot_population(ss.state) - p1);
    // Product of the two-level state with the oscillator ground state.
    auto product = BlockDensityMatrix::zero(sys.levels());
    product.block0(0, 0) = 1.0 - p1;
    product.block1(0, 0) = p1;
    const double fact = trace_distance(ss.state, product);
    return {err <= 1e-10 && fact <= 1e-10, fmt("|p1 - rate eq| = %.2e", err) + fmt(", factorization distance %.2e", fact)};
}

Outcome gkls_thermalization() {
    double worst = 0.0;
    for (double lambda : {0.5, 1.0}) {
        SystemParams sys{0.7, 2.0 * M_PI, lambda, 10};
        const LeadParams left{0.2 * M_PI, 2.0, 0.0, 2.5, 2.0, false};
        LeadParams right = left;
        right.lorentz_center = -2.5;
        const auto ss = steady_state(build_liouvillian(sys, {left, right}, GeneratorKind::gkls));
        worst = std::max(worst, trace_distance(ss.state, oracle::polaron_gibbs(sys, 2.0, 0.0)));
    }
    return {worst <= 1e-8, fmt("max trace distance to Gibbs %.2e", worst)};
}

Outcome current_conservation() {
    std::mt19937_64 rng(20240611);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const auto draw = oracle::random_valid_parameters(rng, 8);
        const auto r = solve_point(draw.sys, draw.leads);
        const double scale = std::max(std::abs(r.current.current_left), std::abs(r.current.current_right));
        worst = std::max(worst, r.current.conservation_residual / std::max(scale, 1e-300));
    }
    return {worst <= 1e-9, fmt("max |I_L + I_R| / |I| = %.2e over 20 draws", worst)};
}

Outcome lamb_shift_oracle() {
    const auto energies = uniform_grid(-20.0, 20.0, 50);
    double worst = 0.0;
    for (const auto& lead : fig3_leads())
        for (int q = 0; q <= 1; ++q)
            for (double a : energies) {
                const double got = principal_value_transform(lead, q, a).value;
                const double ref = oracle::principal_value_quadrature(lead, q, a);
                worst = std::max(worst, std::abs(got - ref) / std::max(std::abs(ref), 1e-3));
            }
    bool guard = false;
    auto bad = fig3_leads()[0];
    bad.lorentz_width = M_PI * bad.temperature;
    try {
        principal_value_transform(bad, 0, 0.0);
    } catch (const GuardViolation&) {
        guard = true;
    }
    return {worst <= 1e-6 && guard,
            fmt("max relative deviation %.2e on 50 energies", worst) + (guard ? ", guard raised" : ", guard NOT raised")};
}

Outcome displacement_correctness() {
    double closed = 0.0, product = 0.0;
    for (double lambda : {0.5, 1.0, 2.0, 3.0}) {
        for (std::size_t n : {10u, 20u, 40u}) {
            const auto d = displacement_elements(FockSpace::with_default_pad(n), lambda);
            closed = std::max(closed, (d.elements - oracle::displacement_expm(n, lambda, n + 160)).cwiseAbs().maxCoeff());
        }
        const std::size_t n = 40;
        const auto p = displacement_elements(FockSpace(n, 2 * n), lambda);
        const auto m = displacement_elements(FockSpace(n, 2 * n), -lambda);
        const Eigen::MatrixXd id = (p.padded * m.padded).topLeftCorner(n, n);
        product = std::max(product, (id - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff());
    }
    return {closed <= 1e-10 && product <= 1e-8,
            fmt("Laguerre vs expm %.2e", closed) + fmt(", D(l)D(-l) - I %.2e", product)};
}

Outcome thermal_scan() {
    const auto cfg = load("fig5a_thermal_scan.json");
    const auto out = sweep::run(cfg, 1);
    if (out.failures) return {false, std::to_string(out.failures) + " failed points"};
    const auto& lambdas = cfg.map_y.values;
    const auto& mu = cfg.map_x.values;
    std::vector<double> peak;
    bool sign_change = true;
    std::string detail;
    for (std::size_t a = 0; a < lambdas.size(); ++a) {
        std::vector<double> current;
        for (std::size_t i = 0; i < mu.size(); ++i) current.push_back(out.records[a * mu.size() + i].result->current.current_right);
        const auto z = zero_crossings(mu, current);
        bool negative = false;
        for (double x : z) negative = negative || x < 0.0;
        sign_change = sign_change && negative;
        double m = 0.0;
        for (double c : current) m = std::max(m, std::abs(c));
        peak.push_back(m);
        detail += fmt("lambda=%.1f: ", lambdas[a]) + (z.empty() ? std::string("no crossing") : fmt("first crossing %.3f", z.front())) +
                  fmt(", max|I_R| %.4e; ", m);
    }
    bool decreasing = true;
    for (std::size_t a = 1; a < peak.size(); ++a) decreasing = decreasing && peak[a] < peak[a - 1];
    return {sign_change && decreasing, detail + (decreasing ? "decreasing in lambda" : "NOT decreasing in lambda")};
}

struct MapRuns {
    sweep::RunOutput serial, parallel;
    double ratio{0.0};
};

MapRuns wide_map, finite_map;

Outcome stability_maps() {
    auto run_pair = [](const char* name, MapRuns& runs) {
        const auto cfg = load(name);
        runs.serial = sweep::run(cfg, 1);
        runs.parallel = sweep::run(cfg, 8);
        runs.ratio = sweep::edge_asymmetry_ratio(cfg, runs.serial);
    };
    run_pair("fig5b_wideband_map.json", wide_map);
    run_pair("fig5c_finite_width_map.json", finite_map);
    const bool wide_ok = std::abs(wide_map.ratio - 1.0) <= 0.05;
    const bool finite_ok = std::abs(finite_map.ratio - 1.0) > 0.10;
    const double serial = std::max(wide_map.serial.wall_seconds, finite_map.serial.wall_seconds);
    const double parallel = std::max(wide_map.parallel.wall_seconds, finite_map.parallel.wall_seconds);
    const bool time_ok = serial < 900.0 && parallel < 180.0;
    const bool clean = wide_map.serial.failures == 0 && finite_map.serial.failures == 0;
    std::string detail = fmt("wide-band ratio %.5f", wide_map.ratio) + fmt(", finite-width ratio %.5f", finite_map.ratio) +
                         fmt("; per-map serial %.1f s", wide_map.serial.wall_seconds) +
                         fmt(" / %.1f s", finite_map.serial.wall_seconds) +
                         fmt(", 8 workers %.1f s", wide_map.parallel.wall_seconds) +
                         fmt(" / %.1f s", finite_map.parallel.wall_seconds) +
                         " (limits 900 / 180 s, " + std::to_string(std::thread::hardware_concurrency()) +
                         " hardware threads)";
    return {wide_ok && finite_ok && time_ok && clean, detail};
}

Outcome structural_invariants() {
    std::mt19937_64 rng(7);
    double trace_err = 0.0, herm_err = 0.0, min_eig = 1.0;
    for (int i = 0; i < 6; ++i) {
        const auto draw = oracle::random_valid_parameters(rng, 6);
        for (auto kind : {GeneratorKind::redfield, GeneratorKind::gkls}) {
            const auto L = build_liouvillian(draw.sys, draw.leads, kind);
            for (int k = 0; k < 3; ++k) {
                const auto drho = apply_generator(L, oracle::random_state(draw.sys.levels(), rng));
                trace_err = std::max(trace_err, std::abs(drho.total_trace()));
                herm_err = std::max(herm_err, drho.hermiticity_error());
            }
            if (kind == GeneratorKind::gkls) min_eig = std::min(min_eig, steady_state(L).min_eigenvalue);
        }
    }
    SystemParams sys{1.0, 2.0 * M_PI, 1.0, 8};
    std::vector<double> distance;
    for (double scale : {1.0, 0.5, 0.25, 0.125}) {
        auto leads = fig3_leads();
        for (auto& l : leads) l.gamma_rate *= scale;
        const auto red = steady_state(build_liouvillian(sys, leads, GeneratorKind::redfield));
        const auto gkls = steady_state(build_liouvillian(sys, leads, GeneratorKind::gkls));
        distance.push_back(trace_distance(red.state, gkls.state));
    }
    bool shrinking = true;
    for (std::size_t i = 1; i < distance.size(); ++i) shrinking = shrinking && distance[i] < distance[i - 1];
    std::string detail = fmt("trace %.1e", trace_err) + fmt(", hermiticity %.1e", herm_err) +
                         fmt(", GKLS min eigenvalue %.2e", min_eig) + "; Redfield-GKLS distance";
    for (double d : distance) detail += fmt(" %.3e", d);
    return {trace_err <= 1e-12 && herm_err <= 1e-12 && min_eig >= -1e-10 && shrinking, detail};
}

Outcome correlation_decay() {
    const auto times = uniform_grid(0.0, 10.0, 401);
    bool ok = true;
    double latest = 0.0;
    for (const auto& lead : fig3_leads())
        for (int q = 0; q <= 1; ++q) {
            const auto tr = bath_correlation(lead, q, times);
            if (!tr.decayed()) {
                ok = false;
                continue;
            }
            const double c0 = std::abs(tr.values.front());
            for (std::size_t i = 0; i < times.size(); ++i)
                if (times[i] >= *tr.decay_time && std::abs(tr.values[i]) >= 1e-3 * c0) ok = false;
            latest = std::max(latest, *tr.decay_time);
        }
    return {ok, fmt("all traces below 1e-3 |C(0)| from s = %.3f within the window [0, 10]", latest)};
}

Outcome determinism() {
    bool ok = wide_map.serial.results_csv == wide_map.parallel.results_csv &&
              finite_map.serial.results_csv == finite_map.parallel.results_csv;
    std::string detail = ok ? "criterion-7 maps identical" : "criterion-7 maps DIFFER";
    for (const char* name : {"fig3_point.json", "fig3_transient.json", "fig5a_thermal_scan.json"}) {
        const auto cfg = load(name);
        const auto a = sweep::run(cfg, 1);
        const auto b = sweep::run(cfg, 8);
        const bool same = a.results_csv == b.results_csv && a.trajectory_csv == b.trajectory_csv;
        ok = ok && same;
        detail += std::string(", ") + name + (same ? " identical" : " DIFFERS");
    }
    return {ok, detail + " (serial vs 8 workers)"};
}

} // namespace

int main() {
    sweep::retain_heap_memory();
    const std::vector<Criterion> criteria{
        {1, "zero-coupling recovery", 1.0, zero_coupling_recovery},
        {2, "GKLS equilibrium thermalization", 5.0, gkls_thermalization},
        {3, "current conservation", 60.0, current_conservation},
        {4, "Lamb-shift oracle and pole guard", 30.0, lamb_shift_oracle},
        {5, "displacement matrix elements", 10.0, displacement_correctness},
        {6, "thermally driven current scan", 300.0, thermal_scan},
        {7, "stability maps", 1800.0, stability_maps},
        {8, "structural invariants", 120.0, structural_invariants},
        {9, "bath-correlation decay", 10.0, correlation_decay},
        {10, "determinism", 600.0, determinism},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double t = seconds_since(t0);
        const bool in_time = t < c.limit_seconds;
        const bool pass = o.pass && in_time;
        failures += pass ? 0 : 1;
        std::printf("criterion %2d %-34s %s  %s; %.2f s (limit %.0f s)%s\n", c.id, c.name.c_str(), pass ? "PASS" : "FAIL",
                    o.detail.c_str(), t, c.limit_seconds, in_time ? "" : " OVER TIME");
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
