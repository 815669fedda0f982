#pragma once

#include "wassflow/config.hpp"
#include "wassflow/core.hpp"
#include "wassflow/elasticity.hpp"
#include "wassflow/optimizer.hpp"
#include "wassflow/ot.hpp"
#include "wassflow/presets.hpp"
#include "wassflow/sensitivities.hpp"
#include "wassflow/transport.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace wassflow::driver {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Verification batteries. Geometry and fields are fixed presets; the dens
// battery takes its grid and seed from the config. Tolerances are pinned
// here: 1e-3 for shape/top, 1e-6 linear dens, 2e-2 compliance dens.
// ---------------------------------------------------------------------------

namespace battery {

inline AnalyticShape preset_disk() { return Disk{{0.10, -0.05}, 0.8}; }
inline AnalyticShape preset_rect() { return Rectangle{{-0.55, -0.40}, 1.1, 0.85}; }

inline std::function<double(Vec2)> weight_g() {
    return [](Vec2 p) { return 1.0 + 0.3 * p.x + 0.2 * p.y + 0.15 * p.x * p.y; };
}

struct NamedField {
    std::string name;
    VectorFieldSpec field;
};

inline std::vector<NamedField> shape1_fields() {
    std::vector<NamedField> fields;
    fields.push_back({"dilate", VectorFieldSpec::linear(Mat2::identity())});
    fields.push_back({"shear", VectorFieldSpec::linear({0.4, 0.15, -0.1, -0.15})});
    fields.push_back({"gauss-grad",
                      VectorFieldSpec::gradient(gaussian_potential({0.72, 0.08}, 0.33, 0.12))});
    return fields;
}

inline std::vector<std::pair<std::string, Potential>> shape2_potentials() {
    return {
        {"bump-a", gaussian_potential({0.72, 0.08}, 0.33, 0.12)},
        {"bump-b", gaussian_potential({-0.35, 0.30}, 0.40, -0.10)},
        {"bump-c", gaussian_potential({0.20, -0.60}, 0.37, 0.15)},
    };
}

inline std::vector<DerivativeReport> shape1() {
    std::vector<DerivativeReport> reports;
    const std::vector<std::pair<std::string, AnalyticShape>> shapes = {
        {"disk", preset_disk()}, {"rect", preset_rect()}};
    const std::vector<std::pair<std::string, ShapeObjective>> objectives = {
        {"volume", VolumeObjective{}}, {"weighted", WeightedVolumeObjective{weight_g()}}};
    for (const auto& [oname, obj] : objectives)
        for (const auto& [sname, shape] : shapes)
            for (const auto& nf : shape1_fields()) {
                DerivativeReport r = verify_shape1(shape, nf.field, obj);
                r.test = "shape1." + oname + "." + sname + "." + nf.name;
                reports.push_back(std::move(r));
            }
    return reports;
}

inline std::vector<DerivativeReport> shape2() {
    std::vector<DerivativeReport> reports;
    const std::vector<std::pair<std::string, AnalyticShape>> shapes = {
        {"disk", preset_disk()}, {"rect", preset_rect()}};
    const std::vector<std::pair<std::string, ShapeObjective>> objectives = {
        {"volume", VolumeObjective{}}, {"weighted", WeightedVolumeObjective{weight_g()}}};
    for (const auto& [oname, obj] : objectives)
        for (const auto& [sname, shape] : shapes)
            for (const auto& [fname, phi] : shape2_potentials()) {
                DerivativeReport r = verify_shape2(shape, phi, obj);
                r.test = "shape2." + oname + "." + sname + "." + fname;
                reports.push_back(std::move(r));
            }
    return reports;
}

inline std::vector<DerivativeReport> top() {
    std::vector<DerivativeReport> reports;
    const Disk disk{{0.0, 0.0}, 1.0};
    const Vec2 x0{0.0, 0.0};
    auto g = [](Vec2 p) { return 1.4 + 0.3 * p.x - 0.2 * p.y + 0.25 * p.x * p.x; };
    for (double eps : {0.05, 0.10}) {
        const std::vector<double> ts{0.5 * eps, 0.35 * eps, 0.25 * eps, 0.18 * eps, 0.125 * eps};
        DerivativeReport rv = verify_top(disk, x0, eps, ts, VolumeObjective{});
        rv.test = "top.volume.eps" + std::to_string(eps);
        reports.push_back(std::move(rv));
        DerivativeReport rw = verify_top(disk, x0, eps, ts, WeightedVolumeObjective{g});
        rw.test = "top.weighted.eps" + std::to_string(eps);
        reports.push_back(std::move(rw));
    }
    return reports;
}

inline BoundaryCondition cantilever_bc(const GridSpec& g) {
    BoundaryCondition bc;
    bc.dirichlet.push_back({Side::Left, 0, g.ny});
    bc.tractions.push_back({{Side::Right, 0, g.ny}, Vec2{0.0, -1.0}});
    return bc;
}

inline std::vector<DerivativeReport> dens(const GridSpec& grid, std::uint64_t seed) {
    std::vector<DerivativeReport> reports;
    const AnalyticDensity rho = seeded_mixture(grid, seed, 0);

    LinearDensityObjective linear;
    linear.F = [](Vec2 p) { return p.x; };
    linear.gradF = [](Vec2) { return Vec2{1.0, 0.0}; };
    for (int s = 1; s <= 5; ++s) {
        const Potential phi = seeded_potential(grid, seed, static_cast<std::uint64_t>(s));
        DerivativeReport r = verify_dens(linear, grid, rho, phi);
        r.test = "dens.linear.phi" + std::to_string(s);
        reports.push_back(std::move(r));
    }

    // compliance on a 32x32 cantilever-style box regardless of the main
    // grid; blobs wide enough for the FE mesh to resolve
    const GridSpec cgrid(32, 32, grid.x0, grid.y0, grid.lx, grid.ly);
    const AnalyticDensity crho = seeded_mixture(cgrid, seed, 0, 3, wide_mixture_shape());
    // b_min large enough that near-void elements keep F resolvable at h=1/32
    ComplianceDensityObjective comp{MaterialLaw(1.0, 1.0, 1.0, 0.03, 1.0),
                                    cantilever_bc(cgrid), 1.0};
    DensVerifyOptions copt;
    copt.ts = {0.02, 0.01};
    copt.tol = 2e-2;
    copt.flow_steps = 16;
    for (int s = 1; s <= 5; ++s) {
        const Potential phi = seeded_potential(cgrid, seed, static_cast<std::uint64_t>(s));
        DerivativeReport r = verify_dens(comp, cgrid, crho, phi, copt);
        r.test = "dens.compliance.phi" + std::to_string(s);
        reports.push_back(std::move(r));
    }
    return reports;
}

} // namespace battery

// ---------------------------------------------------------------------------
// JSON report plumbing.
// ---------------------------------------------------------------------------

inline json report_json(const DerivativeReport& r) {
    json j{{"test", r.test},
           {"estimate", r.estimate},
           {"reference", r.reference},
           {"rel_err", r.rel_err},
           {"orders", r.richardson_orders},
           {"pass", r.pass}};
    if (std::isfinite(r.fit_exponent)) j["fit_exponent"] = r.fit_exponent;
    return j;
}

inline void write_reports(const std::vector<DerivativeReport>& reports,
                          const std::filesystem::path& path) {
    json arr = json::array();
    for (const auto& r : reports) arr.push_back(report_json(r));
    std::ofstream out(path);
    out << arr.dump(2) << "\n";
}

inline json runlog_json(const RunLogEntry& e) {
    json j{{"step", e.step}, {"t", e.t}, {"dt", e.dt}, {"objective", e.objective},
           {"mass", e.mass}, {"max_v", e.vmax}, {"min_rho", e.min_rho}, {"max_rho", e.max_rho}};
    if (e.projected) {
        j["projected"] = true;
        j["mass_before_projection"] = e.mass_before_projection;
    }
    return j;
}

inline void write_runlog(const RunLog& log, const std::filesystem::path& path) {
    std::ofstream out(path);
    for (const auto& e : log.entries) out << runlog_json(e).dump() << "\n";
}

inline void write_transport_log(const std::vector<StepRecord>& records,
                                const std::filesystem::path& path) {
    std::ofstream out(path);
    for (const auto& r : records) {
        const json j{{"step", r.step}, {"t", r.t}, {"dt", r.dt},
                     {"mass", r.mass}, {"min_rho", r.min_rho}, {"max_rho", r.max_rho}};
        out << j.dump() << "\n";
    }
}

inline void write_density_snapshot(const GridDensity& d, const std::filesystem::path& dir,
                                   int step) {
    {
        std::ofstream csv(dir / ("rho_" + std::to_string(step) + ".csv"));
        write_csv(d, csv);
    }
    {
        std::ofstream pgm(dir / ("rho_" + std::to_string(step) + ".pgm"));
        write_pgm(d, pgm);
    }
}

// ---------------------------------------------------------------------------
// Subcommand drivers. Exit codes: 0 ok, 1 failed verification, 2 config
// error, 3 numerical failure.
// ---------------------------------------------------------------------------

struct Options {
    std::string config_path;
    std::string only;     // verify: shape1|shape2|top|dens (empty = all)
    std::string out_dir;  // overrides [output].dir
    bool quiet = false;
};

namespace detail {

inline GridSpec grid_from(const Config& cfg) {
    const int nx = static_cast<int>(cfg.get_int("grid", "nx"));
    const int ny = static_cast<int>(cfg.get_int("grid", "ny"));
    const double x0 = cfg.get_double("grid", "x0", 0.0);
    const double y0 = cfg.get_double("grid", "y0", 0.0);
    const double lx = cfg.get_double("grid", "lx", 1.0);
    const double ly = cfg.get_double("grid", "ly", 1.0);
    try {
        return GridSpec(nx, ny, x0, y0, lx, ly);
    } catch (const Error& e) {
        throw ConfigError(std::string("bad [grid] values: ") + e.what());
    }
}

inline std::filesystem::path out_dir_from(const Config& cfg, const Options& opt) {
    const std::string dir = !opt.out_dir.empty() ? opt.out_dir
                                                 : cfg.get_string("output", "dir", "out");
    std::filesystem::path p(dir);
    std::filesystem::create_directories(p);
    return p;
}

inline bool quiet_from(const Config& cfg, const Options& opt) {
    return opt.quiet || cfg.get_int("output", "quiet", 0) != 0;
}

inline Side side_from(const std::string& name) {
    if (name == "left") return Side::Left;
    if (name == "right") return Side::Right;
    if (name == "bottom") return Side::Bottom;
    if (name == "top") return Side::Top;
    throw ConfigError("bad side name `" + name + "` (expected left|right|bottom|top)");
}

// "left" covers the whole side; "left:8:24" covers cell edges [8, 24).
inline EdgeSpan span_from(const std::string& text, const GridSpec& g) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        const Side side = side_from(text);
        const int cells = (side == Side::Left || side == Side::Right) ? g.ny : g.nx;
        return {side, 0, cells};
    }
    const auto colon2 = text.find(':', colon + 1);
    if (colon2 == std::string::npos)
        throw ConfigError("bad edge span `" + text + "` (expected side or side:lo:hi)");
    try {
        const Side side = side_from(text.substr(0, colon));
        const int lo = std::stoi(text.substr(colon + 1, colon2 - colon - 1));
        const int hi = std::stoi(text.substr(colon2 + 1));
        return {side, lo, hi};
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("bad edge span `" + text + "` (expected side or side:lo:hi)");
    }
}

inline VectorFieldSpec field_from(const Config& cfg) {
    const std::string preset = cfg.get_string("field", "preset");
    if (preset == "translate")
        return field_preset("translate", cfg.get_double("field", "vx"), cfg.get_double("field", "vy"));
    if (preset == "dilate") return field_preset("dilate", cfg.get_double("field", "rate"));
    if (preset == "rotate") return field_preset("rotate");
    if (preset == "gaussian-potential")
        return field_preset("gaussian-potential", cfg.get_double("field", "cx"),
                            cfg.get_double("field", "cy"), cfg.get_double("field", "s"),
                            cfg.get_double("field", "amp"));
    if (preset == "hole")
        return field_preset("hole", cfg.get_double("field", "x0"), cfg.get_double("field", "y0"),
                            cfg.get_double("field", "eps"));
    throw ConfigError("unknown field preset `" + preset + "`");
}

} // namespace detail

inline int run_verify(const Config& cfg, const Options& opt) {
    const GridSpec grid = detail::grid_from(cfg);
    const auto seed = static_cast<std::uint64_t>(cfg.get_int("flow", "seed", 42));
    const auto dir = detail::out_dir_from(cfg, opt);
    const bool quiet = detail::quiet_from(cfg, opt);

    if (!opt.only.empty() && opt.only != "shape1" && opt.only != "shape2" && opt.only != "top"
        && opt.only != "dens")
        throw ConfigError("--only expects shape1|shape2|top|dens");

    std::vector<DerivativeReport> reports;
    auto want = [&](const std::string& name) { return opt.only.empty() || opt.only == name; };
    if (want("shape1")) for (auto& r : battery::shape1()) reports.push_back(std::move(r));
    if (want("shape2")) for (auto& r : battery::shape2()) reports.push_back(std::move(r));
    if (want("top")) for (auto& r : battery::top()) reports.push_back(std::move(r));
    if (want("dens")) for (auto& r : battery::dens(grid, seed)) reports.push_back(std::move(r));

    write_reports(reports, dir / "report.json");
    bool all_pass = true;
    for (const auto& r : reports) {
        all_pass = all_pass && r.pass;
        if (!quiet)
            std::cout << (r.pass ? "[pass] " : "[FAIL] ") << r.test
                      << " estimate=" << r.estimate << " reference=" << r.reference
                      << " rel_err=" << r.rel_err << "\n";
    }
    if (!quiet)
        std::cout << (all_pass ? "verify: all reports pass\n" : "verify: FAILURES present\n");
    return all_pass ? 0 : 1;
}

inline int run_optimize(const Config& cfg, const Options& opt) {
    const GridSpec grid = detail::grid_from(cfg);
    const auto dir = detail::out_dir_from(cfg, opt);
    const bool quiet = detail::quiet_from(cfg, opt);

    FlowConfig fc;
    fc.safety = cfg.get_double("flow", "safety", 0.45);
    fc.max_steps = static_cast<int>(cfg.get_int("flow", "max_steps"));
    fc.stop_tol = cfg.get_double("flow", "stop_tol", 0.0);
    fc.rho_max = cfg.get_double("flow", "rho_max", 0.0);
    fc.beta = cfg.get_double("flow", "beta", 0.0);
    fc.m_total = cfg.get_double("flow", "m_total", 1.0);
    fc.seed = static_cast<std::uint64_t>(cfg.get_int("flow", "seed", 42));

    const std::string id = cfg.get_string("objective", "id");
    if (id == "quadratic") {
        const Vec2 c{cfg.get_double("objective", "cx", grid.x0 + 0.5 * grid.lx),
                     cfg.get_double("objective", "cy", grid.y0 + 0.5 * grid.ly)};
        fc.objective = QuadraticObjective{c};
    } else if (id == "constant") {
        fc.objective = ConstantObjective{cfg.get_double("objective", "value", 0.0)};
    } else if (id == "compliance") {
        MaterialLaw law;
        try {
            law = MaterialLaw(cfg.get_double("elasticity", "mu", 1.0),
                              cfg.get_double("elasticity", "lambda", 1.0),
                              cfg.get_double("elasticity", "delta", 1.0),
                              cfg.get_double("elasticity", "b_min", 1e-3),
                              cfg.get_double("elasticity", "p", 1.0));
        } catch (const Error& e) {
            throw ConfigError(std::string("bad [elasticity] values: ") + e.what());
        }
        BoundaryCondition bc;
        bc.dirichlet.push_back(
            detail::span_from(cfg.get_string("elasticity", "dirichlet", "left"), grid));
        bc.tractions.push_back(
            {detail::span_from(cfg.get_string("elasticity", "traction", "right"), grid),
             Vec2{cfg.get_double("elasticity", "gx", 0.0), cfg.get_double("elasticity", "gy", -1.0)}});
        fc.m_total = cfg.get_double("elasticity", "m_total", fc.m_total);
        fc.objective = ComplianceFlowObjective{law, bc};
    } else {
        throw ConfigError("unknown [objective].id `" + id + "` (quadratic|constant|compliance)");
    }

    const GridDensity rho0 = sample_density(seeded_mixture(grid, fc.seed, 0), grid);
    write_density_snapshot(rho0, dir, 0);

    const long every = cfg.get_int("flow", "snapshot_every", 0);
    StepObserver observer;
    if (every > 0)
        observer = [&](int step, const GridDensity& d) {
            if (step % every == 0) write_density_snapshot(d, dir, step);
        };

    const RunResult res = run_gradient_flow(rho0, fc, observer);
    write_runlog(res.log, dir / "runlog.jsonl");
    const int final_step = res.log.entries.empty() ? 0 : res.log.entries.back().step;
    if (final_step > 0 && (every <= 0 || final_step % every != 0))
        write_density_snapshot(res.rho, dir, final_step);

    // compliance runs also export the final state and sensitivity fields
    if (const auto* comp = std::get_if<ComplianceFlowObjective>(&fc.objective)) {
        const ElasticSystem sys = assemble(res.rho, comp->law, comp->bc, fc.m_total);
        const ElasticField state = solve_state(sys);
        const GridDensity F = sensitivity_grid(grid, sensitivity_F(res.rho, state, comp->law, fc.m_total));
        {
            std::ofstream csv(dir / "F_final.csv");
            write_csv(F, csv);
        }
        {
            std::ofstream pgm(dir / "F_final.pgm");
            write_pgm(F, pgm);
        }
        for (int comp_idx = 0; comp_idx < 2; ++comp_idx) {
            const GridDensity u = displacement_component_grid(sys, state, comp_idx);
            std::ofstream csv(dir / (comp_idx == 0 ? "ux_final.csv" : "uy_final.csv"));
            write_csv(u, csv);
        }
    }

    if (!quiet) {
        const auto final_path = dir / ("rho_" + std::to_string(final_step) + ".csv");
        std::cout << "final density: " << final_path.string() << "\n";
    }
    return 0;
}

inline int run_transport_demo(const Config& cfg, const Options& opt) {
    const GridSpec grid = detail::grid_from(cfg);
    const auto dir = detail::out_dir_from(cfg, opt);
    const bool quiet = detail::quiet_from(cfg, opt);
    const VectorFieldSpec field = detail::field_from(cfg);
    const double T = cfg.get_double("flow", "T", 0.25);
    const double safety = cfg.get_double("flow", "safety", 0.45);
    const double dt_max = cfg.get_double("flow", "dt_max", 0.0);

    const auto seed = static_cast<std::uint64_t>(cfg.get_int("flow", "seed", 42));
    const GridDensity rho0 = sample_density(seeded_mixture(grid, seed, 0, 1), grid);
    write_density_snapshot(rho0, dir, 0);

    const ContinuityResult res = solve_continuity(rho0, field, T, safety, dt_max);
    write_transport_log(res.records, dir / "runlog.jsonl");
    const int final_step = res.records.empty() ? 0 : res.records.back().step;
    if (final_step > 0) write_density_snapshot(res.rho, dir, final_step);
    if (!quiet) {
        const double drift = res.records.empty() ? 0.0 : std::abs(res.records.back().mass - 1.0);
        std::cout << "transport-demo: steps=" << final_step << " mass_drift=" << drift << "\n";
    }
    return 0;
}

inline int run_ot_check(const Config& cfg, const Options& opt) {
    const auto dir = detail::out_dir_from(cfg, opt);
    const bool quiet = detail::quiet_from(cfg, opt);
    const auto seed = static_cast<std::uint64_t>(cfg.get_int("flow", "seed", 42));

    json results = json::array();
    bool all_pass = true;
    auto record = [&](const std::string& name, double max_err, double tol) {
        const bool pass = max_err <= tol;
        all_pass = all_pass && pass;
        results.push_back({{"test", name}, {"max_err", max_err}, {"tol", tol}, {"pass", pass}});
        if (!quiet)
            std::cout << (pass ? "[pass] " : "[FAIL] ") << name << " max_err=" << max_err << "\n";
    };

    // exact vs brute force, n <= 8
    double err_bf = 0.0;
    for (int k = 0; k < 50; ++k) {
        const int n = 2 + static_cast<int>(mix64(seed, 500 + static_cast<std::uint64_t>(k)) % 7);
        const ParticleMeasure mu = seeded_cloud(seed, 2 * static_cast<std::uint64_t>(k), n);
        const ParticleMeasure nu = seeded_cloud(seed, 2 * static_cast<std::uint64_t>(k) + 1, n);
        err_bf = std::max(err_bf, std::abs(w2_exact(mu, nu).value - w2_bruteforce(mu, nu)));
    }
    record("ot.exact_vs_bruteforce", err_bf, 1e-10);

    // 1-D monotone rearrangement vs LP
    double err_1d = 0.0;
    for (int k = 0; k < 20; ++k) {
        CounterRng rng(seed, 4000 + static_cast<std::uint64_t>(k) * 64);
        const int n = 2 + static_cast<int>(rng.next_u64() % 7);
        std::vector<Vec2> xs, ys;
        const double ycoord = rng.next_in(-0.5, 0.5);
        for (int q = 0; q < n; ++q) xs.push_back({rng.next_in(-1.0, 1.0), ycoord});
        for (int q = 0; q < n; ++q) ys.push_back({rng.next_in(-1.0, 1.0), ycoord});
        const ParticleMeasure mu = ParticleMeasure::equal_weights(xs);
        const ParticleMeasure nu = ParticleMeasure::equal_weights(ys);
        err_1d = std::max(err_1d, std::abs(w2_1d(mu, nu) - w2_exact(mu, nu).value));
    }
    record("ot.1d_vs_exact", err_1d, 1e-10);

    // triangle inequality on random triples
    double worst_violation = 0.0;
    for (int k = 0; k < 50; ++k) {
        const int n = 2 + static_cast<int>(mix64(seed, 900 + static_cast<std::uint64_t>(k)) % 7);
        const ParticleMeasure a = seeded_cloud(seed, 300 + 3 * static_cast<std::uint64_t>(k), n);
        const ParticleMeasure b = seeded_cloud(seed, 301 + 3 * static_cast<std::uint64_t>(k), n);
        const ParticleMeasure c = seeded_cloud(seed, 302 + 3 * static_cast<std::uint64_t>(k), n);
        const double ab = w2_exact(a, b).value;
        const double bc = w2_exact(b, c).value;
        const double ac = w2_exact(a, c).value;
        worst_violation = std::max(worst_violation, ac - (ab + bc));
    }
    record("ot.triangle_inequality", std::max(0.0, worst_violation), 1e-10);

    // paper convention on Diracs: W2(delta_(0,0), delta_(3,4)) = 5/sqrt(2)
    const double dirac = w2_exact(ParticleMeasure::dirac({0, 0}),
                                  ParticleMeasure::dirac({3, 4})).value;
    record("ot.dirac_half_cost", std::abs(dirac - 5.0 / std::sqrt(2.0)), 1e-14);

    // one sample optimal plan in the CSV export format
    {
        const ParticleMeasure mu = seeded_cloud(seed, 9000, 6);
        const ParticleMeasure nu = seeded_cloud(seed, 9001, 6);
        std::ofstream plan_csv(dir / "plan.csv");
        write_csv(w2_exact(mu, nu).plan, plan_csv);
    }

    std::ofstream out(dir / "report.json");
    out << results.dump(2) << "\n";
    return all_pass ? 0 : 1;
}

inline int dispatch(const std::string& subcommand, const Options& opt) {
    try {
        const Config cfg = Config::parse_file(opt.config_path);
        if (subcommand == "verify") return run_verify(cfg, opt);
        if (subcommand == "optimize") return run_optimize(cfg, opt);
        if (subcommand == "transport-demo") return run_transport_demo(cfg, opt);
        if (subcommand == "ot-check") return run_ot_check(cfg, opt);
        std::cerr << "unknown subcommand: " << subcommand << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << e.name() << ": " << e.what() << "\n";
        return 3;
    }
}

} // namespace wassflow::driver
