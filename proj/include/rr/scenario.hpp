#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "rr/ensemble.hpp"
#include "rr/errors.hpp"
#include "rr/fluid.hpp"
#include "rr/integrator.hpp"
#include "rr/kinetic.hpp"
#include "rr/selfforce.hpp"
#include "rr/synthetic.hpp"
#include "rr/version.hpp"

namespace rr {

using json = nlohmann::ordered_json;

enum class ScenarioMode { Single, Sweep, Ensemble, Liouville, FluidCheck };

inline std::string to_string(ScenarioMode m) {
    switch (m) {
        case ScenarioMode::Single: return "single";
        case ScenarioMode::Sweep: return "sweep";
        case ScenarioMode::Ensemble: return "ensemble";
        case ScenarioMode::Liouville: return "liouville";
        case ScenarioMode::FluidCheck: return "fluid-check";
    }
    return "single";
}

struct SweepSpec {
    double sigma0 = 0.08;
    int halvings = 4;
    double radius = 1.0;
    double omega = 0.5;  // proper angular rate of the reference circular motion
};

struct EnsembleSpec {
    std::size_t count = 20000;
    double temperature = 0.3;
    double mu = 0.0;
    std::array<double, 3> drift_spatial{0.0, 0.0, 0.0};
    std::array<double, 3> box{4.0, 4.0, 4.0};
    std::array<int, 3> grid{2, 2, 1};
    std::vector<double> lab_times{1.0, 1.4, 1.8};
    std::size_t subsets = 16;
};

struct LiouvilleSpec {
    double delta = 1e-5;
    int checkpoints = 4;
    JacobianCoords coords = JacobianCoords::Canonical;
};

struct FluidCheckSpec {
    std::string catalogue = "uniform";  // uniform | isothermal
    double temperature = 0.2;
    int points = 50;
};

/// One fully validated run description.  parse_scenario() reports every
/// validation problem at once; run_to_directory() produces deterministic
/// artifacts plus a manifest.
struct Scenario {
    std::string name = "scenario";
    ScenarioMode mode = ScenarioMode::Single;
    std::uint64_t seed = 0;
    bool seed_given = false;
    ParticleParams particle{0.0, 1.0, 0.1};
    ExternalFieldModel field;
    json field_spec = json{{"type", "zero"}};
    SelfForceModelKind model = SelfForceModelKind::None;
    double step = 0.01;
    double span = 1.0;
    ConstraintMode constraint = ConstraintMode::Projection;
    bool renormalize_mass = false;
    FourVector initial_r{0, 0, 0, 0};
    std::array<double, 3> initial_u_spatial{0, 0, 0};
    bool trace = false;
    unsigned threads = 0;  // 0 = all hardware threads
    bool deterministic_reduce = false;
    SweepSpec sweep;
    EnsembleSpec ensemble;
    LiouvilleSpec liouville;
    FluidCheckSpec fluid_check;

    IntegratorConfig integrator_config() const {
        IntegratorConfig cfg;
        cfg.step = step;
        cfg.span = span;
        cfg.constraint = constraint;
        cfg.model = model;
        cfg.field = field;
        cfg.particle = particle;
        cfg.renormalize_mass = renormalize_mass;
        return cfg;
    }

    unsigned effective_threads() const {
        if (deterministic_reduce) return 1;
        if (threads > 0) return threads;
        const unsigned hw = std::thread::hardware_concurrency();
        return hw > 0 ? hw : 1;
    }
};

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace detail {

inline const std::vector<std::string> known_top_keys = {
    "name",   "mode",    "seed",      "particle",  "field",
    "self_force", "integrator", "initial", "trace", "threads",
    "deterministic_reduce", "sweep", "ensemble", "liouville", "fluid_check"};

template <typename T>
bool read_field(const json& j, const char* key, T& out, std::vector<std::string>& issues,
                const std::string& path) {
    if (!j.contains(key)) return false;
    try {
        out = j.at(key).get<T>();
        return true;
    } catch (const json::exception& e) {
        issues.push_back(path + key + ": " + e.what());
        return false;
    }
}

inline ExternalFieldModel parse_field(const json& j, std::vector<std::string>& issues,
                                      json& spec_out) {
    spec_out = j;
    std::string type = "zero";
    read_field(j, "type", type, issues, "field.");
    try {
        if (type == "zero") return ExternalFieldModel::zero();
        if (type == "uniform_electric") {
            std::array<double, 3> E{};
            if (!read_field(j, "E", E, issues, "field."))
                issues.push_back("field.E: required for uniform_electric");
            return ExternalFieldModel::uniform_electric(E);
        }
        if (type == "uniform_magnetic") {
            std::array<double, 3> B{};
            if (!read_field(j, "B", B, issues, "field."))
                issues.push_back("field.B: required for uniform_magnetic");
            return ExternalFieldModel::uniform_magnetic(B);
        }
        if (type == "plane_wave_pulse") {
            double amplitude = 0.0, phase_start = 0.0, phase_width = 1.0;
            std::array<double, 4> k{1, 0, 0, 1}, eps{0, 1, 0, 0};
            read_field(j, "amplitude", amplitude, issues, "field.");
            read_field(j, "phase_start", phase_start, issues, "field.");
            read_field(j, "phase_width", phase_width, issues, "field.");
            read_field(j, "wave_vector", k, issues, "field.");
            read_field(j, "polarization", eps, issues, "field.");
            return ExternalFieldModel::plane_wave_pulse(
                amplitude, {k[0], k[1], k[2], k[3]}, phase_start, phase_width,
                {eps[0], eps[1], eps[2], eps[3]});
        }
        issues.push_back("field.type: unknown field type \"" + type + "\"");
    } catch (const ValidationError& e) {
        for (const auto& s : e.issues) issues.push_back("field: " + s);
    }
    return ExternalFieldModel::zero();
}

} // namespace detail

/// Parses and fully validates a scenario document.  Throws ParseError for
/// malformed JSON and ValidationError carrying every problem found.
inline Scenario parse_scenario(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("scenario: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("scenario: top level must be a JSON object");

    std::vector<std::string> issues;
    Scenario s;

    for (const auto& [key, _] : j.items()) {
        if (std::find(detail::known_top_keys.begin(), detail::known_top_keys.end(), key) ==
            detail::known_top_keys.end())
            issues.push_back("unknown key \"" + key + "\"");
    }

    detail::read_field(j, "name", s.name, issues, "");
    std::string mode = "single";
    detail::read_field(j, "mode", mode, issues, "");
    if (mode == "single") s.mode = ScenarioMode::Single;
    else if (mode == "sweep") s.mode = ScenarioMode::Sweep;
    else if (mode == "ensemble") s.mode = ScenarioMode::Ensemble;
    else if (mode == "liouville") s.mode = ScenarioMode::Liouville;
    else if (mode == "fluid-check") s.mode = ScenarioMode::FluidCheck;
    else issues.push_back("mode: must be one of single|sweep|ensemble|liouville|fluid-check");

    s.seed_given = detail::read_field(j, "seed", s.seed, issues, "");

    if (j.contains("particle")) {
        const auto& p = j.at("particle");
        detail::read_field(p, "q", s.particle.q, issues, "particle.");
        detail::read_field(p, "m0", s.particle.m0, issues, "particle.");
        detail::read_field(p, "sigma", s.particle.sigma, issues, "particle.");
    }
    if (!(s.particle.sigma > 0.0)) issues.push_back("particle.sigma: sigma must be > 0");
    if (!(s.particle.m0 > 0.0)) issues.push_back("particle.m0: must be > 0");

    if (j.contains("field")) s.field = detail::parse_field(j.at("field"), issues, s.field_spec);

    std::string model = "none";
    detail::read_field(j, "self_force", model, issues, "");
    try {
        s.model = self_force_model_from_string(model);
    } catch (const ValidationError& e) {
        issues.push_back("self_force: " + std::string(e.what()));
    }

    if (j.contains("integrator")) {
        const auto& g = j.at("integrator");
        detail::read_field(g, "step", s.step, issues, "integrator.");
        detail::read_field(g, "span", s.span, issues, "integrator.");
        std::string c = "projection";
        detail::read_field(g, "constraint", c, issues, "integrator.");
        if (c == "projection") s.constraint = ConstraintMode::Projection;
        else if (c == "none") s.constraint = ConstraintMode::None;
        else issues.push_back("integrator.constraint: must be projection|none");
        detail::read_field(g, "renormalize_mass", s.renormalize_mass, issues, "integrator.");
    }
    if (!(s.step > 0.0)) issues.push_back("integrator.step: must be > 0");
    if (!(s.span >= 0.0)) issues.push_back("integrator.span: must be >= 0");
    const bool delayed = s.model == SelfForceModelKind::Exact ||
                         s.model == SelfForceModelKind::RetardedHamiltonian;
    if (delayed && s.step > s.particle.sigma / 4.0 + 1e-15)
        issues.push_back("integrator.step: must satisfy h <= sigma/4 for delayed models");

    if (j.contains("initial")) {
        const auto& g = j.at("initial");
        std::array<double, 4> r{};
        if (detail::read_field(g, "r", r, issues, "initial."))
            s.initial_r = {r[0], r[1], r[2], r[3]};
        detail::read_field(g, "u_spatial", s.initial_u_spatial, issues, "initial.");
    }

    detail::read_field(j, "trace", s.trace, issues, "");
    detail::read_field(j, "threads", s.threads, issues, "");
    detail::read_field(j, "deterministic_reduce", s.deterministic_reduce, issues, "");

    if (j.contains("sweep")) {
        const auto& g = j.at("sweep");
        detail::read_field(g, "sigma0", s.sweep.sigma0, issues, "sweep.");
        detail::read_field(g, "halvings", s.sweep.halvings, issues, "sweep.");
        detail::read_field(g, "radius", s.sweep.radius, issues, "sweep.");
        detail::read_field(g, "omega", s.sweep.omega, issues, "sweep.");
        if (!(s.sweep.sigma0 > 0.0)) issues.push_back("sweep.sigma0: must be > 0");
        if (s.sweep.halvings < 2) issues.push_back("sweep.halvings: need at least 2");
    }
    if (j.contains("ensemble")) {
        const auto& g = j.at("ensemble");
        detail::read_field(g, "count", s.ensemble.count, issues, "ensemble.");
        detail::read_field(g, "temperature", s.ensemble.temperature, issues, "ensemble.");
        detail::read_field(g, "mu", s.ensemble.mu, issues, "ensemble.");
        detail::read_field(g, "drift_spatial", s.ensemble.drift_spatial, issues, "ensemble.");
        detail::read_field(g, "box", s.ensemble.box, issues, "ensemble.");
        detail::read_field(g, "grid", s.ensemble.grid, issues, "ensemble.");
        detail::read_field(g, "lab_times", s.ensemble.lab_times, issues, "ensemble.");
        detail::read_field(g, "subsets", s.ensemble.subsets, issues, "ensemble.");
        if (!(s.ensemble.temperature > 0.0)) issues.push_back("ensemble.temperature: must be > 0");
        if (s.ensemble.count == 0) issues.push_back("ensemble.count: must be > 0");
        if (s.ensemble.lab_times.size() < 3)
            issues.push_back("ensemble.lab_times: need at least 3 slice times");
    }
    if (j.contains("liouville")) {
        const auto& g = j.at("liouville");
        detail::read_field(g, "delta", s.liouville.delta, issues, "liouville.");
        detail::read_field(g, "checkpoints", s.liouville.checkpoints, issues, "liouville.");
        std::string c = "canonical";
        detail::read_field(g, "coords", c, issues, "liouville.");
        if (c == "canonical") s.liouville.coords = JacobianCoords::Canonical;
        else if (c == "velocity") s.liouville.coords = JacobianCoords::Velocity;
        else issues.push_back("liouville.coords: must be canonical|velocity");
        if (!(s.liouville.delta > 0.0)) issues.push_back("liouville.delta: must be > 0");
    }
    if (j.contains("fluid_check")) {
        const auto& g = j.at("fluid_check");
        detail::read_field(g, "catalogue", s.fluid_check.catalogue, issues, "fluid_check.");
        detail::read_field(g, "temperature", s.fluid_check.temperature, issues, "fluid_check.");
        detail::read_field(g, "points", s.fluid_check.points, issues, "fluid_check.");
        if (s.fluid_check.catalogue != "uniform" && s.fluid_check.catalogue != "isothermal")
            issues.push_back("fluid_check.catalogue: must be uniform|isothermal");
    }

    if ((s.mode == ScenarioMode::Ensemble || s.mode == ScenarioMode::FluidCheck) &&
        !s.seed_given)
        issues.push_back("seed: required for ensemble and fluid-check modes");

    if (!issues.empty()) throw ValidationError(issues);
    return s;
}

/// Canonical serialization; parse_scenario(serialize(s)) reproduces s.
inline json serialize_scenario(const Scenario& s) {
    json j;
    j["name"] = s.name;
    j["mode"] = to_string(s.mode);
    if (s.seed_given) j["seed"] = s.seed;
    j["particle"] = {{"q", s.particle.q}, {"m0", s.particle.m0}, {"sigma", s.particle.sigma}};
    j["field"] = s.field_spec;
    j["self_force"] = to_string(s.model);
    j["integrator"] = {
        {"step", s.step},
        {"span", s.span},
        {"constraint", s.constraint == ConstraintMode::Projection ? "projection" : "none"},
        {"renormalize_mass", s.renormalize_mass}};
    j["initial"] = {{"r", {s.initial_r[0], s.initial_r[1], s.initial_r[2], s.initial_r[3]}},
                    {"u_spatial", s.initial_u_spatial}};
    j["trace"] = s.trace;
    j["threads"] = s.threads;
    j["deterministic_reduce"] = s.deterministic_reduce;
    if (s.mode == ScenarioMode::Sweep)
        j["sweep"] = {{"sigma0", s.sweep.sigma0},
                      {"halvings", s.sweep.halvings},
                      {"radius", s.sweep.radius},
                      {"omega", s.sweep.omega}};
    if (s.mode == ScenarioMode::Ensemble)
        j["ensemble"] = {{"count", s.ensemble.count},
                         {"temperature", s.ensemble.temperature},
                         {"mu", s.ensemble.mu},
                         {"drift_spatial", s.ensemble.drift_spatial},
                         {"box", s.ensemble.box},
                         {"grid", s.ensemble.grid},
                         {"lab_times", s.ensemble.lab_times},
                         {"subsets", s.ensemble.subsets}};
    if (s.mode == ScenarioMode::Liouville)
        j["liouville"] = {
            {"delta", s.liouville.delta},
            {"checkpoints", s.liouville.checkpoints},
            {"coords",
             s.liouville.coords == JacobianCoords::Canonical ? "canonical" : "velocity"}};
    if (s.mode == ScenarioMode::FluidCheck)
        j["fluid_check"] = {{"catalogue", s.fluid_check.catalogue},
                            {"temperature", s.fluid_check.temperature},
                            {"points", s.fluid_check.points}};
    return j;
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw Error("cannot open output file " + p.string());
    os << text;
}

inline json fourvector_json(const FourVector& v) {
    return json::array({v[0], v[1], v[2], v[3]});
}

} // namespace detail

/// Runs a scenario, writing its artifacts plus manifest.json into out_dir.
/// Identical scenario + seed produce byte-identical files.
inline json run_to_directory(const Scenario& s, const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<std::string> files;

    const auto write_json = [&](const std::string& name, const json& j) {
        detail::write_text(out_dir / name, j.dump(2) + "\n");
        files.push_back(name);
    };
    const auto write_csv = [&](const std::string& name, const std::string& body) {
        detail::write_text(out_dir / name, body);
        files.push_back(name);
    };
    const auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };

    switch (s.mode) {
        case ScenarioMode::Single: {
            auto cfg = s.integrator_config();
            cfg.history_horizon_factor = 1e18;  // keep the full trajectory
            const FourVector u0 = four_velocity_from_spatial(
                s.initial_u_spatial[0], s.initial_u_spatial[1], s.initial_u_spatial[2]);
            const RunResult out = run_scenario(s.initial_r, u0, cfg);

            std::ostringstream traj;
            traj.precision(17);
            dump_csv(out.history, traj);
            write_csv("trajectory.csv", traj.str());

            if (s.trace) {
                std::ostringstream tr;
                tr << "s,r0,r1,r2,r3,u0,u1,u2,u3,force_ext,force_self,uu_drift\n";
                for (std::size_t i = 0; i < out.diagnostics.size(); ++i) {
                    const auto& d = out.diagnostics[i];
                    const auto& w = out.history.samples()[i];
                    tr << fmt(d.s);
                    for (int k = 0; k < 4; ++k) tr << ',' << fmt(w.r[k]);
                    for (int k = 0; k < 4; ++k) tr << ',' << fmt(w.u[k]);
                    tr << ',' << fmt(d.force_ext_mag) << ',' << fmt(d.force_self_mag) << ','
                       << fmt(d.uu_drift) << '\n';
                }
                write_csv("trace.csv", tr.str());
            }

            double worst_drift = 0.0, max_self = 0.0;
            for (const auto& d : out.diagnostics) {
                worst_drift = std::max(worst_drift, std::abs(d.uu_drift));
                max_self = std::max(max_self, d.force_self_mag);
            }
            const auto& last = out.history.samples().back();
            write_json("diagnostics.json",
                       json{{"steps", out.diagnostics.size() - 1},
                            {"max_abs_uu_drift", worst_drift},
                            {"max_force_self", max_self},
                            {"work_ext", out.diagnostics.back().work_ext},
                            {"work_self", out.diagnostics.back().work_self},
                            {"final",
                             {{"s", last.s},
                              {"r", detail::fourvector_json(last.r)},
                              {"u", detail::fourvector_json(last.u)}}}});
            break;
        }

        case ScenarioMode::Sweep: {
            // sigma-halving study of |exact - asymptotic| on circular motion
            const auto wl = circular_worldline(s.sweep.radius, s.sweep.omega);
            std::ostringstream csv;
            csv << "sigma,rel_err_retarded,rel_err_present\n";
            std::vector<double> errs_ret, errs_pres, sigmas;
            for (int k = 0; k < s.sweep.halvings; ++k) {
                const double sigma = s.sweep.sigma0 / std::pow(2.0, k);
                ParticleParams p = s.particle;
                p.sigma = sigma;
                const double s_eval = 0.0;
                const auto hist = sample_history(wl, s_eval - 40.0 * sigma,
                                                 s_eval + 4.0 * sigma, sigma / 4.0);
                const FourVector exact = self_force_exact(hist, s_eval, p);
                const FourVector ret = self_force_retarded_hamiltonian(hist, s_eval, p);
                const FourVector pres = self_force_present_time(hist, s_eval, p);
                const double scale = exact.max_abs();
                const double e_ret = (exact - ret).max_abs() / scale;
                const double e_pres = (exact - pres).max_abs() / scale;
                sigmas.push_back(sigma);
                errs_ret.push_back(e_ret);
                errs_pres.push_back(e_pres);
                csv << fmt(sigma) << ',' << fmt(e_ret) << ',' << fmt(e_pres) << '\n';
            }
            write_csv("sweep.csv", csv.str());

            const auto slope = [](const std::vector<double>& errs) {
                const int n = static_cast<int>(errs.size());
                double sx = 0, sy = 0, sxx = 0, sxy = 0;
                for (int i = 0; i < n; ++i) {
                    const double x = i, y = -std::log2(errs[static_cast<std::size_t>(i)]);
                    sx += x; sy += y; sxx += x * x; sxy += x * y;
                }
                return (n * sxy - sx * sy) / (n * sxx - sx * sx);
            };
            write_json("sweep_summary.json",
                       json{{"sigmas", sigmas},
                            {"rel_err_retarded", errs_ret},
                            {"rel_err_present", errs_pres},
                            {"slope_retarded", slope(errs_ret)},
                            {"slope_present", slope(errs_pres)}});
            break;
        }

        case ScenarioMode::Ensemble: {
            MaxwellianParams mp;
            mp.T = s.ensemble.temperature;
            mp.m = s.particle.m0;
            mp.mu = s.ensemble.mu;
            mp.U = four_velocity_from_spatial(s.ensemble.drift_spatial[0],
                                              s.ensemble.drift_spatial[1],
                                              s.ensemble.drift_spatial[2]);
            auto ens = sample_maxwellian(mp, s.ensemble.count, s.seed,
                                         static_cast<double>(s.ensemble.count));
            MomentGrid grid;
            grid.box = s.ensemble.box;
            grid.cells = s.ensemble.grid;
            scatter_positions_uniform(ens, grid, s.seed);

            std::ostringstream dump;
            dump.precision(17);
            dump_ensemble_csv(ens, dump);
            write_csv("ensemble_initial.csv", dump.str());

            const auto table = evolve_to_lab_times(ens, s.integrator_config(),
                                                   s.ensemble.lab_times,
                                                   s.effective_threads());
            const auto res =
                moment_residuals(table, s.ensemble.lab_times, grid, s.ensemble.subsets);
            const auto mid = deposit(table, 1, grid);

            json cells = json::array();
            for (std::size_t c = 0; c < mid.size(); ++c) {
                json jc;
                jc["cell"] = c;
                jc["count"] = mid[c].count;
                jc["n"] = mid[c].n;
                jc["N"] = detail::fourvector_json(mid[c].N);
                json tt = json::array();
                for (int mu = 0; mu < 4; ++mu)
                    for (int nu = mu; nu < 4; ++nu) tt.push_back(mid[c].T(mu, nu));
                jc["T_upper"] = tt;
                jc["continuity_residual"] = res.continuity[c];
                jc["continuity_se"] = res.continuity_se[c];
                jc["momentum_residual"] =
                    json::array({res.momentum[c][0], res.momentum[c][1], res.momentum[c][2],
                                 res.momentum[c][3]});
                jc["momentum_se"] =
                    json::array({res.momentum_se[c][0], res.momentum_se[c][1],
                                 res.momentum_se[c][2], res.momentum_se[c][3]});
                cells.push_back(jc);
            }

            const auto closed = maxwellian_closed_form(mp, s.particle.q, 0.0, 0.0);
            const auto moments = compute_moments(ens);
            // the lab-frame mean of u0 is the rest-frame mean gamma boosted
            // by the drift, so both entries are directly comparable
            write_json("moments.json",
                       json{{"closed_form",
                             {{"n0", closed.n0},
                              {"e", closed.e},
                              {"p0", closed.p0},
                              {"mean_gamma_rest", juettner_mean_gamma(mp)},
                              {"mean_u0_lab", juettner_mean_gamma(mp) * mp.U[0]}}},
                            {"sampled",
                             {{"n", moments.n},
                              {"N", detail::fourvector_json(moments.N)},
                              {"mean_u0_lab", moments.N[0] / moments.n},
                              {"trace_T", moments.T_tensor.trace_minkowski()},
                              {"norm_integral_estimate", juettner_norm_estimate(ens, mp)}}},
                            {"grid", cells}});
            break;
        }

        case ScenarioMode::Liouville: {
            const FourVector u0 = four_velocity_from_spatial(
                s.initial_u_spatial[0], s.initial_u_spatial[1], s.initial_u_spatial[2]);
            const auto series =
                liouville_volume_series(s.initial_r, u0, s.integrator_config(),
                                        s.liouville.delta, s.liouville.checkpoints,
                                        s.liouville.coords);
            json checks = json::array();
            for (const auto& c : series)
                checks.push_back(json{{"s", c.s}, {"determinant", c.determinant}});
            json out{{"coords", s.liouville.coords == JacobianCoords::Canonical
                                    ? "canonical"
                                    : "velocity"},
                     {"checkpoints", checks}};

            if (s.model == SelfForceModelKind::LLIterative) {
                auto cfg_ref = s.integrator_config();
                cfg_ref.constraint = ConstraintMode::None;
                cfg_ref.history_horizon_factor = 1e18;
                const auto ref = run_scenario(s.initial_r, u0, cfg_ref);
                double integral = 0.0;
                const auto& smp = ref.history.samples();
                std::vector<double> series_div;
                for (std::size_t i = 0; i + 1 < smp.size(); ++i) {
                    const double d0 = velocity_divergence_ll(s.field, smp[i].r, smp[i].u,
                                                             s.particle);
                    const double d1 = velocity_divergence_ll(s.field, smp[i + 1].r,
                                                             smp[i + 1].u, s.particle);
                    integral += 0.5 * (smp[i + 1].s - smp[i].s) * (d0 + d1);
                }
                out["divergence_integral"] = integral;
                out["predicted_final_determinant"] = std::exp(integral);
            }
            write_json("liouville.json", out);
            break;
        }

        case ScenarioMode::FluidCheck: {
            FluidField fluid;
            if (s.fluid_check.catalogue == "uniform") {
                fluid = uniform_fluid(four_velocity_from_spatial(0.2, -0.1, 0.15), 1.0);
            } else {
                fluid = isothermal_maxwellian_fluid(
                    [](const FourVector& r) {
                        return 1.5 + 0.2 * r[1] + 0.1 * r[2] - 0.05 * r[3];
                    },
                    s.fluid_check.temperature,
                    [](const FourVector& r) {
                        return four_velocity_from_spatial(0.1 + 0.02 * r[2], -0.05 * r[1], 0.0);
                    });
            }

            std::mt19937_64 rng(s.seed);
            const auto u01 = [&rng] {
                return static_cast<double>(rng() >> 11) * 0x1.0p-53;
            };
            json points = json::array();
            double max_particle_dev = 0.0;
            for (int i = 0; i < s.fluid_check.points; ++i) {
                const FourVector r{u01() * 2 - 1, u01() * 2 - 1, u01() * 2 - 1, u01() * 2 - 1};
                const auto fl = fluid_ll_force(fluid, s.field, r, s.particle);
                const auto iter = ll_iterated_acceleration(fluid, s.field, r, s.particle);
                json jp;
                jp["r"] = detail::fourvector_json(r);
                jp["force"] = detail::fourvector_json(fl.force);
                jp["mass_term"] = detail::fourvector_json(fl.mass_term);
                jp["h1"] = detail::fourvector_json(fl.h1);
                jp["h2"] = detail::fourvector_json(fl.h2);
                jp["iterated_acceleration"] = detail::fourvector_json(iter.total());
                points.push_back(jp);
                if (s.fluid_check.catalogue == "uniform") {
                    const FourVector sp = self_force_ll_iterative(
                        s.field, r, fluid.velocity(r), s.particle);
                    max_particle_dev =
                        std::max(max_particle_dev, (fl.force - sp).max_abs());
                }
            }
            json out{{"catalogue", s.fluid_check.catalogue}, {"points", points}};
            if (s.fluid_check.catalogue == "uniform")
                out["max_deviation_from_single_particle"] = max_particle_dev;
            write_json("fluid_check.json", out);
            break;
        }
    }

    // runtime knobs (worker count, tracing) do not alter the numbers and are
    // excluded from the configuration identity
    json canonical_json = serialize_scenario(s);
    canonical_json.erase("threads");
    canonical_json.erase("trace");
    canonical_json.erase("deterministic_reduce");
    const std::string canonical = canonical_json.dump();
    json manifest{{"engine_version", kEngineVersion},
                  {"scenario_name", s.name},
                  {"mode", to_string(s.mode)},
                  {"config_hash", detail::hex64(detail::fnv1a64(canonical))},
                  {"seed", s.seed},
                  {"files", files}};
    detail::write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
    return manifest;
}

} // namespace rr
