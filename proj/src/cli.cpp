#include "kftune/cli.hpp"

#include "kftune/ekf.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace kftune {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Reference gain table for the default weights (from the original design study).
const double kBaselineGain[2][6] = {
    {100.0, 406.575, 100.0, 519.086, 3053.285, 3140.470},
    {-100.0, -406.575, 100.0, 519.086, -3053.285, -3140.470},
};

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_manifest(const fs::path& out_dir, const std::string& command, const FlatConfig& cfg,
                    uint64_t seed, const std::string& started,
                    const std::vector<std::string>& outputs) {
    json m;
    m["command"] = command;
    m["tool_version"] = kToolVersion;
    m["master_seed"] = seed;
    m["started"] = started;
    m["finished"] = iso_timestamp();
    m["outputs"] = outputs;
    json c;
    for (const auto& [k, v] : cfg.entries()) c[k] = v;
    m["config"] = c;
    for (const auto& o : outputs)
        if (!fs::exists(out_dir / o))
            throw std::runtime_error("manifest references missing output: " + o);
    write_file(out_dir / "manifest.json", m.dump(2) + "\n");
}

std::string format_double(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

Parameterization parameterization_from(const std::string& name) {
    if (name == "1d") return Parameterization::OneD;
    if (name == "2d") return Parameterization::TwoD;
    if (name == "3d") return Parameterization::ThreeD;
    throw ConfigError("tuning.parameterization must be 1d, 2d or 3d (got '" + name + "')");
}

std::string parameterization_name(Parameterization p) {
    switch (p) {
        case Parameterization::OneD: return "1d";
        case Parameterization::TwoD: return "2d";
        case Parameterization::ThreeD: return "3d";
    }
    return "?";
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
    return out;
}

fs::path prepare_out_dir(const std::string& out_dir) {
    fs::path dir(out_dir.empty() ? "." : out_dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

void apply_preset(FlatConfig& cfg, const std::string& preset) {
    if (preset.empty()) return;
    if (preset == "skycrane-1d") {
        cfg.set("tuning.parameterization", "1d");
        cfg.set("tuning.n_seed", "10");
        cfg.set("tuning.max_iterations", "50");
        cfg.set("sim.n_runs", "200");
    } else if (preset == "skycrane-2d") {
        cfg.set("tuning.parameterization", "2d");
        cfg.set("tuning.n_seed", "20");
        cfg.set("tuning.max_iterations", "80");
        cfg.set("sim.n_runs", "200");
    } else if (preset == "skycrane-3d") {
        cfg.set("tuning.parameterization", "3d");
        cfg.set("tuning.n_seed", "30");
        cfg.set("tuning.max_iterations", "100");
        cfg.set("sim.n_runs", "200");
    } else {
        throw ConfigError("unknown preset: " + preset);
    }
}

namespace {

SkycraneParams params_from_config(const FlatConfig& cfg) {
    SkycraneParams p;
    p.rho = cfg.get_double("skycrane.rho", p.rho);
    p.g = cfg.get_double("skycrane.g", p.g);
    p.beta = cfg.get_double("skycrane.beta", p.beta);
    p.drag_coeff = cfg.get_double("skycrane.drag_coeff", p.drag_coeff);
    p.fuel_mass = cfg.get_double("skycrane.fuel_mass", p.fuel_mass);
    p.fuel_width = cfg.get_double("skycrane.fuel_width", p.fuel_width);
    p.fuel_height = cfg.get_double("skycrane.fuel_height", p.fuel_height);
    p.fuel_depth = cfg.get_double("skycrane.fuel_depth", p.fuel_depth);
    p.body_mass = cfg.get_double("skycrane.body_mass", p.body_mass);
    p.body_width = cfg.get_double("skycrane.body_width", p.body_width);
    p.body_height = cfg.get_double("skycrane.body_height", p.body_height);
    p.body_depth = cfg.get_double("skycrane.body_depth", p.body_depth);
    p.cm_height = cfg.get_double("skycrane.cm_height", p.cm_height);
    return p;
}

}  // namespace

ExperimentConfig experiment_from_config(const FlatConfig& cfg) {
    const std::string model = cfg.get_string("model", "skycrane");
    if (model != "skycrane")
        throw ConfigError("unknown model: " + model);

    ExperimentConfig exp;
    exp.params = params_from_config(cfg);
    exp.step_period = cfg.get_double("sim.dt", 0.1);

    const auto qw = cfg.get_doubles("control.q_diag", {200.0, 15.0, 200.0, 15.0, 10000.0, 15.0});
    const auto rw = cfg.get_doubles("control.r_diag", {0.01, 0.01});
    if (qw.size() != 6) throw ConfigError("control.q_diag needs 6 entries");
    if (rw.size() != 2) throw ConfigError("control.r_diag needs 2 entries");
    exp.design = lqr_gain(exp.params, to_vector(qw).asDiagonal(), to_vector(rw).asDiagonal());

    const auto pv = cfg.get_doubles("sim.true_process_var", {0.01, 0.01, 0.001});
    const auto mv = cfg.get_doubles("sim.meas_var", {1.0, 0.5, 0.025, 0.0225});
    if (pv.size() != 3) throw ConfigError("sim.true_process_var needs 3 entries");
    if (mv.size() != 4) throw ConfigError("sim.meas_var needs 4 entries");
    exp.true_process_var = Eigen::Vector3d(pv[0], pv[1], pv[2]);
    exp.meas_var = Eigen::Vector4d(mv[0], mv[1], mv[2], mv[3]);

    exp.n_runs = cfg.get_int("sim.n_runs", 200);
    exp.t_steps = cfg.get_int("sim.t_steps", 100);
    exp.divergence_threshold = cfg.get_double("sim.divergence_threshold", 1e6);
    exp.common_random_numbers = cfg.get_bool("sim.crn", false);

    const auto x0 = cfg.get_doubles("sim.x0", {0.0, 0.0, 20.0, 0.0, 0.0, 0.0});
    const auto p0 = cfg.get_doubles("sim.p0_diag", {1.0, 0.1, 1.0, 0.1, 0.01, 0.01});
    if (x0.size() != 6) throw ConfigError("sim.x0 needs 6 entries");
    if (p0.size() != 6) throw ConfigError("sim.p0_diag needs 6 entries");
    exp.x0_mean = to_vector(x0);
    exp.p0 = to_vector(p0).asDiagonal();

    const std::string cost = cfg.get_string("cost.kind", "jnis");
    if (cost == "jnis") exp.cost = CostKind::JNis;
    else if (cost == "jnees") exp.cost = CostKind::JNees;
    else throw ConfigError("cost.kind must be jnis or jnees (got '" + cost + "')");
    exp.alpha = cfg.get_double("cost.alpha", 0.05);
    exp.transient_skip = cfg.get_int("cost.transient_skip", 0);

    exp.parameterization = parameterization_from(cfg.get_string("tuning.parameterization", "1d"));
    exp.fixed_q_zdd = cfg.get_double("tuning.fixed_q_zdd", 0.1);

    exp.master_seed = cfg.get_uint64("rng.seed", 1);
    exp.threads = cfg.get_int("run.threads", 0);
    exp.joseph_update = cfg.get_bool("filter.joseph", false);

    exp.validate();
    return exp;
}

BoxBounds bounds_from_config(const FlatConfig& cfg, const ExperimentConfig& experiment) {
    const BoxBounds defaults = experiment.default_bounds();
    if (!cfg.has("tuning.bounds_lower") && !cfg.has("tuning.bounds_upper")) return defaults;
    std::vector<double> lo_def(defaults.lower.data(), defaults.lower.data() + defaults.dim());
    std::vector<double> hi_def(defaults.upper.data(), defaults.upper.data() + defaults.dim());
    const auto lo = cfg.get_doubles("tuning.bounds_lower", lo_def);
    const auto hi = cfg.get_doubles("tuning.bounds_upper", hi_def);
    if (static_cast<Eigen::Index>(lo.size()) != defaults.dim() ||
        static_cast<Eigen::Index>(hi.size()) != defaults.dim())
        throw ConfigError("tuning bounds must match the parameterization dimension");
    try {
        return BoxBounds(to_vector(lo), to_vector(hi));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("tuning bounds: ") + e.what());
    }
}

int cmd_tune(const FlatConfig& cfg, const std::string& out_dir) {
    const std::string started = iso_timestamp();
    const fs::path dir = prepare_out_dir(out_dir);

    const ExperimentConfig exp = experiment_from_config(cfg);
    const BoxBounds bounds = bounds_from_config(cfg, exp);

    TuningProblem problem;
    problem.bounds = bounds;
    problem.n_seed = cfg.get_int("tuning.n_seed", 10);
    problem.max_iterations = cfg.get_int("tuning.max_iterations", 50);
    problem.min_improvement = cfg.get_double("tuning.min_improvement", 1e-4);
    problem.patience = cfg.get_int("tuning.patience", 10);
    problem.rng_seed = exp.master_seed;
    problem.surrogate.dof = cfg.get_double("surrogate.dof", 5.0);
    problem.surrogate.center_mean = cfg.get_bool("surrogate.center_mean", true);
    problem.fit.fit_dof = cfg.get_bool("surrogate.fit_dof", false);
    problem.acquisition_budget.max_evaluations = cfg.get_int("tuning.direct_evaluations", 400);

    struct EvalRecord {
        DesignPoint q;
        double cost;
        double pass_fraction;
        double wall_s;
    };
    std::vector<EvalRecord> eval_records;
    uint64_t eval_counter = 0;
    problem.objective = [&](const DesignPoint& q) {
        const auto t0 = std::chrono::steady_clock::now();
        const Evaluation eval = evaluate_candidate(q, exp, eval_counter++);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        eval_records.push_back({q, eval.cost, eval.report.pass_fraction, wall});
        return eval.cost;
    };
    problem.progress = [](const ProgressRecord& rec) {
        std::cout << "iter " << rec.iteration << "  cost " << rec.value
                  << "  incumbent " << rec.incumbent_value
                  << (rec.exploration_fallback ? "  [exploration]" : "") << '\n';
    };

    const TuningTrace trace = run_tpbo(problem);

    // trace.csv: iteration (0 for seeds), design point, cost, running incumbent.
    {
        std::ostringstream out;
        out << "iteration";
        for (Eigen::Index i = 0; i < bounds.dim(); ++i) out << ",q" << i + 1;
        out << ",cost,incumbent_cost\n";
        double incumbent = std::numeric_limits<double>::infinity();
        int proposal_index = 0;
        for (size_t i = 0; i < trace.samples.size(); ++i) {
            const auto& s = trace.samples[i];
            incumbent = std::min(incumbent, s.value);
            out << (s.seeded ? 0 : ++proposal_index);
            for (Eigen::Index j = 0; j < s.point.size(); ++j) out << ',' << format_double(s.point[j]);
            out << ',' << format_double(s.value) << ',' << format_double(incumbent) << '\n';
        }
        write_file(dir / "trace.csv", out.str());
    }

    // evaluations.csv: one row per objective evaluation.
    {
        std::ostringstream out;
        out << "evaluation";
        for (Eigen::Index i = 0; i < bounds.dim(); ++i) out << ",q" << i + 1;
        out << ",cost,pass_fraction,wall_time_s\n";
        for (size_t i = 0; i < eval_records.size(); ++i) {
            const auto& r = eval_records[i];
            out << i;
            for (Eigen::Index j = 0; j < r.q.size(); ++j) out << ',' << format_double(r.q[j]);
            out << ',' << format_double(r.cost) << ',' << format_double(r.pass_fraction) << ','
                << r.wall_s << '\n';
        }
        write_file(dir / "evaluations.csv", out.str());
    }

    // surrogate_samples.json: the sample set plus the final hyperparameters.
    {
        json j;
        json pts = json::array(), vals = json::array(), seeded = json::array();
        for (const auto& s : trace.samples) {
            json p = json::array();
            for (Eigen::Index i = 0; i < s.point.size(); ++i) p.push_back(s.point[i]);
            pts.push_back(p);
            vals.push_back(s.value);
            seeded.push_back(s.seeded);
        }
        j["points"] = pts;
        j["values"] = vals;
        j["seeded"] = seeded;
        if (!trace.hyperparameters.empty()) {
            const auto& h = trace.hyperparameters.back();
            json k;
            k["family"] = "matern52";
            json ls = json::array();
            for (Eigen::Index i = 0; i < h.kernel.length_scales.size(); ++i)
                ls.push_back(h.kernel.length_scales[i]);
            k["length_scales_unit_box"] = ls;
            k["signal_variance"] = h.kernel.signal_variance;
            k["dof"] = h.dof;
            k["log_marginal"] = h.log_marginal;
            j["kernel"] = k;
        }
        write_file(dir / "surrogate_samples.json", j.dump(2) + "\n");
    }

    // best.json: the incumbent.
    {
        const auto& [q, cost] = trace.incumbent();
        json j;
        json qa = json::array();
        for (Eigen::Index i = 0; i < q.size(); ++i) qa.push_back(q[i]);
        j["q"] = qa;
        j["cost"] = cost;
        j["parameterization"] = parameterization_name(exp.parameterization);
        j["seed"] = exp.master_seed;
        j["n_runs"] = exp.n_runs;
        j["iterations"] = trace.iterations_executed;
        write_file(dir / "best.json", j.dump(2) + "\n");
    }

    write_manifest(dir, "tune", cfg, exp.master_seed, started,
                   {"trace.csv", "evaluations.csv", "surrogate_samples.json", "best.json"});

    const auto& [q, cost] = trace.incumbent();
    std::cout << "best q = [" << q.transpose() << "]  cost = " << cost << '\n';
    return 0;
}

int cmd_validate(const FlatConfig& cfg, const std::string& best_path, const std::string& out_dir) {
    const std::string started = iso_timestamp();

    std::ifstream in(best_path);
    if (!in) throw ConfigError("cannot open candidate file: " + best_path);
    json best;
    try {
        in >> best;
    } catch (const json::exception& e) {
        throw ConfigError("candidate file " + best_path + " is not valid JSON: " + e.what());
    }
    if (!best.contains("q") || !best["q"].is_array() || best["q"].empty())
        throw ConfigError("candidate file " + best_path + " has no design point 'q'");

    FlatConfig resolved = cfg;
    if (best.contains("parameterization"))
        resolved.set("tuning.parameterization", best["parameterization"].get<std::string>());
    const ExperimentConfig exp = experiment_from_config(resolved);

    DesignPoint q(static_cast<Eigen::Index>(best["q"].size()));
    for (Eigen::Index i = 0; i < q.size(); ++i)
        q[i] = best["q"][static_cast<size_t>(i)].get<double>();

    const fs::path dir = prepare_out_dir(out_dir);

    const Evaluation eval = evaluate_candidate(q, exp, /*eval_counter=*/0xA11DA7EULL);
    write_file(dir / "consistency.json", eval.report.to_json() + "\n");
    write_file(dir / "consistency.csv", eval.report.to_csv());

    const int repeats = cfg.get_int("validate.rmse_repeats", 50);
    const auto rows = rmse_validation({q}, exp, repeats);
    {
        std::ostringstream out;
        out << "candidate";
        for (Eigen::Index i = 0; i < q.size(); ++i) out << ",q" << i + 1;
        out << ",channel,median,q1,q3\n";
        const char* channels[3] = {"xi", "z", "theta"};
        for (size_t r = 0; r < rows.size(); ++r) {
            for (int c = 0; c < 3; ++c) {
                out << r;
                for (Eigen::Index i = 0; i < rows[r].q.size(); ++i)
                    out << ',' << format_double(rows[r].q[i]);
                out << ',' << channels[c] << ',' << format_double(rows[r].median[c]) << ','
                    << format_double(rows[r].q1[c]) << ',' << format_double(rows[r].q3[c]) << '\n';
            }
        }
        write_file(dir / "rmse.csv", out.str());
    }

    write_manifest(dir, "validate", resolved, exp.master_seed, started,
                   {"consistency.json", "consistency.csv", "rmse.csv"});

    std::cout << "candidate q = [" << q.transpose() << "]\n"
              << "cost = " << eval.cost << "  pass fraction = " << eval.report.pass_fraction
              << "  verdict = " << to_string(eval.report.verdict) << '\n'
              << "median RMSE (xi, z, theta) = " << eval.summary.rmse_median.transpose() << '\n';
    return 0;
}

int cmd_lqr(const FlatConfig& cfg, const std::string& out_dir) {
    const std::string started = iso_timestamp();
    const fs::path dir = prepare_out_dir(out_dir);

    const SkycraneParams params = params_from_config(cfg);
    const auto qw = cfg.get_doubles("control.q_diag", {200.0, 15.0, 200.0, 15.0, 10000.0, 15.0});
    const auto rw = cfg.get_doubles("control.r_diag", {0.01, 0.01});
    if (qw.size() != 6) throw ConfigError("control.q_diag needs 6 entries");
    if (rw.size() != 2) throw ConfigError("control.r_diag needs 2 entries");
    for (double r : rw)
        if (!(r > 0.0)) throw ConfigError("control.r_diag must be positive definite");

    LqrDesign design;
    try {
        design = lqr_gain(params, to_vector(qw).asDiagonal(), to_vector(rw).asDiagonal());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    bool default_params = true;
    for (const auto& [k, v] : cfg.entries())
        if (k.rfind("skycrane.", 0) == 0) default_params = false;
    const bool default_weights = default_params &&
        qw == std::vector<double>{200.0, 15.0, 200.0, 15.0, 10000.0, 15.0} &&
        rw == std::vector<double>{0.01, 0.01};

    const Eigen::MatrixXd a = skycrane_process_jacobian(design.x_ref, design.u_nom, params);
    const Eigen::MatrixXd b = skycrane_input_jacobian(design.x_ref, design.u_nom, params);
    const Eigen::VectorXcd eigs = Eigen::EigenSolver<Eigen::MatrixXd>(a - b * design.gain).eigenvalues();

    json report;
    report["q_diag"] = qw;
    report["r_diag"] = rw;
    json gain = json::array(), deltas = json::array(), discrepancies = json::array();
    double max_rel_delta = 0.0;

    std::cout << "gain (rows: thrusters, cols: xi xi_dot z z_dot theta theta_dot)\n";
    for (int r = 0; r < 2; ++r) {
        json grow = json::array(), drow = json::array();
        std::ostringstream delta_line;
        for (int c = 0; c < 6; ++c) {
            const double v = design.gain(r, c);
            grow.push_back(v);
            std::cout << "  " << v;
            if (default_weights) {
                const double ref = kBaselineGain[r][c];
                const double rel = std::abs(v - ref) / std::max(1e-12, std::abs(ref));
                drow.push_back(rel);
                delta_line << "  " << rel;
                max_rel_delta = std::max(max_rel_delta, rel);
                if (rel > 0.05) {
                    json d;
                    d["row"] = r;
                    d["col"] = c;
                    d["computed"] = v;
                    d["baseline"] = ref;
                    d["rel_delta"] = rel;
                    discrepancies.push_back(d);
                }
            }
        }
        std::cout << '\n';
        if (default_weights)
            std::cout << "  rel delta vs baseline:" << delta_line.str() << '\n';
        gain.push_back(grow);
        if (default_weights) deltas.push_back(drow);
    }
    report["gain"] = gain;

    if (default_weights) {
        json baseline = json::array();
        for (auto& row : kBaselineGain) {
            json br = json::array();
            for (double v : row) br.push_back(v);
            baseline.push_back(br);
        }
        report["baseline_gain"] = baseline;
        report["rel_delta"] = deltas;
        report["max_rel_delta"] = max_rel_delta;
        report["within_tolerance"] = discrepancies.empty();
        report["discrepancies"] = discrepancies;
        std::cout << "max relative delta vs baseline gain: " << max_rel_delta << '\n';
    }

    json ev = json::array();
    bool stable = true;
    std::cout << "closed-loop eigenvalues:";
    for (Eigen::Index i = 0; i < eigs.size(); ++i) {
        ev.push_back({{"re", eigs[i].real()}, {"im", eigs[i].imag()}});
        stable = stable && eigs[i].real() < 0.0;
        std::cout << "  (" << eigs[i].real() << (eigs[i].imag() >= 0 ? "+" : "") << eigs[i].imag() << "j)";
    }
    std::cout << "\nclosed loop " << (stable ? "stable" : "UNSTABLE") << '\n';
    report["closed_loop_eigenvalues"] = ev;
    report["stable"] = stable;

    write_file(dir / "lqr.json", report.dump(2) + "\n");
    write_manifest(dir, "lqr", cfg, cfg.get_uint64("rng.seed", 1), started, {"lqr.json"});
    return 0;
}

ReplayResult replay_measurements(const std::string& csv_path, const ExperimentConfig& cfg,
                                 const Eigen::Vector3d& assumed_q) {
    std::ifstream in(csv_path);
    if (!in) throw ConfigError("cannot open measurement file: " + csv_path);

    std::vector<Eigen::Vector4d> zs;
    std::vector<Eigen::Vector2d> us;
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (row == 1) {
            if (line != "t,z1,z2,z3,z4,u1,u2")
                throw ConfigError(csv_path + ": row 1: expected header t,z1,z2,z3,z4,u1,u2");
            continue;
        }
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string item;
        std::vector<double> fields;
        while (std::getline(ss, item, ',')) {
            char* end = nullptr;
            errno = 0;
            const double v = std::strtod(item.c_str(), &end);
            if (errno != 0 || end == item.c_str() || *end != '\0')
                throw ConfigError(csv_path + ": row " + std::to_string(row) + ": bad number '" + item + "'");
            fields.push_back(v);
        }
        if (fields.size() != 7)
            throw ConfigError(csv_path + ": row " + std::to_string(row) + ": expected 7 fields, got "
                              + std::to_string(fields.size()));
        zs.push_back(Eigen::Vector4d(fields[1], fields[2], fields[3], fields[4]));
        us.push_back(Eigen::Vector2d(fields[5], fields[6]));
    }
    if (zs.empty())
        throw ConfigError(csv_path + ": no measurement rows");

    const ContinuousModel model = make_skycrane_model(cfg.params, cfg.step_period);
    const NoiseSpec noise{assumed_q.asDiagonal(), cfg.meas_var.asDiagonal()};
    const EkfOptions opts{cfg.joseph_update};
    FilterState state{cfg.x0_mean, cfg.p0};

    ReplayResult out;
    for (size_t k = 0; k < zs.size(); ++k) {
        state = ekf_predict(model, state, us[k], noise);
        auto [posterior, record] = ekf_update(model, state, zs[k], us[k], noise, opts);
        state = posterior;
        out.nis.push_back(record.nis);
    }

    StatSeries series;
    series.values = out.nis;
    series.dof = static_cast<int>(kSkycraneMeasDim);
    series.n_runs = 1;
    out.j = j_nis(series);
    return out;
}

int cmd_replay(const FlatConfig& cfg, const std::string& csv_path, const std::string& out_dir) {
    const std::string started = iso_timestamp();
    const fs::path dir = prepare_out_dir(out_dir);

    const ExperimentConfig exp = experiment_from_config(cfg);
    Eigen::Vector3d assumed = exp.matched_q();
    if (cfg.has("filter.q")) {
        const auto fq = cfg.get_doubles("filter.q", {});
        if (fq.size() != 3) throw ConfigError("filter.q needs 3 entries");
        assumed = Eigen::Vector3d(fq[0], fq[1], fq[2]);
    }

    const ReplayResult res = replay_measurements(csv_path, exp, assumed);

    std::ostringstream out;
    out << "k,nis\n";
    out.precision(17);
    for (size_t k = 0; k < res.nis.size(); ++k) out << k + 1 << ',' << res.nis[k] << '\n';
    write_file(dir / "nis_series.csv", out.str());

    write_manifest(dir, "replay", cfg, exp.master_seed, started, {"nis_series.csv"});
    std::cout << "steps = " << res.nis.size() << "  J_NIS = " << res.j << '\n';
    return 0;
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Kalman-filter process-noise auto-tuning via surrogate-model search"};
    app.set_version_flag("--version", std::string("kftune ") + kToolVersion);
    app.require_subcommand(1);

    std::string config_path, preset, out_dir = ".";
    std::vector<std::string> overrides;
    uint64_t seed = 0;
    bool seed_given = false;
    int threads = 0;
    bool threads_given = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "config file (key=value lines)");
        cmd->add_option("--set", overrides, "override, repeatable: key=value")->take_all();
        cmd->add_option("--preset", preset, "preset: skycrane-1d, skycrane-2d, skycrane-3d");
        cmd->add_option("--seed", seed, "master RNG seed")->each([&](const std::string&) { seed_given = true; });
        cmd->add_option("--threads", threads, "worker threads (0 = machine parallelism)")
            ->each([&](const std::string&) { threads_given = true; });
        cmd->add_option("--out", out_dir, "output directory");
    };

    CLI::App* tune = app.add_subcommand("tune", "run the auto-tuning loop");
    add_common(tune);

    std::string best_path;
    CLI::App* validate = app.add_subcommand("validate", "consistency + RMSE checks for a tuned candidate");
    validate->add_option("best", best_path, "best.json from a tune run")->required();
    add_common(validate);

    CLI::App* lqr = app.add_subcommand("lqr", "solve and report the trim-state regulator gain");
    add_common(lqr);

    std::string csv_path;
    CLI::App* replay = app.add_subcommand("replay", "score a recorded measurement/control log");
    replay->add_option("measurements", csv_path, "CSV log: t,z1,z2,z3,z4,u1,u2")->required();
    add_common(replay);

    try {
        app.parse(argc, const_cast<char**>(argv));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        FlatConfig cfg;
        apply_preset(cfg, preset);
        if (!config_path.empty()) {
            const FlatConfig file_cfg = FlatConfig::from_file(config_path);
            for (const auto& [k, v] : file_cfg.entries()) cfg.set(k, v);
        }
        for (const auto& kv : overrides) cfg.set(kv);
        if (seed_given) cfg.set("rng.seed", std::to_string(seed));
        if (threads_given) cfg.set("run.threads", std::to_string(threads));

        if (tune->parsed()) return cmd_tune(cfg, out_dir);
        if (validate->parsed()) return cmd_validate(cfg, best_path, out_dir);
        if (lqr->parsed()) return cmd_lqr(cfg, out_dir);
        if (replay->parsed()) return cmd_replay(cfg, csv_path, out_dir);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace kftune
