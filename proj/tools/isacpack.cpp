// isacpack: design and evaluate joint sensing/communication signal sets.
//
// Subcommands: design, eval, sweep-tradeoff, gen-channel, gen-reference.
// Configs are JSON (see SCHEMAS.md); every run writes a manifest that can be
// fed back as --config to reproduce its artifacts byte for byte.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

#include "experiment_config.hpp"
#include "isac/bdps.hpp"
#include "isac/errors.hpp"
#include "isac/eval.hpp"
#include "isac/io.hpp"
#include "isac/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace isac;
using namespace isacpack;

namespace {

int g_threads = 1;

json vec_to_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

struct DesignOutcome {
    SignalSet set;                 // x-domain signals
    json result;                   // result.json payload
    bool converged = false;
};

// One full design per the solver block: plain augmented-Lagrangian solve
// (fixed target or bisection) or the split decomposition with its GA.
DesignOutcome run_design(const ExperimentConfig& cfg, const ReducedInstance& inst) {
    DesignOutcome out;
    const SolverSpec& sv = cfg.solver;

    if (sv.algorithm == "bdps") {
        const GaOutcome ga = optimize_split(inst, sv.bdps_groups, sv.ga, sv.alda, g_threads);
        out.set = ga.result.signals;
        out.converged = true;
        json r;
        r["mode"] = "bdps";
        r["d_achieved"] = ga.result.d_true;
        r["d_true"] = ga.result.d_true;
        r["d_combined"] = ga.result.d_combined;
        r["power_used"] = ga.result.signals.avg_power;
        r["similarity"] = vec_to_json(ga.result.signals.similarity);
        r["converged"] = true;
        r["plan"] = json::parse(ga.plan.to_json());
        r["ga_best_per_generation"] = ga.best_per_gen;
        out.result = std::move(r);
        return out;
    }

    json r;
    if (cfg.problem.d) {
        QcqpInstance q(inst, *cfg.problem.d);
        auto [state, design] = solve_p8(q, sv.alda);
        const KktReport kkt = kkt_report(q, state);
        out.set = design.signals;
        out.converged = design.converged;
        r["mode"] = "fixed_d";
        r["d_target"] = *cfg.problem.d;
        r["d_achieved"] = design.d_achieved;
        r["power_used"] = design.power_used;
        r["similarity"] = vec_to_json(design.similarity);
        r["converged"] = design.converged;
        r["power_scaled"] = design.power_scaled;
        r["outer_iterations"] = state.outer_iter;
        r["feas_residual"] = state.feas_residual;
        r["kkt"] = {{"stationarity", kkt.stationarity},
                    {"max_violation", kkt.max_violation},
                    {"compl_slack_dist", kkt.compl_slack_dist},
                    {"compl_slack_sim", kkt.compl_slack_sim}};
    } else {
        const MaxminResult res = solve_maxmin(inst, sv.alda, cfg.problem.bisect);
        const KktReport kkt = kkt_report(res.accepted_q, res.state);
        out.set = res.design.signals;
        out.converged = res.design.converged;
        r["mode"] = "bisection";
        r["d_target"] = res.d_target;
        r["d_achieved"] = res.design.d_achieved;
        r["power_used"] = res.design.power_used;
        r["similarity"] = vec_to_json(res.design.similarity);
        r["converged"] = res.design.converged;
        r["power_scaled"] = res.design.power_scaled;
        r["power_matched"] = res.power_matched;
        r["probes"] = res.probes;
        r["kkt"] = {{"stationarity", kkt.stationarity},
                    {"max_violation", kkt.max_violation},
                    {"compl_slack_dist", kkt.compl_slack_dist},
                    {"compl_slack_sim", kkt.compl_slack_sim}};
    }
    out.result = std::move(r);
    return out;
}

json manifest_base(const std::string& command, const ExperimentConfig& cfg,
                   const std::vector<std::string>& input_files) {
    json m;
    m["tool"] = "isacpack";
    m["version"] = "0.1.0";
    m["command"] = command;
    m["config"] = cfg.resolved;
    json inputs = json::object();
    for (const auto& f : input_files) inputs[f] = sha256_hex(read_text_file(f));
    m["inputs"] = inputs;
    return m;
}

void write_manifest(const fs::path& dir, json manifest, std::vector<std::string> outputs) {
    std::sort(outputs.begin(), outputs.end());
    manifest["outputs"] = outputs;
    write_text_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");
}

std::vector<CVec> complexify_set(const std::vector<Vec>& signals) {
    std::vector<CVec> out;
    out.reserve(signals.size());
    for (const Vec& s : signals) out.push_back(complexify(s));
    return out;
}

int cmd_design(const ExperimentConfig& cfg) {
    const ProblemSetup setup = build_setup(cfg);
    const DesignOutcome outcome = run_design(cfg, setup.inst);

    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    save_signals_csv((dir / "signals.csv").string(), outcome.set.signals);
    save_waveform_csv((dir / "x0_used.csv").string(), setup.x0.x0);
    write_text_file((dir / "result.json").string(), outcome.result.dump(2) + "\n");
    write_text_file((dir / "resolved_config.json").string(), cfg.resolved.dump(2) + "\n");
    json manifest = manifest_base("design", cfg, setup.input_files);
    manifest["summary"] = {{"d_achieved", outcome.result.at("d_achieved")},
                           {"converged", outcome.converged}};
    write_manifest(dir, manifest,
                   {"signals.csv", "x0_used.csv", "result.json", "resolved_config.json"});
    return 0;
}

// Designer callback for ensemble metrics: fresh reduction and solve per draw.
Designer make_designer(const ExperimentConfig& cfg, const ReferenceWaveform& x0) {
    return [cfg, x0](const ChannelMatrix& H) {
        const ReducedInstance inst = reduce(H, x0, cfg.problem.M, cfg.problem.P, cfg.problem.eps);
        ExperimentConfig local = cfg;
        return run_design(local, inst).set;
    };
}

int cmd_eval(const ExperimentConfig& cfg) {
    if (cfg.eval.metrics.empty()) throw ConfigError("eval.metrics must list at least one metric");
    const ProblemSetup setup = build_setup(cfg);
    const EvalSpec& ev = cfg.eval;

    std::vector<std::string> inputs = setup.input_files;

    // signal set: from file, or designed for the configured channel
    std::vector<Vec> signals;
    const bool file_mode = !ev.signals_file.empty();
    if (file_mode) {
        if (ev.csit_eta > 0.0)
            throw ConfigError("csit_eta needs designer mode (omit eval.signals)");
        signals = load_signals_csv(ev.signals_file);
        inputs.push_back(ev.signals_file);
        for (const Vec& s : signals)
            if (s.size() != setup.N)
                throw ConfigError("signals.csv does not match the problem dimensions");
    }

    const ChannelMatrix H = setup.H ? *setup.H
                                    : ChannelMatrix(CMat::Identity(setup.N / 2, setup.N / 2));

    auto designed_for = [&](const ChannelMatrix& channel) {
        const ReducedInstance inst =
            reduce(channel, setup.x0, cfg.problem.M, cfg.problem.P, cfg.problem.eps);
        return run_design(cfg, inst).set.signals;
    };
    auto base_signals = [&]() -> const std::vector<Vec>& {
        if (signals.empty()) signals = designed_for(H);
        return signals;
    };

    const fs::path dir(cfg.output_dir);
    json summary;
    struct Artifact {
        std::string name;
        std::function<void(const std::string&)> write;
    };
    std::vector<Artifact> artifacts;

    for (const std::string& metric : ev.metrics) {
        if (metric == "ser") {
            SerCurve curve;
            if (ev.csit_eta > 0.0) {
                // least-squares CSIT error grows with the operating noise:
                // re-design on the perturbed channel at every SNR point,
                // evaluate on the true one
                curve.trials_per_point = ev.trials;
                for (std::size_t p = 0; p < ev.snr_db.size(); ++p) {
                    const double sigma_c2 =
                        cfg.problem.P / std::pow(10.0, ev.snr_db[p] / 10.0);
                    const ChannelMatrix H_im =
                        perturb_csit(H, ev.csit_eta, sigma_c2, ev.seed + 1000 + p);
                    SignalSet set;
                    set.signals = designed_for(H_im);
                    const SerCurve point = simulate_ser(set, H, {ev.snr_db[p]}, ev.trials,
                                                        ev.seed, cfg.problem.P, g_threads);
                    curve.snr_db.push_back(ev.snr_db[p]);
                    curve.ser.push_back(point.ser[0]);
                    curve.errors.push_back(point.errors[0]);
                }
            } else {
                SignalSet set;
                set.signals = base_signals();
                curve = simulate_ser(set, H, ev.snr_db, ev.trials, ev.seed, cfg.problem.P,
                                     g_threads);
            }
            std::vector<std::vector<double>> rows;
            for (std::size_t p = 0; p < curve.snr_db.size(); ++p)
                rows.push_back({curve.snr_db[p], curve.ser[p],
                                static_cast<double>(curve.errors[p]),
                                static_cast<double>(curve.trials_per_point)});
            artifacts.push_back({"ser.csv", [rows](const std::string& path) {
                                     save_curve_csv(path, {"snr_db", "ser", "errors", "trials"},
                                                    rows);
                                 }});
        } else if (metric == "cdf") {
            const ChannelEnsemble ens =
                gen_rayleigh(cfg.problem.channel.n_r, cfg.problem.channel.n_tx,
                             cfg.problem.channel.count, cfg.problem.channel.seed);
            const CdfResult cdf = min_distance_cdf(ens, make_designer(cfg, setup.x0), g_threads);
            std::vector<std::vector<double>> rows;
            for (std::size_t i = 0; i < cdf.samples.size(); ++i)
                rows.push_back({cdf.samples[i],
                                static_cast<double>(i + 1) / static_cast<double>(cdf.samples.size())});
            summary["cdf_failed_draws"] = cdf.failed;
            artifacts.push_back({"cdf.csv", [rows](const std::string& path) {
                                     save_curve_csv(path, {"min_received_distance", "cdf"}, rows);
                                 }});
        } else if (metric == "beampattern") {
            const auto set = complexify_set(base_signals());
            const auto grid = angle_grid(-90.0, 90.0, ev.angle_step);
            const BeampatternSample avg = avg_beampattern(set, grid);
            const BeampatternSample ref = beampattern(complexify(setup.x0.x0), grid);
            std::vector<std::vector<double>> rows;
            for (std::size_t i = 0; i < grid.size(); ++i)
                rows.push_back({grid[i], avg.gain_db[i], ref.gain_db[i]});
            summary["beampattern_mse_db"] =
                beampattern_mse(set, complexify(setup.x0.x0), grid, cfg.problem.P);
            artifacts.push_back({"beampattern.csv", [rows](const std::string& path) {
                                     save_curve_csv(path, {"theta_deg", "avg_db", "ref_db"}, rows);
                                 }});
        } else if (metric == "af") {
            const CVec x = file_mode || !signals.empty()
                               ? complexify(base_signals().front())
                               : complexify(setup.x0.x0);
            const AmbiguityGrid af = ambiguity(x);
            std::vector<std::vector<double>> rows;
            for (std::size_t t = 0; t < af.delays.size(); ++t)
                for (std::size_t d = 0; d < af.doppler.size(); ++d)
                    rows.push_back({static_cast<double>(af.delays[t]), af.doppler[d],
                                    af.mag(static_cast<Eigen::Index>(t),
                                           static_cast<Eigen::Index>(d))});
            artifacts.push_back({"af.csv", [rows](const std::string& path) {
                                     save_curve_csv(path, {"delay", "doppler", "magnitude"}, rows);
                                 }});
        } else if (metric == "pd") {
            const auto set = complexify_set(base_signals());
            const PdCurve pd = detection_probability(set, ev.lobe_lo, ev.lobe_hi, ev.snr_db,
                                                     ev.trials, ev.pfa, ev.seed, cfg.problem.P,
                                                     g_threads);
            std::vector<std::vector<double>> rows;
            for (std::size_t p = 0; p < pd.snr_db.size(); ++p)
                rows.push_back({pd.snr_db[p], pd.pd[p]});
            summary["pd_threshold_factor"] = pd.threshold_factor;
            artifacts.push_back({"pd.csv", [rows](const std::string& path) {
                                     save_curve_csv(path, {"snr_db", "pd"}, rows);
                                 }});
        } else if (metric == "similarity") {
            std::vector<std::vector<double>> rows;
            if (file_mode) {
                const Vec sim = waveform_similarity(signals, setup.x0.x0);
                for (Eigen::Index k = 0; k < sim.size(); ++k)
                    rows.push_back({static_cast<double>(k), sim(k)});
            } else {
                // one row per channel realization: worst-case similarity
                const ChannelEnsemble ens =
                    gen_rayleigh(cfg.problem.channel.n_r, cfg.problem.channel.n_tx,
                                 cfg.problem.channel.count, cfg.problem.channel.seed);
                const Designer designer = make_designer(cfg, setup.x0);
                std::vector<double> worst(ens.draws.size(),
                                          std::numeric_limits<double>::quiet_NaN());
                parallel_for(static_cast<int>(ens.draws.size()), g_threads, [&](int i) {
                    try {
                        const SignalSet set = designer(ens.draws[static_cast<std::size_t>(i)]);
                        worst[static_cast<std::size_t>(i)] =
                            waveform_similarity(set.signals, setup.x0.x0).maxCoeff();
                    } catch (...) {
                    }
                });
                for (std::size_t i = 0; i < worst.size(); ++i)
                    rows.push_back({static_cast<double>(i), worst[i]});
            }
            artifacts.push_back({"similarity.csv", [rows](const std::string& path) {
                                     save_curve_csv(path, {"index", "similarity"}, rows);
                                 }});
        }
    }

    fs::create_directories(dir);
    std::vector<std::string> outputs;
    for (const auto& a : artifacts) {
        a.write((dir / a.name).string());
        outputs.push_back(a.name);
    }
    write_text_file((dir / "resolved_config.json").string(), cfg.resolved.dump(2) + "\n");
    outputs.push_back("resolved_config.json");
    json manifest = manifest_base("eval", cfg, inputs);
    manifest["summary"] = summary;
    write_manifest(dir, manifest, outputs);
    return 0;
}

int cmd_sweep_tradeoff(const ExperimentConfig& cfg) {
    if (cfg.sweep.d_values.empty() && cfg.sweep.eps_values.empty())
        throw ConfigError("sweep needs d_values or eps_values");
    const ProblemSetup setup = build_setup(cfg);
    const ChannelMatrix H = setup.H ? *setup.H
                                    : ChannelMatrix(CMat::Identity(setup.N / 2, setup.N / 2));
    const auto grid = angle_grid(-90.0, 90.0, cfg.eval.angle_step);
    const CVec ref_c = complexify(setup.x0.x0);

    const bool sweep_d = !cfg.sweep.d_values.empty();
    const auto& points = sweep_d ? cfg.sweep.d_values : cfg.sweep.eps_values;

    std::vector<std::vector<double>> rows;
    int failures = 0;
    for (double value : points) {
        ExperimentConfig point_cfg = cfg;
        ReducedInstance inst = setup.inst;
        if (sweep_d) {
            point_cfg.problem.d = value;
        } else {
            point_cfg.problem.d.reset();
            point_cfg.problem.eps = value;
            inst.eps = value;
        }
        const double nan = std::numeric_limits<double>::quiet_NaN();
        try {
            const DesignOutcome outcome = run_design(point_cfg, inst);
            SignalSet set = outcome.set;
            const SerCurve ser = simulate_ser(set, H, {cfg.sweep.ref_snr_db}, cfg.sweep.trials,
                                              cfg.eval.seed, cfg.problem.P, g_threads);
            const double mse =
                beampattern_mse(complexify_set(set.signals), ref_c, grid, cfg.problem.P);
            const double sim = set.similarity.size() ? set.similarity.maxCoeff() : 0.0;
            rows.push_back({value, outcome.result.at("d_achieved").get<double>(), sim, mse,
                            ser.ser[0], 1.0});
        } catch (const InfeasibleDetected&) {
            rows.push_back({value, nan, nan, nan, nan, 0.0});
            ++failures;
        } catch (const NoFeasiblePoint&) {
            rows.push_back({value, nan, nan, nan, nan, 0.0});
            ++failures;
        }
    }

    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    const std::string axis = sweep_d ? "d_target" : "eps";
    save_curve_csv((dir / "tradeoff.csv").string(),
                   {axis, "d_achieved", "max_similarity", "beampattern_mse_db", "ser_at_ref_snr",
                    "feasible"},
                   rows);
    write_text_file((dir / "resolved_config.json").string(), cfg.resolved.dump(2) + "\n");
    json manifest = manifest_base("sweep-tradeoff", cfg, setup.input_files);
    manifest["summary"] = {{"points", points.size()}, {"failures", failures}};
    write_manifest(dir, manifest, {"tradeoff.csv", "resolved_config.json"});
    return 0;
}

json error_json(const std::string& type, const std::string& message) {
    json e;
    e["error"]["type"] = type;
    e["error"]["message"] = message;
    return e;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Sphere-packing signal set design for joint sensing and communication.\n"
        "Configs are JSON; CSV/JSON artifact schemas are documented in SCHEMAS.md.\n"
        "CSV columns: signals.csv = x_0..x_{N-1} (one signal per row); "
        "ser.csv = snr_db,ser,errors,trials; cdf.csv = min_received_distance,cdf;\n"
        "beampattern.csv = theta_deg,avg_db,ref_db; af.csv = delay,doppler,magnitude; "
        "pd.csv = snr_db,pd; similarity.csv = index,similarity;\n"
        "tradeoff.csv = d_target|eps,d_achieved,max_similarity,beampattern_mse_db,"
        "ser_at_ref_snr,feasible."};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    std::string out_override;
    std::vector<std::string> metric_override;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config (or a manifest.json)")->required();
        sub->add_option("--seed", seed_override, "override eval and channel seeds");
        sub->add_option("--out", out_override, "override the output directory");
        sub->add_option("--threads", g_threads, "worker threads (default 1)");
    };

    CLI::App* design = app.add_subcommand("design", "solve one design problem");
    add_common(design);
    CLI::App* eval = app.add_subcommand("eval", "compute evaluation metrics");
    add_common(eval);
    eval->add_option("--metric", metric_override, "override eval.metrics (repeatable)");
    CLI::App* sweep = app.add_subcommand("sweep-tradeoff",
                                         "sweep distance targets or similarity tolerances");
    add_common(sweep);

    CLI::App* gench = app.add_subcommand("gen-channel", "draw Rayleigh channels to CSV");
    int gc_nr = 8, gc_ntx = 32, gc_count = 1;
    std::uint64_t gc_seed = 0;
    std::string gc_out = "channels";
    gench->add_option("--n-r", gc_nr, "receive dimensions");
    gench->add_option("--n-tx", gc_ntx, "transmit dimensions");
    gench->add_option("--count", gc_count, "number of draws");
    gench->add_option("--seed", gc_seed, "ensemble seed");
    gench->add_option("--out", gc_out, "output directory");

    CLI::App* genref = app.add_subcommand("gen-reference", "generate a reference waveform CSV");
    std::string gr_kind = "lfm", gr_out = "x0.csv";
    int gr_n = 64, gr_ntx = 32;
    double gr_power = 1.0, gr_lo = -20.0, gr_hi = 20.0;
    genref->add_option("--kind", gr_kind, "lfm or widebeam")->required();
    genref->add_option("--n", gr_n, "real dimension (lfm)");
    genref->add_option("--n-tx", gr_ntx, "array elements (widebeam)");
    genref->add_option("--power", gr_power, "waveform power");
    genref->add_option("--lobe-lo", gr_lo, "main lobe lower edge, degrees");
    genref->add_option("--lobe-hi", gr_hi, "main lobe upper edge, degrees");
    genref->add_option("--out", gr_out, "output CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gench->parsed()) {
            const ChannelEnsemble ens = gen_rayleigh(gc_nr, gc_ntx, gc_count, gc_seed);
            fs::create_directories(gc_out);
            for (int i = 0; i < gc_count; ++i) {
                char name[32];
                std::snprintf(name, sizeof name, "channel_%03d.csv", i);
                save_channel_csv((fs::path(gc_out) / name).string(), ens.draws[i]);
            }
            std::cout << gc_count << " channel(s) written to " << gc_out << "\n";
            return 0;
        }
        if (genref->parsed()) {
            ReferenceWaveform wf;
            if (gr_kind == "lfm") wf = gen_lfm(gr_n, gr_power);
            else if (gr_kind == "widebeam") wf = gen_widebeam(gr_ntx, gr_power, gr_lo, gr_hi);
            else throw ConfigError("gen-reference kind must be lfm or widebeam");
            save_waveform_csv(gr_out, wf.x0);
            std::cout << "reference written to " << gr_out << "\n";
            return 0;
        }

        // config-driven commands: parse once, apply CLI overrides, dispatch
        ExperimentConfig cfg = load_config(read_text_file(config_path));
        if (seed_override) override_seed(cfg, *seed_override);
        if (!out_override.empty()) override_output(cfg, out_override);
        if (!metric_override.empty()) override_metrics(cfg, metric_override);

        if (design->parsed()) return cmd_design(cfg);
        if (eval->parsed()) return cmd_eval(cfg);
        if (sweep->parsed()) return cmd_sweep_tradeoff(cfg);
    } catch (const ConfigError& e) {
        std::cout << error_json("config", e.what()).dump() << "\n";
        return 3;
    } catch (const InvalidInput& e) {
        std::cout << error_json("invalid_input", e.what()).dump() << "\n";
        return 3;
    } catch (const InfeasibleDetected& e) {
        std::cout << error_json("infeasible", e.what()).dump() << "\n";
        return 2;
    } catch (const NoFeasiblePoint& e) {
        std::cout << error_json("no_feasible_point", e.what()).dump() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cout << error_json("internal", e.what()).dump() << "\n";
        return 1;
    }
    return 0;
}
