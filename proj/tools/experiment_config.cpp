#include "experiment_config.hpp"

#include <set>

#include "isac/errors.hpp"
#include "isac/eval.hpp"
#include "isac/io.hpp"

namespace isacpack {

namespace {

void require_keys(const json& j, const std::string& where,
                  const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key))
            throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for '" + key + "'");
    }
}

template <typename T>
T get_required(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError("missing required key '" + key + "' in " + where);
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for '" + key + "' in " + where);
    }
}

ChannelSpec parse_channel(const json& j) {
    require_keys(j, "problem.channel", {"kind", "n_r", "n_tx", "seed", "index", "count", "file"});
    ChannelSpec c;
    c.kind = get_or<std::string>(j, "kind", "rayleigh");
    if (c.kind != "rayleigh" && c.kind != "identity" && c.kind != "file")
        throw ConfigError("problem.channel.kind must be rayleigh, identity, or file");
    c.n_r = get_or<int>(j, "n_r", 0);
    c.n_tx = get_or<int>(j, "n_tx", 0);
    c.seed = get_or<std::uint64_t>(j, "seed", 0);
    c.index = get_or<int>(j, "index", 0);
    c.count = get_or<int>(j, "count", 1);
    c.file = get_or<std::string>(j, "file", "");
    if (c.kind == "rayleigh" && (c.n_r < 1 || c.n_tx < 1))
        throw ConfigError("rayleigh channel needs n_r and n_tx");
    if (c.kind == "identity" && c.n_tx < 1)
        throw ConfigError("identity channel needs n_tx");
    if (c.kind == "file" && c.file.empty())
        throw ConfigError("file channel needs a path");
    if (c.index < 0 || c.count < 1) throw ConfigError("bad channel index/count");
    return c;
}

X0Spec parse_x0(const json& j) {
    require_keys(j, "problem.x0", {"kind", "file", "lobe", "power"});
    X0Spec x;
    x.kind = get_required<std::string>(j, "kind", "problem.x0");
    if (x.kind != "lfm" && x.kind != "widebeam" && x.kind != "file")
        throw ConfigError("problem.x0.kind must be lfm, widebeam, or file");
    x.file = get_or<std::string>(j, "file", "");
    if (x.kind == "file" && x.file.empty()) throw ConfigError("file reference needs a path");
    if (j.contains("lobe")) {
        const auto lobe = j.at("lobe").get<std::vector<double>>();
        if (lobe.size() != 2) throw ConfigError("problem.x0.lobe must be [lo, hi]");
        x.lobe_lo = lobe[0];
        x.lobe_hi = lobe[1];
    }
    if (j.contains("power")) x.power = j.at("power").get<double>();
    return x;
}

ProblemSpec parse_problem(const json& j) {
    require_keys(j, "problem", {"M", "P", "eps", "d", "bisection", "channel", "x0"});
    ProblemSpec p;
    p.M = get_or<int>(j, "M", 0);
    p.P = get_or<double>(j, "P", 1.0);
    p.eps = get_required<double>(j, "eps", "problem");
    if (p.eps < 0.0 || p.P <= 0.0) throw ConfigError("problem.eps must be >= 0 and problem.P > 0");
    if (j.contains("d") && j.contains("bisection"))
        throw ConfigError("problem.d and problem.bisection are mutually exclusive");
    if (j.contains("d")) {
        p.d = j.at("d").get<double>();
        if (*p.d < 0.0) throw ConfigError("problem.d must be >= 0");
    }
    if (j.contains("bisection")) {
        const json& b = j.at("bisection");
        require_keys(b, "problem.bisection", {"d_lo", "d_hi", "d_tol", "p_tol"});
        p.bisect.d_lo = get_or<double>(b, "d_lo", 0.0);
        if (b.contains("d_hi")) p.bisect.d_hi = b.at("d_hi").get<double>();
        if (b.contains("d_tol")) p.bisect.d_tol = b.at("d_tol").get<double>();
        p.bisect.p_tol = get_or<double>(b, "p_tol", 1e-3);
        p.bisect_given = true;
    }
    if (!j.contains("channel")) throw ConfigError("problem.channel is required");
    p.channel = parse_channel(j.at("channel"));
    if (!j.contains("x0")) throw ConfigError("problem.x0 is required");
    p.x0 = parse_x0(j.at("x0"));
    return p;
}

isac::AldaConfig parse_alda(const json& j) {
    require_keys(j, "solver.alda",
                 {"z_init", "lambda0", "v0", "mu0", "rho", "mu_cap", "max_outer", "max_bfgs",
                  "bfgs_grad_tol", "feas_tol", "stall_tol", "n_starts", "start_seed"});
    isac::AldaConfig a;
    const std::string init = get_or<std::string>(j, "z_init", "ones");
    if (init == "ones") a.z_init_mode = isac::ZInitMode::Ones;
    else if (init == "reference") a.z_init_mode = isac::ZInitMode::Reference;
    else throw ConfigError("solver.alda.z_init must be ones or reference");
    a.lambda0 = get_or<double>(j, "lambda0", a.lambda0);
    a.v0 = get_or<double>(j, "v0", a.v0);
    a.mu0 = get_or<double>(j, "mu0", a.mu0);
    a.rho = get_or<double>(j, "rho", a.rho);
    a.mu_cap = get_or<double>(j, "mu_cap", a.mu_cap);
    a.max_outer = get_or<int>(j, "max_outer", a.max_outer);
    a.max_bfgs = get_or<int>(j, "max_bfgs", a.max_bfgs);
    a.bfgs_grad_tol = get_or<double>(j, "bfgs_grad_tol", a.bfgs_grad_tol);
    a.feas_tol = get_or<double>(j, "feas_tol", a.feas_tol);
    a.stall_tol = get_or<double>(j, "stall_tol", a.stall_tol);
    a.n_starts = get_or<int>(j, "n_starts", a.n_starts);
    a.start_seed = get_or<std::uint64_t>(j, "start_seed", a.start_seed);
    try {
        a.validate();
    } catch (const isac::InvalidInput& e) {
        throw ConfigError(e.what());
    }
    return a;
}

SolverSpec parse_solver(const json& j) {
    require_keys(j, "solver", {"algorithm", "alda", "bdps"});
    SolverSpec s;
    s.algorithm = get_or<std::string>(j, "algorithm", "alda");
    if (s.algorithm != "alda" && s.algorithm != "bdps")
        throw ConfigError("solver.algorithm must be alda or bdps");
    if (j.contains("alda")) s.alda = parse_alda(j.at("alda"));
    if (j.contains("bdps")) {
        const json& b = j.at("bdps");
        require_keys(b, "solver.bdps", {"G", "ga"});
        s.bdps_groups = get_or<int>(b, "G", 2);
        if (s.bdps_groups < 1) throw ConfigError("solver.bdps.G must be >= 1");
        if (b.contains("ga")) {
            const json& g = b.at("ga");
            require_keys(g, "solver.bdps.ga",
                         {"pop", "iters", "p_mut", "p_cross", "seed", "elitism", "tournament"});
            s.ga.pop = get_or<int>(g, "pop", s.ga.pop);
            s.ga.iters = get_or<int>(g, "iters", s.ga.iters);
            s.ga.p_mut = get_or<double>(g, "p_mut", s.ga.p_mut);
            s.ga.p_cross = get_or<double>(g, "p_cross", s.ga.p_cross);
            s.ga.seed = get_or<std::uint64_t>(g, "seed", s.ga.seed);
            s.ga.elitism = get_or<int>(g, "elitism", s.ga.elitism);
            s.ga.tournament = get_or<int>(g, "tournament", s.ga.tournament);
            try {
                s.ga.validate();
            } catch (const isac::InvalidInput& e) {
                throw ConfigError(e.what());
            }
        }
    }
    return s;
}

EvalSpec parse_eval(const json& j) {
    require_keys(j, "eval",
                 {"metrics", "snr_db", "trials", "seed", "pfa", "signals", "csit_eta",
                  "angle_step", "lobe"});
    EvalSpec e;
    if (j.contains("metrics")) e.metrics = j.at("metrics").get<std::vector<std::string>>();
    for (const auto& m : e.metrics)
        if (m != "ser" && m != "cdf" && m != "beampattern" && m != "af" && m != "pd" &&
            m != "similarity")
            throw ConfigError("unknown metric '" + m + "'");
    if (j.contains("snr_db")) e.snr_db = j.at("snr_db").get<std::vector<double>>();
    e.trials = get_or<long>(j, "trials", e.trials);
    e.seed = get_or<std::uint64_t>(j, "seed", e.seed);
    e.pfa = get_or<double>(j, "pfa", e.pfa);
    e.signals_file = get_or<std::string>(j, "signals", "");
    e.csit_eta = get_or<double>(j, "csit_eta", 0.0);
    e.angle_step = get_or<double>(j, "angle_step", 0.5);
    if (j.contains("lobe")) {
        const auto lobe = j.at("lobe").get<std::vector<double>>();
        if (lobe.size() != 2) throw ConfigError("eval.lobe must be [lo, hi]");
        e.lobe_lo = lobe[0];
        e.lobe_hi = lobe[1];
    }
    if (e.trials < 1) throw ConfigError("eval.trials must be >= 1");
    if (e.pfa <= 0.0 || e.pfa >= 1.0) throw ConfigError("eval.pfa must be in (0,1)");
    return e;
}

SweepSpec parse_sweep(const json& j) {
    require_keys(j, "sweep", {"d_values", "eps_values", "ref_snr_db", "trials"});
    SweepSpec s;
    if (j.contains("d_values")) s.d_values = j.at("d_values").get<std::vector<double>>();
    if (j.contains("eps_values")) s.eps_values = j.at("eps_values").get<std::vector<double>>();
    s.ref_snr_db = get_or<double>(j, "ref_snr_db", s.ref_snr_db);
    s.trials = get_or<long>(j, "trials", s.trials);
    if (!s.d_values.empty() && !s.eps_values.empty())
        throw ConfigError("sweep.d_values and sweep.eps_values are mutually exclusive");
    return s;
}

json resolve_json(const ExperimentConfig& cfg) {
    json r;
    const ProblemSpec& p = cfg.problem;
    r["problem"]["M"] = p.M;
    r["problem"]["P"] = p.P;
    r["problem"]["eps"] = p.eps;
    if (p.d) r["problem"]["d"] = *p.d;
    if (p.bisect_given || !p.d) {
        json b;
        b["d_lo"] = p.bisect.d_lo;
        if (p.bisect.d_hi) b["d_hi"] = *p.bisect.d_hi;
        if (p.bisect.d_tol) b["d_tol"] = *p.bisect.d_tol;
        b["p_tol"] = p.bisect.p_tol;
        r["problem"]["bisection"] = b;
    }
    json c;
    c["kind"] = p.channel.kind;
    if (p.channel.kind == "rayleigh") {
        c["n_r"] = p.channel.n_r;
        c["n_tx"] = p.channel.n_tx;
        c["seed"] = p.channel.seed;
        c["index"] = p.channel.index;
        c["count"] = p.channel.count;
    } else if (p.channel.kind == "identity") {
        c["n_tx"] = p.channel.n_tx;
    } else {
        c["file"] = p.channel.file;
    }
    r["problem"]["channel"] = c;
    json x;
    x["kind"] = p.x0.kind;
    if (!p.x0.file.empty()) x["file"] = p.x0.file;
    if (p.x0.kind == "widebeam") x["lobe"] = {p.x0.lobe_lo, p.x0.lobe_hi};
    x["power"] = p.x0.power.value_or(p.P);
    r["problem"]["x0"] = x;

    const SolverSpec& s = cfg.solver;
    r["solver"]["algorithm"] = s.algorithm;
    json a;
    a["z_init"] = s.alda.z_init_mode == isac::ZInitMode::Reference ? "reference" : "ones";
    a["lambda0"] = s.alda.lambda0;
    a["v0"] = s.alda.v0;
    a["mu0"] = s.alda.mu0;
    a["rho"] = s.alda.rho;
    a["mu_cap"] = s.alda.mu_cap;
    a["max_outer"] = s.alda.max_outer;
    a["max_bfgs"] = s.alda.max_bfgs;
    a["bfgs_grad_tol"] = s.alda.bfgs_grad_tol;
    a["feas_tol"] = s.alda.feas_tol;
    a["stall_tol"] = s.alda.stall_tol;
    a["n_starts"] = s.alda.n_starts;
    a["start_seed"] = s.alda.start_seed;
    r["solver"]["alda"] = a;
    if (s.algorithm == "bdps") {
        json b;
        b["G"] = s.bdps_groups;
        b["ga"]["pop"] = s.ga.pop;
        b["ga"]["iters"] = s.ga.iters;
        b["ga"]["p_mut"] = s.ga.p_mut;
        b["ga"]["p_cross"] = s.ga.p_cross;
        b["ga"]["seed"] = s.ga.seed;
        b["ga"]["elitism"] = s.ga.elitism;
        b["ga"]["tournament"] = s.ga.tournament;
        r["solver"]["bdps"] = b;
    }

    const EvalSpec& e = cfg.eval;
    r["eval"]["metrics"] = e.metrics;
    r["eval"]["snr_db"] = e.snr_db;
    r["eval"]["trials"] = e.trials;
    r["eval"]["seed"] = e.seed;
    r["eval"]["pfa"] = e.pfa;
    if (!e.signals_file.empty()) r["eval"]["signals"] = e.signals_file;
    r["eval"]["csit_eta"] = e.csit_eta;
    r["eval"]["angle_step"] = e.angle_step;
    r["eval"]["lobe"] = {e.lobe_lo, e.lobe_hi};

    if (!cfg.sweep.d_values.empty()) r["sweep"]["d_values"] = cfg.sweep.d_values;
    if (!cfg.sweep.eps_values.empty()) r["sweep"]["eps_values"] = cfg.sweep.eps_values;
    r["sweep"]["ref_snr_db"] = cfg.sweep.ref_snr_db;
    r["sweep"]["trials"] = cfg.sweep.trials;

    r["output"]["dir"] = cfg.output_dir;
    return r;
}

}  // namespace

ExperimentConfig load_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    // a manifest wraps the config it ran with; unwrap for reproduction
    if (j.is_object() && j.contains("config") && j.contains("tool"))
        j = j.at("config");

    require_keys(j, "config", {"problem", "solver", "eval", "sweep", "output"});
    ExperimentConfig cfg;
    if (!j.contains("problem")) throw ConfigError("config needs a problem block");
    cfg.problem = parse_problem(j.at("problem"));
    if (j.contains("solver")) cfg.solver = parse_solver(j.at("solver"));
    if (j.contains("eval")) cfg.eval = parse_eval(j.at("eval"));
    if (j.contains("sweep")) cfg.sweep = parse_sweep(j.at("sweep"));
    if (j.contains("output")) {
        require_keys(j.at("output"), "output", {"dir"});
        cfg.output_dir = get_or<std::string>(j.at("output"), "dir", cfg.output_dir);
    }
    cfg.resolved = resolve_json(cfg);
    return cfg;
}

void override_seed(ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.eval.seed = seed;
    cfg.problem.channel.seed = seed;
    cfg.resolved = resolve_json(cfg);
}

void override_output(ExperimentConfig& cfg, const std::string& dir) {
    cfg.output_dir = dir;
    cfg.resolved = resolve_json(cfg);
}

void override_metrics(ExperimentConfig& cfg, const std::vector<std::string>& metrics) {
    cfg.eval.metrics = metrics;
    cfg.resolved = resolve_json(cfg);
}

isac::ChannelMatrix build_channel(const ChannelSpec& spec, int index) {
    if (spec.kind == "identity") {
        return isac::CMat::Identity(spec.n_tx, spec.n_tx);
    }
    if (spec.kind == "file") {
        return isac::load_channel_csv(spec.file);
    }
    const auto ens = isac::gen_rayleigh(spec.n_r, spec.n_tx, index + 1, spec.seed);
    return ens.draws.back();
}

ProblemSetup build_setup(const ExperimentConfig& cfg) {
    const ProblemSpec& p = cfg.problem;
    ProblemSetup setup;

    isac::ChannelMatrix H = build_channel(p.channel, p.channel.index);
    if (p.channel.kind == "file") setup.input_files.push_back(p.channel.file);
    const int n_tx = static_cast<int>(H.cols());
    setup.N = 2 * n_tx;

    const double x0_power = p.x0.power.value_or(p.P);
    try {
        if (p.x0.kind == "lfm") {
            setup.x0 = isac::gen_lfm(setup.N, x0_power);
        } else if (p.x0.kind == "widebeam") {
            setup.x0 = isac::gen_widebeam(n_tx, x0_power, p.x0.lobe_lo, p.x0.lobe_hi);
        } else {
            setup.x0 = isac::ReferenceWaveform{isac::load_waveform_csv(p.x0.file),
                                               isac::WaveformKind::FromFile};
            setup.input_files.push_back(p.x0.file);
        }
        if (setup.x0.x0.size() != setup.N)
            throw ConfigError("reference waveform length does not match the channel dimensions");
        if (p.M < 1) throw ConfigError("problem.M must be >= 1");
        setup.inst = isac::reduce(H, setup.x0, p.M, p.P, p.eps);
    } catch (const isac::InvalidInput& e) {
        throw ConfigError(e.what());
    }
    if (p.channel.kind != "identity") setup.H = std::move(H);
    return setup;
}

}  // namespace isacpack
