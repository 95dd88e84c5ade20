#ifndef ISACPACK_EXPERIMENT_CONFIG_HPP
#define ISACPACK_EXPERIMENT_CONFIG_HPP

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "isac/alda.hpp"
#include "isac/bdps.hpp"
#include "isac/signal_model.hpp"

namespace isacpack {

using nlohmann::json;

/// Raised for malformed configs and missing inputs; the CLI maps it to exit 3.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ChannelSpec {
    std::string kind = "rayleigh";  // rayleigh | identity | file
    int n_r = 0;
    int n_tx = 0;
    std::uint64_t seed = 0;
    int index = 0;
    int count = 1;
    std::string file;
};

struct X0Spec {
    std::string kind;  // lfm | widebeam | file
    std::string file;
    double lobe_lo = -20.0;
    double lobe_hi = 20.0;
    std::optional<double> power;  // default: problem power
};

struct ProblemSpec {
    int M = 0;
    double P = 1.0;
    double eps = 0.0;
    std::optional<double> d;  // fixed squared-distance target
    isac::BisectOptions bisect;
    bool bisect_given = false;
    ChannelSpec channel;
    X0Spec x0;
};

struct SolverSpec {
    std::string algorithm = "alda";  // alda | bdps
    isac::AldaConfig alda;
    int bdps_groups = 2;
    isac::GaConfig ga;
};

struct EvalSpec {
    std::vector<std::string> metrics;
    std::vector<double> snr_db = {0, 2, 4, 6, 8, 10};
    long trials = 100000;
    std::uint64_t seed = 1;
    double pfa = 1e-3;
    std::string signals_file;  // empty => designer mode
    double csit_eta = 0.0;
    double angle_step = 0.5;
    double lobe_lo = -20.0;
    double lobe_hi = 20.0;
};

struct SweepSpec {
    std::vector<double> d_values;
    std::vector<double> eps_values;
    double ref_snr_db = 6.0;
    long trials = 20000;
};

struct ExperimentConfig {
    ProblemSpec problem;
    SolverSpec solver;
    EvalSpec eval;
    SweepSpec sweep;
    std::string output_dir = "out";
    json resolved;  // fully-resolved config with defaults expanded
};

/// Parse + schema-validate a config JSON text (unknown keys rejected).
/// A manifest produced by a previous run is accepted: its "config" object
/// is unwrapped so any artifact can be reproduced from its manifest.
ExperimentConfig load_config(const std::string& text);

/// CLI overrides applied after parsing; they re-resolve the config.
void override_seed(ExperimentConfig& cfg, std::uint64_t seed);
void override_output(ExperimentConfig& cfg, const std::string& dir);
void override_metrics(ExperimentConfig& cfg, const std::vector<std::string>& metrics);

/// Concrete problem objects for one run.
struct ProblemSetup {
    isac::ReferenceWaveform x0;
    std::optional<isac::ChannelMatrix> H;  // nullopt: identity channel
    isac::ReducedInstance inst;
    int N = 0;
    std::vector<std::string> input_files;  // external files consumed
};

/// Materialize the channel and reference and reduce them, validating shapes.
ProblemSetup build_setup(const ExperimentConfig& cfg);

/// Channel matrix for the given draw index of the configured ensemble.
isac::ChannelMatrix build_channel(const ChannelSpec& spec, int index);

}  // namespace isacpack

#endif
