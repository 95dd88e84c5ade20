#ifndef ISAC_EVAL_HPP
#define ISAC_EVAL_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "isac/signal_model.hpp"

namespace isac {

enum class ChannelModel { RayleighIID };

struct ChannelEnsemble {
    std::vector<ChannelMatrix> draws;
    std::uint64_t seed = 0;
    ChannelModel model = ChannelModel::RayleighIID;
};

/// count i.i.d. CN(0,1)-entry channels, reproducible from the seed.
ChannelEnsemble gen_rayleigh(int n_r, int n_tx, int count, std::uint64_t seed);

/// Designs a signal set for one channel draw.
using Designer = std::function<SignalSet(const ChannelMatrix&)>;

struct CdfResult {
    std::vector<double> samples;  // sorted min received distances, one per channel
    int failed = 0;               // designer failures excluded from the samples
};

/// Min noise-free received distance min_{k!=l} ||B(x_k - x_l)|| per channel.
CdfResult min_distance_cdf(const ChannelEnsemble& ensemble, const Designer& designer,
                           int n_threads = 1);

struct SerCurve {
    std::vector<double> snr_db;
    std::vector<double> ser;
    std::vector<long> errors;
    long trials_per_point = 0;
};

/**
 * Monte-Carlo symbol error rate with minimum-distance (ML) detection over
 * the known codebook. Noise is real Gaussian per receive component with
 * variance P / (2 * 10^(SNR/10)), i.e. SNR is the ratio of signal power to
 * complex noise power per receive dimension.
 */
SerCurve simulate_ser(const SignalSet& signals, const ChannelMatrix& H,
                      const std::vector<double>& snr_grid_db, long trials,
                      std::uint64_t seed, double P = 1.0, int n_threads = 1);

struct BeampatternSample {
    std::vector<double> theta_deg;
    std::vector<double> gain_db;
    bool peak_normalized = false;
};

/// |a(theta)^H x|^2 over the angle grid, in dB.
BeampatternSample beampattern(const CVec& x, const std::vector<double>& grid_deg,
                              bool normalize_peak = false);
/// Mean linear-power pattern over a signal set (equal transmission rates).
BeampatternSample avg_beampattern(const std::vector<CVec>& signals,
                                  const std::vector<double>& grid_deg,
                                  bool normalize_peak = false);

/// Uniform angle grid helper, inclusive of both ends.
std::vector<double> angle_grid(double lo_deg = -90.0, double hi_deg = 90.0, double step_deg = 0.5);

/**
 * Mean squared deviation between the set-average beampattern and the
 * reference pattern, both rescaled to total power P, reported in dB
 * (floored at -100 dB).
 */
double beampattern_mse(const std::vector<CVec>& signals, const CVec& x0,
                       const std::vector<double>& grid_deg, double P = 1.0);

struct PdCurve {
    std::vector<double> snr_db;
    std::vector<double> pd;
    double threshold_factor = 0.0;  // calibrated |r|^2 / sigma^2 decision level
};

/**
 * Energy-detection probability for a far-field target uniform in the lobe:
 * per trial the echo a(theta)^H x of a uniformly chosen symbol plus complex
 * Gaussian noise is tested against a noise-only threshold calibrated by
 * Monte Carlo for the requested false-alarm rate.
 */
PdCurve detection_probability(const std::vector<CVec>& signals, double lobe_lo_deg,
                              double lobe_hi_deg, const std::vector<double>& snr_grid_db,
                              long mc_trials, double pfa, std::uint64_t seed,
                              double P = 1.0, int n_threads = 1);

/// Per-signal ||x_k - x0||.
Vec waveform_similarity(const std::vector<Vec>& signals, const Vec& x0);

/// Imperfect-CSIT model: H + E with E entries CN(0, eta * sigma_n2).
ChannelMatrix perturb_csit(const ChannelMatrix& H, double eta, double sigma_n2,
                           std::uint64_t seed);

struct AmbiguityGrid {
    std::vector<int> delays;      // -L+1 .. L-1
    std::vector<double> doppler;  // L-point grid on [-1/2, 1/2) cycles/sample
    Mat mag;                      // |AF|, delays x doppler, peak normalized to 1
};

/// Discrete delay-Doppler ambiguity magnitude of a complex time sequence,
/// zero-padded outside the sequence and normalized so AF(0,0) = 1.
AmbiguityGrid ambiguity(const CVec& x);

}  // namespace isac

#endif
