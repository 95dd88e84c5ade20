#include "isac/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "isac/errors.hpp"
#include "isac/parallel.hpp"
#include "isac/rng.hpp"

namespace isac {

namespace {

// Fixed stream-id offsets keep the substreams of one seed disjoint.
constexpr std::uint64_t kStreamChannel = 0x10000000ull;
constexpr std::uint64_t kStreamSer = 0x20000000ull;
constexpr std::uint64_t kStreamPdCal = 0x30000000ull;
constexpr std::uint64_t kStreamPd = 0x40000000ull;
constexpr std::uint64_t kStreamCsit = 0x50000000ull;

}  // namespace

ChannelEnsemble gen_rayleigh(int n_r, int n_tx, int count, std::uint64_t seed) {
    if (n_r < 1 || n_tx < 1 || count < 0) throw InvalidInput("gen_rayleigh: bad dimensions");
    ChannelEnsemble e;
    e.seed = seed;
    e.draws.reserve(count);
    const double scale = std::numbers::sqrt2 / 2.0;  // CN(0,1): variance 1/2 per part
    for (int c = 0; c < count; ++c) {
        Philox rng(seed, kStreamChannel + static_cast<std::uint64_t>(c));
        ChannelMatrix H(n_r, n_tx);
        for (int i = 0; i < n_r; ++i)
            for (int j = 0; j < n_tx; ++j)
                H(i, j) = std::complex<double>(scale * rng.gaussian(), scale * rng.gaussian());
        e.draws.push_back(std::move(H));
    }
    return e;
}

CdfResult min_distance_cdf(const ChannelEnsemble& ensemble, const Designer& designer,
                           int n_threads) {
    const int n = static_cast<int>(ensemble.draws.size());
    std::vector<double> raw(n, std::numeric_limits<double>::quiet_NaN());
    parallel_for(n, n_threads, [&](int i) {
        SignalSet set;
        try {
            set = designer(ensemble.draws[static_cast<std::size_t>(i)]);
        } catch (...) {
            return;  // failure recorded as NaN
        }
        const Mat B = realify_channel(ensemble.draws[static_cast<std::size_t>(i)]);
        double dmin = std::numeric_limits<double>::infinity();
        const int M = static_cast<int>(set.signals.size());
        for (int k = 0; k < M; ++k)
            for (int l = k + 1; l < M; ++l)
                dmin = std::min(dmin, (B * (set.signals[k] - set.signals[l])).norm());
        raw[static_cast<std::size_t>(i)] = (M > 1) ? dmin : 0.0;
    });

    CdfResult out;
    for (double v : raw) {
        if (std::isnan(v)) ++out.failed;
        else out.samples.push_back(v);
    }
    std::sort(out.samples.begin(), out.samples.end());
    return out;
}

SerCurve simulate_ser(const SignalSet& signals, const ChannelMatrix& H,
                      const std::vector<double>& snr_grid_db, long trials,
                      std::uint64_t seed, double P, int n_threads) {
    const int M = static_cast<int>(signals.signals.size());
    if (M < 1) throw InvalidInput("simulate_ser: empty signal set");
    if (trials < 1) throw InvalidInput("simulate_ser: trials must be >= 1");

    const Mat B = realify_channel(H);
    std::vector<Vec> rx(M);
    for (int k = 0; k < M; ++k) rx[k] = B * signals.signals[k];
    const int dim = static_cast<int>(B.rows());

    SerCurve curve;
    curve.snr_db = snr_grid_db;
    curve.trials_per_point = trials;
    curve.ser.resize(snr_grid_db.size());
    curve.errors.resize(snr_grid_db.size());

    for (std::size_t p = 0; p < snr_grid_db.size(); ++p) {
        const double snr_lin = std::pow(10.0, snr_grid_db[p] / 10.0);
        const double sigma = std::sqrt(P / (2.0 * snr_lin));
        const std::uint64_t point_base = kStreamSer + p * static_cast<std::uint64_t>(trials);

        const int chunks = std::max(1, n_threads);
        std::vector<long> chunk_errors(chunks, 0);
        const long per_chunk = (trials + chunks - 1) / chunks;
        parallel_for(chunks, n_threads, [&](int c) {
            const long begin = c * per_chunk;
            const long end = std::min(trials, begin + per_chunk);
            long errs = 0;
            Vec y(dim);
            for (long t = begin; t < end; ++t) {
                Philox rng(seed, point_base + static_cast<std::uint64_t>(t));
                const int tx = static_cast<int>(rng.below(static_cast<std::uint64_t>(M)));
                for (int i = 0; i < dim; ++i) y(i) = rx[tx](i) + sigma * rng.gaussian();
                int best = 0;
                double best_d = (y - rx[0]).squaredNorm();
                for (int k = 1; k < M; ++k) {
                    const double dk = (y - rx[k]).squaredNorm();
                    if (dk < best_d) {
                        best_d = dk;
                        best = k;
                    }
                }
                if (best != tx) ++errs;
            }
            chunk_errors[static_cast<std::size_t>(c)] = errs;
        });
        long errors = 0;
        for (long e : chunk_errors) errors += e;
        curve.errors[p] = errors;
        curve.ser[p] = static_cast<double>(errors) / static_cast<double>(trials);
    }
    return curve;
}

std::vector<double> angle_grid(double lo_deg, double hi_deg, double step_deg) {
    if (step_deg <= 0.0 || lo_deg > hi_deg) throw InvalidInput("angle_grid: bad parameters");
    std::vector<double> g;
    for (double t = lo_deg; t <= hi_deg + 1e-9; t += step_deg) g.push_back(t);
    return g;
}

namespace {

Vec linear_pattern(const CVec& x, const std::vector<double>& grid_deg) {
    const int n_tx = static_cast<int>(x.size());
    Vec p(static_cast<Eigen::Index>(grid_deg.size()));
    for (std::size_t i = 0; i < grid_deg.size(); ++i) {
        const std::complex<double> r = steering_vector(n_tx, grid_deg[i]).adjoint() * x;
        p(static_cast<Eigen::Index>(i)) = std::norm(r);
    }
    return p;
}

double to_db(double v) { return 10.0 * std::log10(std::max(v, 1e-300)); }

}  // namespace

BeampatternSample beampattern(const CVec& x, const std::vector<double>& grid_deg,
                              bool normalize_peak) {
    Vec p = linear_pattern(x, grid_deg);
    if (normalize_peak) {
        const double peak = p.maxCoeff();
        if (peak > 0.0) p /= peak;
    }
    BeampatternSample s;
    s.theta_deg = grid_deg;
    s.peak_normalized = normalize_peak;
    s.gain_db.resize(grid_deg.size());
    for (std::size_t i = 0; i < grid_deg.size(); ++i)
        s.gain_db[i] = to_db(p(static_cast<Eigen::Index>(i)));
    return s;
}

BeampatternSample avg_beampattern(const std::vector<CVec>& signals,
                                  const std::vector<double>& grid_deg, bool normalize_peak) {
    if (signals.empty()) throw InvalidInput("avg_beampattern: empty signal set");
    Vec acc = Vec::Zero(static_cast<Eigen::Index>(grid_deg.size()));
    for (const CVec& x : signals) acc += linear_pattern(x, grid_deg);
    acc /= static_cast<double>(signals.size());
    if (normalize_peak) {
        const double peak = acc.maxCoeff();
        if (peak > 0.0) acc /= peak;
    }
    BeampatternSample s;
    s.theta_deg = grid_deg;
    s.peak_normalized = normalize_peak;
    s.gain_db.resize(grid_deg.size());
    for (std::size_t i = 0; i < grid_deg.size(); ++i)
        s.gain_db[i] = to_db(acc(static_cast<Eigen::Index>(i)));
    return s;
}

double beampattern_mse(const std::vector<CVec>& signals, const CVec& x0,
                       const std::vector<double>& grid_deg, double P) {
    if (signals.empty()) throw InvalidInput("beampattern_mse: empty signal set");
    auto scaled = [&](const CVec& x) -> CVec {
        const double n2 = x.squaredNorm();
        return n2 > 0.0 ? CVec(x * std::sqrt(P / n2)) : x;
    };
    Vec acc = Vec::Zero(static_cast<Eigen::Index>(grid_deg.size()));
    for (const CVec& x : signals) acc += linear_pattern(scaled(x), grid_deg);
    acc /= static_cast<double>(signals.size());
    const Vec ref = linear_pattern(scaled(x0), grid_deg);
    const double mse = (acc - ref).squaredNorm() / static_cast<double>(grid_deg.size());
    return std::max(to_db(mse), -100.0);
}

PdCurve detection_probability(const std::vector<CVec>& signals, double lobe_lo_deg,
                              double lobe_hi_deg, const std::vector<double>& snr_grid_db,
                              long mc_trials, double pfa, std::uint64_t seed, double P,
                              int n_threads) {
    if (signals.empty()) throw InvalidInput("detection_probability: empty signal set");
    if (!(lobe_lo_deg < lobe_hi_deg) || lobe_lo_deg < -90.0 || lobe_hi_deg > 90.0)
        throw InvalidInput("detection_probability: bad lobe");
    if (pfa <= 0.0 || pfa >= 1.0) throw InvalidInput("detection_probability: pfa must be in (0,1)");

    // Calibrate the normalized energy threshold on noise-only statistics:
    // |n|^2 / sigma^2 is Exp(1); take the (1 - pfa) empirical quantile.
    const long cal_trials = 100000;
    std::vector<double> noise(cal_trials);
    for (long t = 0; t < cal_trials; ++t) {
        Philox rng(seed, kStreamPdCal + static_cast<std::uint64_t>(t));
        const double re = rng.gaussian() * std::numbers::sqrt2 / 2.0;
        const double im = rng.gaussian() * std::numbers::sqrt2 / 2.0;
        noise[static_cast<std::size_t>(t)] = re * re + im * im;
    }
    std::sort(noise.begin(), noise.end());
    const auto q_idx = static_cast<std::size_t>(std::min<double>(
        cal_trials - 1.0, std::ceil((1.0 - pfa) * cal_trials) - 1.0));
    const double threshold_factor = noise[q_idx];

    const int M = static_cast<int>(signals.size());
    PdCurve curve;
    curve.snr_db = snr_grid_db;
    curve.threshold_factor = threshold_factor;
    curve.pd.resize(snr_grid_db.size());

    for (std::size_t p = 0; p < snr_grid_db.size(); ++p) {
        const double snr_lin = std::pow(10.0, snr_grid_db[p] / 10.0);
        const double sigma2 = P / snr_lin;
        const double sigma_part = std::sqrt(sigma2 / 2.0);
        const double threshold = threshold_factor * sigma2;
        const std::uint64_t point_base = kStreamPd + p * static_cast<std::uint64_t>(mc_trials);

        const int chunks = std::max(1, n_threads);
        std::vector<long> hits(chunks, 0);
        const long per_chunk = (mc_trials + chunks - 1) / chunks;
        parallel_for(chunks, n_threads, [&](int c) {
            const long begin = c * per_chunk;
            const long end = std::min(mc_trials, begin + per_chunk);
            long h = 0;
            for (long t = begin; t < end; ++t) {
                Philox rng(seed, point_base + static_cast<std::uint64_t>(t));
                const double theta = rng.uniform(lobe_lo_deg, lobe_hi_deg);
                const int tx = static_cast<int>(rng.below(static_cast<std::uint64_t>(M)));
                const std::complex<double> echo =
                    steering_vector(static_cast<int>(signals[tx].size()), theta).adjoint() *
                    signals[static_cast<std::size_t>(tx)];
                const std::complex<double> r =
                    echo + std::complex<double>(sigma_part * rng.gaussian(), sigma_part * rng.gaussian());
                if (std::norm(r) > threshold) ++h;
            }
            hits[static_cast<std::size_t>(c)] = h;
        });
        long total = 0;
        for (long h : hits) total += h;
        curve.pd[p] = static_cast<double>(total) / static_cast<double>(mc_trials);
    }
    return curve;
}

Vec waveform_similarity(const std::vector<Vec>& signals, const Vec& x0) {
    Vec sim(static_cast<Eigen::Index>(signals.size()));
    for (std::size_t k = 0; k < signals.size(); ++k) {
        if (signals[k].size() != x0.size())
            throw InvalidInput("waveform_similarity: dimension mismatch");
        sim(static_cast<Eigen::Index>(k)) = (signals[k] - x0).norm();
    }
    return sim;
}

ChannelMatrix perturb_csit(const ChannelMatrix& H, double eta, double sigma_n2,
                           std::uint64_t seed) {
    if (eta < 0.0 || sigma_n2 < 0.0) throw InvalidInput("perturb_csit: eta and sigma_n2 must be >= 0");
    if (eta == 0.0 || sigma_n2 == 0.0) return H;
    const double part = std::sqrt(eta * sigma_n2 / 2.0);
    ChannelMatrix out = H;
    Philox rng(seed, kStreamCsit);
    for (Eigen::Index i = 0; i < out.rows(); ++i)
        for (Eigen::Index j = 0; j < out.cols(); ++j)
            out(i, j) += std::complex<double>(part * rng.gaussian(), part * rng.gaussian());
    return out;
}

AmbiguityGrid ambiguity(const CVec& x) {
    const int L = static_cast<int>(x.size());
    if (L < 2) throw InvalidInput("ambiguity: need at least 2 samples");

    AmbiguityGrid grid;
    for (int tau = -(L - 1); tau <= L - 1; ++tau) grid.delays.push_back(tau);
    // L-point Doppler grid inside [-1/2, 1/2), always containing nu = 0.
    for (int i = 0; i < L; ++i) grid.doppler.push_back(static_cast<double>(i - L / 2) / L);
    grid.mag = Mat::Zero(static_cast<Eigen::Index>(grid.delays.size()), L);

    for (std::size_t ti = 0; ti < grid.delays.size(); ++ti) {
        const int tau = grid.delays[ti];
        for (int di = 0; di < L; ++di) {
            const double nu = grid.doppler[static_cast<std::size_t>(di)];
            std::complex<double> acc = 0.0;
            for (int n = 0; n < L; ++n) {
                const int ns = n + tau;
                if (ns < 0 || ns >= L) continue;  // zero padding outside the sequence
                const double ang = 2.0 * std::numbers::pi * nu * n;
                acc += x(n) * std::conj(x(ns)) * std::polar(1.0, ang);
            }
            grid.mag(static_cast<Eigen::Index>(ti), di) = std::abs(acc);
        }
    }
    const double peak = grid.mag.maxCoeff();
    if (peak > 0.0) grid.mag /= peak;
    return grid;
}

}  // namespace isac
