#ifndef ISAC_SIGNAL_MODEL_HPP
#define ISAC_SIGNAL_MODEL_HPP

#include <Eigen/Dense>
#include <vector>

namespace isac {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

/// Complex channel, receive degrees of freedom x N/2 transmit symbols.
using ChannelMatrix = CMat;
/// Real 2Nr x N image of a complex channel, [Re -Im; Im Re].
using RealifiedChannel = Mat;

/// [Re(x); Im(x)] stacking. N = 2 * complex length.
Vec realify(const CVec& x);
/// Inverse of realify; requires even length.
CVec complexify(const Vec& x);

/// Real block image of H so that realify(H*x) = B * realify(x).
RealifiedChannel realify_channel(const ChannelMatrix& H);

enum class WaveformKind { Lfm, WideBeam, FromFile };

/// Reference sensing waveform in realified coordinates.
struct ReferenceWaveform {
    Vec x0;
    WaveformKind kind = WaveformKind::FromFile;
};

/**
 * Canonical diagonalized problem data: after realifying the channel and
 * rotating by the right singular basis V, weighted distances become
 * ||diag(sigma,0..) (s_k - s_l)||. Signals map back as x = V s.
 */
struct ReducedInstance {
    int M = 0;        // signal set size
    int N = 0;        // real dimension
    double P = 0.0;   // average power budget
    double eps = 0.0; // similarity tolerance
    Vec sigma;        // min(2Nr, N) singular values, descending
    Mat V;            // N x N orthogonal
    Vec s0;           // rotated reference, V^T x0

    /// Per-dimension channel gains of length N (sigma zero-padded).
    Vec gains() const;
};

/// A designed signal set in the original x-domain with its achieved metrics.
struct SignalSet {
    std::vector<Vec> signals;   // M vectors of length N
    double min_distance = 0.0;  // channel-weighted min pairwise distance
    Vec similarity;             // per-signal ||x_k - x0||
    double avg_power = 0.0;     // (1/M) sum ||x_k||^2
};

/**
 * Build the diagonalized instance from a channel and reference waveform.
 * Exactly diagonal B (e.g. identity channels) short-circuits the SVD so the
 * rotation comes out as a signed permutation and identity maps to identity.
 * Singular values below 1e-12 * sigma_max are clamped to zero.
 */
ReducedInstance reduce(const ChannelMatrix& H, const ReferenceWaveform& x0,
                       int M, double P, double eps);

/// Same reduction for an already-realified (or synthetic) real channel matrix.
ReducedInstance reduce_real(const RealifiedChannel& B, const Vec& x0,
                            int M, double P, double eps);

/**
 * Chirp reference: x0(n) = sqrt(2P/N) exp(j pi 2n(n-1)/N), n = 1..N/2,
 * returned realified. Constant modulus sqrt(2P/N) per complex sample.
 */
ReferenceWaveform gen_lfm(int N, double P);

/// Half-wavelength ULA steering vector, phase reference at element 0.
CVec steering_vector(int n_tx, double theta_deg);

/**
 * Wide-beam spatial reference for an n_tx-element half-wavelength ULA:
 * magnitude least squares toward a flat response on [lobe_lo, lobe_hi]
 * degrees, alternating a phase-locked linear fit with renormalization to
 * power P for a fixed 200 iterations.
 */
ReferenceWaveform gen_widebeam(int n_tx, double P, double lobe_lo_deg,
                               double lobe_hi_deg, double grid_step_deg = 0.5);

}  // namespace isac

#endif
