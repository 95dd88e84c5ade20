#ifndef ISAC_QCQP_HPP
#define ISAC_QCQP_HPP

#include "isac/signal_model.hpp"

namespace isac {

/// Stacked primal vector: M contiguous blocks s_1..s_M of length N.
using StackedVector = Vec;

/**
 * One distance-target instance of the stacked QCQP: minimize z'z subject to
 * z'Q_kl z >= d for all ordered pairs and ||s_k - s0||^2 <= eps^2 per signal.
 * The pair matrices Q_kl are never materialized; every evaluation runs on the
 * per-dimension gains, which is exact because Q_kl only has support on the
 * (k,k), (k,l), (l,k), (l,l) blocks and Lambda'Lambda is diagonal.
 */
struct QcqpInstance {
    ReducedInstance inst;
    double d = 0.0;  // target minimum squared distance
    Vec gains_sq;    // diag of Lambda'Lambda, length N (sigma^2 zero-padded)

    QcqpInstance() = default;
    QcqpInstance(const ReducedInstance& reduced, double d_target);

    int M() const { return inst.M; }
    int N() const { return inst.N; }
    /// Stacked reference z0: M copies of s0.
    StackedVector z0() const;

    auto block(const StackedVector& z, int k) const { return z.segment(k * N(), N()); }
};

/// Multipliers for the ordered-pair distance constraints and the similarity
/// constraints, plus the shared penalty weight.
struct DualState {
    Vec lambda;      // M(M-1) entries, ordered pairs (l,k), l != k
    Vec v;           // M entries
    double mu = 0.0; // penalty, > 0

    static DualState init(int M, double lambda0, double v0, double mu0);
};

/// Flat index of the ordered pair (l,k), l != k, 0-based.
inline int pair_index(int M, int l, int k) { return l * (M - 1) + (k < l ? k : k - 1); }

/// z'Q_kl z evaluated in block form as ||Lambda(s_k - s_l)||^2.
double pair_quadratic(const QcqpInstance& q, const StackedVector& z, int k, int l);

/// Gradient of z'Q_kl z; nonzero only on blocks k and l.
StackedVector pair_quadratic_grad(const QcqpInstance& q, const StackedVector& z, int k, int l);

/// ||s_k - s0||^2 - eps^2.
double similarity_residual(const QcqpInstance& q, const StackedVector& z, int k);

/**
 * Piecewise penalty kernel of the slack-eliminated augmented Lagrangian:
 * phi(a,b,c) = b a + (c/2) a^2 when a >= -b/c, else -b^2/(2c).
 * Continuously differentiable; the two branches meet with matching value
 * and zero slope at a = -b/c.
 */
double phi(double a, double b, double c);
/// d/da of phi.
double phi_prime(double a, double b, double c);

/// Slack-eliminated augmented Lagrangian L(z; lambda, v, mu).
double lagrangian(const QcqpInstance& q, const StackedVector& z, const DualState& duals);

/// Analytic gradient of the Lagrangian; inactive branches contribute zero.
void lagrangian_grad(const QcqpInstance& q, const StackedVector& z, const DualState& duals,
                     StackedVector& grad);
StackedVector lagrangian_grad(const QcqpInstance& q, const StackedVector& z, const DualState& duals);

/// Closed-form optimal slack for the distance constraint (l,k):
/// r = [z'Q_kl z - d - lambda/mu]+.
double slack_r(const QcqpInstance& q, const StackedVector& z, const DualState& duals, int k, int l);

/// Closed-form optimal slack for the similarity constraint k:
/// t = [-||s_k - s0||^2 + eps^2 - v/mu]+.
double slack_t(const QcqpInstance& q, const StackedVector& z, const DualState& duals, int k);

/// Largest clamped constraint violation: max over pairs of [d - z'Q z]+ and
/// over signals of [||s_k-s0||^2 - eps^2]+.
double max_violation(const QcqpInstance& q, const StackedVector& z);

}  // namespace isac

#endif
