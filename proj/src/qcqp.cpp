#include "isac/qcqp.hpp"

#include <cmath>

#include "isac/errors.hpp"

namespace isac {

QcqpInstance::QcqpInstance(const ReducedInstance& reduced, double d_target)
    : inst(reduced), d(d_target) {
    if (d < 0.0) throw InvalidInput("QcqpInstance: d must be >= 0");
    if (inst.eps < 0.0) throw InvalidInput("QcqpInstance: eps must be >= 0");
    const Vec g = inst.gains();
    gains_sq = g.cwiseProduct(g);
}

StackedVector QcqpInstance::z0() const {
    StackedVector z(M() * N());
    for (int k = 0; k < M(); ++k) z.segment(k * N(), N()) = inst.s0;
    return z;
}

DualState DualState::init(int M, double lambda0, double v0, double mu0) {
    DualState d;
    d.lambda = Vec::Constant(M * (M - 1), lambda0);
    d.v = Vec::Constant(M, v0);
    d.mu = mu0;
    return d;
}

namespace {
void check_pair(const QcqpInstance& q, int k, int l) {
    if (k < 0 || l < 0 || k >= q.M() || l >= q.M() || k == l)
        throw InvalidInput("pair index out of range");
}
}  // namespace

double pair_quadratic(const QcqpInstance& q, const StackedVector& z, int k, int l) {
    check_pair(q, k, l);
    const auto sk = q.block(z, k);
    const auto sl = q.block(z, l);
    double acc = 0.0;
    for (int i = 0; i < q.N(); ++i) {
        const double di = sk(i) - sl(i);
        acc += q.gains_sq(i) * di * di;
    }
    return acc;
}

StackedVector pair_quadratic_grad(const QcqpInstance& q, const StackedVector& z, int k, int l) {
    check_pair(q, k, l);
    StackedVector g = StackedVector::Zero(z.size());
    const Vec d = 2.0 * q.gains_sq.cwiseProduct(q.block(z, k) - q.block(z, l));
    g.segment(k * q.N(), q.N()) = d;
    g.segment(l * q.N(), q.N()) = -d;
    return g;
}

double similarity_residual(const QcqpInstance& q, const StackedVector& z, int k) {
    if (k < 0 || k >= q.M()) throw InvalidInput("similarity index out of range");
    return (q.block(z, k) - q.inst.s0).squaredNorm() - q.inst.eps * q.inst.eps;
}

double phi(double a, double b, double c) {
    if (a >= -b / c) return b * a + 0.5 * c * a * a;
    return -0.5 * b * b / c;
}

double phi_prime(double a, double b, double c) {
    if (a >= -b / c) return b + c * a;
    return 0.0;
}

double lagrangian(const QcqpInstance& q, const StackedVector& z, const DualState& duals) {
    const int M = q.M();
    double L = z.squaredNorm();
    for (int l = 0; l < M; ++l)
        for (int k = 0; k < M; ++k) {
            if (k == l) continue;
            const double a = q.d - pair_quadratic(q, z, k, l);
            L += phi(a, duals.lambda(pair_index(M, l, k)), duals.mu);
        }
    for (int k = 0; k < M; ++k)
        L += phi(similarity_residual(q, z, k), duals.v(k), duals.mu);
    return L;
}

void lagrangian_grad(const QcqpInstance& q, const StackedVector& z, const DualState& duals,
                     StackedVector& grad) {
    const int M = q.M(), N = q.N();
    grad = 2.0 * z;
    for (int l = 0; l < M; ++l)
        for (int k = 0; k < M; ++k) {
            if (k == l) continue;
            const double a = q.d - pair_quadratic(q, z, k, l);
            const double w = phi_prime(a, duals.lambda(pair_index(M, l, k)), duals.mu);
            if (w == 0.0) continue;
            // grad of a is minus the pair-quadratic gradient
            const Vec dq = 2.0 * q.gains_sq.cwiseProduct(q.block(z, k) - q.block(z, l));
            grad.segment(k * N, N) -= w * dq;
            grad.segment(l * N, N) += w * dq;
        }
    for (int k = 0; k < M; ++k) {
        const double a = similarity_residual(q, z, k);
        const double w = phi_prime(a, duals.v(k), duals.mu);
        if (w == 0.0) continue;
        grad.segment(k * N, N) += w * 2.0 * (q.block(z, k) - q.inst.s0);
    }
}

StackedVector lagrangian_grad(const QcqpInstance& q, const StackedVector& z, const DualState& duals) {
    StackedVector g;
    lagrangian_grad(q, z, duals, g);
    return g;
}

double slack_r(const QcqpInstance& q, const StackedVector& z, const DualState& duals, int k, int l) {
    const double x = pair_quadratic(q, z, k, l) - q.d - duals.lambda(pair_index(q.M(), l, k)) / duals.mu;
    return x > 0.0 ? x : 0.0;
}

double slack_t(const QcqpInstance& q, const StackedVector& z, const DualState& duals, int k) {
    const double x = -similarity_residual(q, z, k) - duals.v(k) / duals.mu;
    return x > 0.0 ? x : 0.0;
}

double max_violation(const QcqpInstance& q, const StackedVector& z) {
    double worst = 0.0;
    for (int k = 0; k < q.M(); ++k) {
        for (int l = k + 1; l < q.M(); ++l)
            worst = std::max(worst, q.d - pair_quadratic(q, z, k, l));
        worst = std::max(worst, similarity_residual(q, z, k));
    }
    return worst;
}

}  // namespace isac
