#include "isac/signal_model.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "isac/errors.hpp"

namespace isac {

Vec realify(const CVec& x) {
    const Eigen::Index n = x.size();
    Vec r(2 * n);
    r.head(n) = x.real();
    r.tail(n) = x.imag();
    return r;
}

CVec complexify(const Vec& x) {
    if (x.size() % 2 != 0) throw InvalidInput("complexify: odd real dimension");
    const Eigen::Index n = x.size() / 2;
    CVec c(n);
    c.real() = x.head(n);
    c.imag() = x.tail(n);
    return c;
}

RealifiedChannel realify_channel(const ChannelMatrix& H) {
    if (!H.allFinite()) throw InvalidInput("realify_channel: non-finite entries");
    const Eigen::Index nr = H.rows(), nc = H.cols();
    Mat B(2 * nr, 2 * nc);
    B.topLeftCorner(nr, nc) = H.real();
    B.topRightCorner(nr, nc) = -H.imag();
    B.bottomLeftCorner(nr, nc) = H.imag();
    B.bottomRightCorner(nr, nc) = H.real();
    return B;
}

Vec ReducedInstance::gains() const {
    Vec g = Vec::Zero(N);
    g.head(sigma.size()) = sigma;
    return g;
}

namespace {

bool is_exactly_diagonal(const Mat& B) {
    if (B.rows() != B.cols()) return false;
    for (Eigen::Index i = 0; i < B.rows(); ++i)
        for (Eigen::Index j = 0; j < B.cols(); ++j)
            if (i != j && B(i, j) != 0.0) return false;
    return true;
}

}  // namespace

ReducedInstance reduce_real(const RealifiedChannel& B, const Vec& x0,
                            int M, double P, double eps) {
    if (!B.allFinite()) throw InvalidInput("reduce: non-finite channel");
    if (x0.size() != B.cols()) throw InvalidInput("reduce: reference length must equal channel columns");
    if (M < 1) throw InvalidInput("reduce: M must be >= 1");
    if (P < 0.0 || eps < 0.0) throw InvalidInput("reduce: P and eps must be nonnegative");

    const int N = static_cast<int>(B.cols());
    const int rank_dim = static_cast<int>(std::min(B.rows(), B.cols()));

    ReducedInstance inst;
    inst.M = M;
    inst.N = N;
    inst.P = P;
    inst.eps = eps;

    if (is_exactly_diagonal(B)) {
        // Stable descending sort of |diagonal|; V is the matching signed
        // permutation, so an identity channel reduces to the identity.
        std::vector<int> order(N);
        for (int i = 0; i < N; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return std::abs(B(a, a)) > std::abs(B(b, b));
        });
        inst.sigma = Vec(N);
        inst.V = Mat::Zero(N, N);
        for (int i = 0; i < N; ++i) {
            const double v = B(order[i], order[i]);
            inst.sigma(i) = std::abs(v);
            inst.V(order[i], i) = (v < 0.0) ? -1.0 : 1.0;
        }
    } else {
        Eigen::BDCSVD<Mat> svd(B, Eigen::ComputeFullV);
        inst.sigma = svd.singularValues().head(rank_dim);
        inst.V = svd.matrixV();
    }

    if (inst.sigma.size() > 0) {
        const double clamp = 1e-12 * inst.sigma(0);
        for (Eigen::Index i = 0; i < inst.sigma.size(); ++i)
            if (inst.sigma(i) < clamp) inst.sigma(i) = 0.0;
    }
    inst.s0 = inst.V.transpose() * x0;
    return inst;
}

ReducedInstance reduce(const ChannelMatrix& H, const ReferenceWaveform& x0,
                       int M, double P, double eps) {
    if (x0.x0.size() != 2 * H.cols())
        throw InvalidInput("reduce: reference length must be twice the channel columns");
    return reduce_real(realify_channel(H), x0.x0, M, P, eps);
}

ReferenceWaveform gen_lfm(int N, double P) {
    if (N < 2 || N % 2 != 0) throw InvalidInput("gen_lfm: N must be even and >= 2");
    if (P <= 0.0) throw InvalidInput("gen_lfm: P must be positive");
    const int L = N / 2;
    const double amp = std::sqrt(2.0 * P / N);
    CVec x(L);
    for (int n = 1; n <= L; ++n) {
        const double phase = std::numbers::pi * 2.0 * n * (n - 1) / N;
        x(n - 1) = std::polar(amp, phase);
    }
    return ReferenceWaveform{realify(x), WaveformKind::Lfm};
}

CVec steering_vector(int n_tx, double theta_deg) {
    const double s = std::sin(theta_deg * std::numbers::pi / 180.0);
    CVec a(n_tx);
    for (int n = 0; n < n_tx; ++n)
        a(n) = std::polar(1.0, std::numbers::pi * n * s);
    return a;
}

ReferenceWaveform gen_widebeam(int n_tx, double P, double lobe_lo_deg,
                               double lobe_hi_deg, double grid_step_deg) {
    if (n_tx < 2) throw InvalidInput("gen_widebeam: n_tx must be >= 2");
    if (P <= 0.0) throw InvalidInput("gen_widebeam: P must be positive");
    if (!(lobe_lo_deg < lobe_hi_deg)) throw InvalidInput("gen_widebeam: empty main lobe");
    if (grid_step_deg <= 0.0 || lobe_lo_deg < -90.0 || lobe_hi_deg > 90.0)
        throw InvalidInput("gen_widebeam: infeasible angle grid");

    // One-beamwidth transition band outside the lobe is left out of the fit;
    // an aperture this size cannot fall off a cliff at the lobe edge.
    const double transition = 102.0 / n_tx;

    std::vector<double> grid;
    for (double t = -90.0; t <= 90.0 + 1e-9; t += grid_step_deg) grid.push_back(t);

    std::vector<double> fit_angles;
    std::vector<double> fit_target;
    for (double t : grid) {
        const bool in_lobe = t >= lobe_lo_deg && t <= lobe_hi_deg;
        const bool in_transition = !in_lobe && t >= lobe_lo_deg - transition && t <= lobe_hi_deg + transition;
        if (in_transition) continue;
        fit_angles.push_back(t);
        fit_target.push_back(in_lobe ? 1.0 : 0.0);
    }
    const int G = static_cast<int>(fit_angles.size());
    if (G < n_tx) throw InvalidInput("gen_widebeam: infeasible angle grid");

    CMat A(G, n_tx);
    for (int g = 0; g < G; ++g) A.row(g) = steering_vector(n_tx, fit_angles[g]).adjoint();

    // Start from the lobe-average steering direction; deterministic.
    CVec x = CVec::Zero(n_tx);
    for (int g = 0; g < G; ++g)
        if (fit_target[g] > 0.0) x += steering_vector(n_tx, fit_angles[g]);
    if (x.norm() == 0.0) x = CVec::Ones(n_tx);
    x *= std::sqrt(P) / x.norm();

    Eigen::LDLT<CMat> gram(A.adjoint() * A);
    for (int it = 0; it < 200; ++it) {
        CVec resp = A * x;
        CVec rhs(G);
        for (int g = 0; g < G; ++g) {
            const double mag = std::abs(resp(g));
            const std::complex<double> ph = mag > 0.0 ? resp(g) / mag : std::complex<double>(1.0, 0.0);
            rhs(g) = fit_target[g] * ph;
        }
        x = gram.solve(A.adjoint() * rhs);
        if (x.norm() == 0.0) x = CVec::Ones(n_tx);
        x *= std::sqrt(P) / x.norm();
    }
    return ReferenceWaveform{realify(x), WaveformKind::WideBeam};
}

}  // namespace isac
