#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "isac/errors.hpp"
#include "isac/eval.hpp"
#include "isac/signal_model.hpp"
#include "test_helpers.hpp"

using namespace isac;
using test::random_complex_matrix;
using test::random_complex_vector;
using test::random_vector;

TEST_CASE("realify and complexify are inverse") {
    Philox rng(1, 0);
    for (int rep = 0; rep < 20; ++rep) {
        const CVec x = random_complex_vector(5, rng);
        const CVec back = complexify(realify(x));
        CHECK((back - x).norm() == 0.0);
    }
    CHECK_THROWS_AS(complexify(Vec::Ones(3)), InvalidInput);
}

TEST_CASE("realify_channel on scalar channels") {
    CMat H(1, 1);
    H(0, 0) = std::complex<double>(1.0, 0.0);
    Mat B = realify_channel(H);
    CHECK(B.rows() == 2);
    CHECK(B(0, 0) == 1.0);
    CHECK(B(0, 1) == 0.0);
    CHECK(B(1, 0) == 0.0);
    CHECK(B(1, 1) == 1.0);

    H(0, 0) = std::complex<double>(0.0, 1.0);
    B = realify_channel(H);
    CHECK(B(0, 0) == 0.0);
    CHECK(B(0, 1) == -1.0);
    CHECK(B(1, 0) == 1.0);
    CHECK(B(1, 1) == 0.0);
}

TEST_CASE("realification preserves channel norms") {
    Philox rng(2, 0);
    for (int rep = 0; rep < 50; ++rep) {
        const CMat H = random_complex_matrix(2, 3, rng);
        const CVec x = random_complex_vector(3, rng);
        const Mat B = realify_channel(H);
        const double complex_norm = (H * x).norm();
        const double real_norm = (B * realify(x)).norm();
        CHECK(std::abs(complex_norm - real_norm) <= 1e-12 * std::max(1.0, complex_norm));
    }
}

TEST_CASE("realify_channel rejects non-finite entries") {
    CMat H(1, 1);
    H(0, 0) = std::complex<double>(std::nan(""), 0.0);
    CHECK_THROWS_AS(realify_channel(H), InvalidInput);
}

TEST_CASE("reduce of the identity channel is the identity reduction") {
    const int n = 4;
    const CMat H = CMat::Identity(n, n);
    Philox rng(3, 0);
    ReferenceWaveform x0{random_vector(2 * n, rng), WaveformKind::FromFile};
    const ReducedInstance inst = reduce(H, x0, 4, 1.0, 0.3);
    CHECK(inst.N == 2 * n);
    CHECK(inst.sigma.size() == 2 * n);
    CHECK((inst.sigma - Vec::Ones(2 * n)).norm() == 0.0);
    CHECK((inst.V - Mat::Identity(2 * n, 2 * n)).norm() == 0.0);
    CHECK((inst.s0 - x0.x0).norm() == 0.0);
}

TEST_CASE("reduce of a real diagonal channel sorts the gains") {
    CMat H = CMat::Zero(2, 2);
    H(0, 0) = 2.0;
    H(1, 1) = 1.0;
    Philox rng(4, 0);
    ReferenceWaveform x0{random_vector(4, rng), WaveformKind::FromFile};
    const ReducedInstance inst = reduce(H, x0, 2, 1.0, 0.3);
    CHECK(inst.sigma.size() == 4);
    CHECK(inst.sigma(0) == 2.0);
    CHECK(inst.sigma(1) == 2.0);
    CHECK(inst.sigma(2) == 1.0);
    CHECK(inst.sigma(3) == 1.0);

    // distances scale per dimension: compare both routes directly
    const Mat B = realify_channel(H);
    const Vec g = inst.gains();
    for (int rep = 0; rep < 20; ++rep) {
        const Vec a = random_vector(4, rng), b = random_vector(4, rng);
        const double via_channel = (B * (inst.V * a - inst.V * b)).norm();
        const double via_gains = g.cwiseProduct(a - b).norm();
        CHECK(via_channel == doctest::Approx(via_gains).epsilon(1e-10));
    }
}

TEST_CASE("reduce round-trips distances for random wide channels") {
    Philox rng(5, 0);
    const CMat H = random_complex_matrix(8, 32, rng);
    const int N = 64;
    ReferenceWaveform x0{random_vector(N, rng), WaveformKind::FromFile};
    const ReducedInstance inst = reduce(H, x0, 4, 1.0, 0.3);
    CHECK(inst.sigma.size() == 16);
    for (Eigen::Index i = 0; i + 1 < inst.sigma.size(); ++i)
        CHECK(inst.sigma(i) >= inst.sigma(i + 1));
    CHECK((inst.V.transpose() * inst.V - Mat::Identity(N, N)).norm() < 1e-10);

    const Mat B = realify_channel(H);
    const Vec g = inst.gains();
    for (int rep = 0; rep < 20; ++rep) {
        const Vec sk = random_vector(N, rng), sl = random_vector(N, rng);
        const double via_channel = (B * (inst.V * sk - inst.V * sl)).norm();
        const double via_gains = g.cwiseProduct(sk - sl).norm();
        CHECK(via_channel == doctest::Approx(via_gains).epsilon(1e-10));
    }
}

TEST_CASE("reduce rejects mismatched dimensions") {
    const CMat H = CMat::Identity(2, 2);
    ReferenceWaveform x0{Vec::Ones(6), WaveformKind::FromFile};
    CHECK_THROWS_AS(reduce(H, x0, 2, 1.0, 0.1), InvalidInput);
}

TEST_CASE("lfm reference has constant modulus and the expected phases") {
    const auto wf = gen_lfm(64, 1.0);
    const CVec x = complexify(wf.x0);
    REQUIRE(x.size() == 32);
    const double expected = std::sqrt(2.0 / 64.0);
    double lo = 1e300, hi = 0.0;
    for (Eigen::Index n = 0; n < x.size(); ++n) {
        lo = std::min(lo, std::abs(x(n)));
        hi = std::max(hi, std::abs(x(n)));
    }
    CHECK(hi - lo < 1e-14);
    CHECK(std::abs(lo - expected) < 1e-14);

    // first sample has zero phase
    CHECK(x(0).real() > 0.0);
    CHECK(std::abs(x(0).imag()) < 1e-15);

    // N=8: exponent pi*2n(n-1)/8 gives phases {0, pi/2, 3pi/2, pi}
    const CVec x8 = complexify(gen_lfm(8, 1.0).x0);
    const double expected_phase[4] = {0.0, std::numbers::pi / 2, 3 * std::numbers::pi / 2,
                                      std::numbers::pi};
    for (int n = 0; n < 4; ++n) {
        double ph = std::arg(x8(n));
        if (ph < 0) ph += 2 * std::numbers::pi;
        CHECK(ph == doctest::Approx(expected_phase[n]).epsilon(1e-12));
    }

    CHECK_THROWS_AS(gen_lfm(7, 1.0), InvalidInput);
    CHECK_THROWS_AS(gen_lfm(8, 0.0), InvalidInput);
}

TEST_CASE("wide-beam reference meets the ripple and sidelobe targets") {
    const auto wf = gen_widebeam(32, 1.0, -20.0, 20.0);
    CHECK(std::abs(wf.x0.squaredNorm() - 1.0) < 1e-12);

    const CVec x = complexify(wf.x0);
    const auto grid = angle_grid();
    const auto bp = beampattern(x, grid);

    // Sidelobes start one beamwidth (102/n_tx degrees) beyond the lobe edge;
    // the skirt in between belongs to the mainlobe rolloff.
    const double skirt = 102.0 / 32.0;
    double inlobe_min_db = 1e300, inlobe_max_db = -1e300, inlobe_mean = 0.0;
    double sidelobe_peak = -1e300;
    int inlobe_count = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] >= -20.0 && grid[i] <= 20.0) {
            inlobe_min_db = std::min(inlobe_min_db, bp.gain_db[i]);
            inlobe_max_db = std::max(inlobe_max_db, bp.gain_db[i]);
            inlobe_mean += std::pow(10.0, bp.gain_db[i] / 10.0);
            ++inlobe_count;
        } else if (grid[i] < -20.0 - skirt || grid[i] > 20.0 + skirt) {
            sidelobe_peak = std::max(sidelobe_peak, bp.gain_db[i]);
        }
    }
    inlobe_mean /= inlobe_count;
    const double inlobe_mean_db = 10.0 * std::log10(inlobe_mean);
    CHECK(inlobe_max_db - inlobe_min_db < 3.0);
    CHECK(inlobe_mean_db - sidelobe_peak >= 10.0);
}

TEST_CASE("wide-beam degenerate lobe returns any power-P vector") {
    const auto wf = gen_widebeam(2, 2.5, -90.0, 90.0);
    CHECK(std::abs(wf.x0.squaredNorm() - 2.5) < 1e-12);
    CHECK_THROWS_AS(gen_widebeam(1, 1.0, -20.0, 20.0), InvalidInput);
    CHECK_THROWS_AS(gen_widebeam(8, 1.0, 20.0, -20.0), InvalidInput);
}
