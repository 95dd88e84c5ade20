#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "isac/bdps.hpp"
#include "isac/errors.hpp"
#include "test_helpers.hpp"

using namespace isac;
using test::random_vector;

namespace {

ReducedInstance make_instance(int M, int N, const Vec& sigma, const Vec& s0, double P, double eps) {
    ReducedInstance inst;
    inst.M = M;
    inst.N = N;
    inst.P = P;
    inst.eps = eps;
    inst.sigma = sigma;
    inst.V = Mat::Identity(N, N);
    inst.s0 = s0;
    return inst;
}

SplitPlan two_even_groups(const ReducedInstance& inst) {
    SplitPlan plan;
    plan.groups.resize(2);
    for (int d = 0; d < inst.N; ++d) plan.groups[d % 2].dims.push_back(d);
    for (int g = 0; g < 2; ++g) {
        plan.groups[g].bits = 1;
        plan.groups[g].power = inst.P / 2;
        plan.groups[g].eps = inst.eps / std::sqrt(2.0);
    }
    return plan;
}

}  // namespace

TEST_CASE("plan validation catches broken partitions and budgets") {
    Philox rng(41, 0);
    ReducedInstance inst = make_instance(4, 4, Vec::Ones(4), random_vector(4, rng), 2.0, 0.5);

    SplitPlan plan = two_even_groups(inst);
    CHECK_NOTHROW(plan.validate(inst));

    SplitPlan missing = plan;
    missing.groups[0].dims.pop_back();
    CHECK_THROWS_AS(missing.validate(inst), InvalidInput);

    SplitPlan doubled = plan;
    doubled.groups[0].dims.push_back(doubled.groups[1].dims[0]);
    CHECK_THROWS_AS(doubled.validate(inst), InvalidInput);

    SplitPlan wrong_bits = plan;
    wrong_bits.groups[0].bits = 2;
    CHECK_THROWS_AS(wrong_bits.validate(inst), InvalidInput);

    SplitPlan over_power = plan;
    over_power.groups[0].power = inst.P;
    CHECK_THROWS_AS(over_power.validate(inst), InvalidInput);

    SplitPlan bad_eps = plan;
    bad_eps.groups[0].eps = inst.eps;
    CHECK_THROWS_AS(bad_eps.validate(inst), InvalidInput);
}

TEST_CASE("single group split equals the plain solve") {
    Philox rng(42, 0);
    Vec sigma(4);
    sigma << 1.8, 1.2, 0.9, 0.4;
    Vec s0 = random_vector(4, rng);
    ReducedInstance inst = make_instance(4, 4, sigma, s0, std::pow(s0.norm() + 0.4, 2), 0.4);

    SplitPlan plan;
    plan.groups.resize(1);
    for (int d = 0; d < 4; ++d) plan.groups[0].dims.push_back(d);
    plan.groups[0].bits = 2;
    plan.groups[0].power = inst.P;
    plan.groups[0].eps = inst.eps;

    const SplitResult split = solve_split(inst, plan, AldaConfig{});
    const MaxminResult direct = solve_maxmin(inst, AldaConfig{});
    CHECK(split.d_combined == doctest::Approx(direct.design.d_achieved).epsilon(1e-10));
    CHECK(split.d_true == doctest::Approx(direct.design.d_achieved).epsilon(1e-10));
    CHECK(split.signals.signals.size() == 4);
}

TEST_CASE("two orthogonal groups form a product code") {
    // identity gains, reference at zero, generous power: each 1-bit group
    // solves an antipodal pair, the product set has 4 signals
    ReducedInstance inst = make_instance(4, 4, Vec::Ones(4), Vec::Zero(4), 8.0, 0.5);
    SplitPlan plan = two_even_groups(inst);

    const SplitResult res = solve_split(inst, plan, AldaConfig{});
    REQUIRE(res.per_group.size() == 2);
    const double d1 = res.per_group[0].d_achieved;
    const double d2 = res.per_group[1].d_achieved;

    CHECK(res.d_combined == doctest::Approx(std::sqrt(d1 * d1 + d2 * d2)).epsilon(1e-12));
    REQUIRE(res.signals.signals.size() == 4);

    // enumerate all 6 pairwise distances of the assembled product set
    const Vec g = inst.gains();
    double dmin = 1e300;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            dmin = std::min(dmin, g.cwiseProduct(res.s_signals[i] - res.s_signals[j]).norm());
    CHECK(res.d_true == doctest::Approx(dmin).epsilon(1e-12));
    CHECK(res.d_true == doctest::Approx(std::min(d1, d2)).epsilon(1e-10));
    CHECK(res.d_true <= res.d_combined + 1e-12);

    // per-group power audit
    double total = 0.0;
    for (int gi = 0; gi < 2; ++gi) {
        double used = 0.0;
        for (const auto& s : res.per_group[gi].s_signals) used += s.squaredNorm();
        total += used / static_cast<double>(res.per_group[gi].s_signals.size());
    }
    CHECK(total <= inst.P + 1e-6);
}

TEST_CASE("zero-bit groups pin the reference restriction") {
    Philox rng(43, 0);
    Vec s0 = random_vector(4, rng);
    ReducedInstance inst = make_instance(2, 4, Vec::Ones(4), s0, std::pow(s0.norm() + 0.4, 2), 0.4);

    SplitPlan plan;
    plan.groups.resize(2);
    plan.groups[0].dims = {0, 1};
    plan.groups[1].dims = {2, 3};
    plan.groups[0].bits = 1;
    plan.groups[1].bits = 0;
    const double v1 = s0(2) * s0(2) + s0(3) * s0(3);
    plan.groups[1].power = v1;
    plan.groups[0].power = inst.P - v1;
    plan.groups[0].eps = inst.eps;
    plan.groups[1].eps = 0.0;

    const SplitResult res = solve_split(inst, plan, AldaConfig{});
    CHECK(res.per_group[1].d_achieved == 0.0);
    CHECK(res.per_group[1].s_signals.size() == 1);
    CHECK(res.per_group[1].similarity(0) == 0.0);
    // both product signals carry s0 exactly on the pinned dimensions
    for (const auto& s : res.s_signals) {
        CHECK(s(2) == s0(2));
        CHECK(s(3) == s0(3));
    }
}

TEST_CASE("split propagates subproblem infeasibility with the group index") {
    ReducedInstance inst = make_instance(2, 2, Vec::Ones(2), Vec::Ones(2), 0.1, 0.2);
    // power floor of the 1-bit group is (||v|| - eps)^2 = (1 - 0.2)^2 = 0.64 > 0.05
    SplitPlan plan;
    plan.groups.resize(2);
    plan.groups[0].dims = {0};
    plan.groups[1].dims = {1};
    plan.groups[0].bits = 1;
    plan.groups[1].bits = 0;
    plan.groups[0].power = 0.049;
    plan.groups[1].power = 0.05;
    plan.groups[0].eps = 0.2;
    plan.groups[1].eps = 0.0;
    try {
        solve_split(inst, plan, AldaConfig{});
        FAIL("expected InfeasibleDetected");
    } catch (const InfeasibleDetected& e) {
        CHECK(e.group == 0);
    }
}

TEST_CASE("ga matches the exhaustive split grid on a symmetric instance") {
    // all gains equal, s0 = 0, power generous: enumerate bit splits and
    // eps^2 shares on a coarse grid with real solves. The even (1,1) split
    // must tie the grid optimum (the share itself is fitness-degenerate
    // here: with equal gains the combined objective only sees the total
    // eps^2) and the GA must reach that optimum with one bit per group.
    ReducedInstance inst = make_instance(4, 4, Vec::Ones(4), Vec::Zero(4), 4.0, 0.5);

    auto make_plan = [&](int bits0, double share) {
        SplitPlan plan;
        plan.groups.resize(2);
        for (int d = 0; d < 4; ++d) plan.groups[d % 2].dims.push_back(d);
        plan.groups[0].bits = bits0;
        plan.groups[1].bits = 2 - bits0;
        plan.groups[0].power = inst.P * share;
        plan.groups[1].power = inst.P * (1.0 - share);
        plan.groups[0].eps = inst.eps * std::sqrt(share);
        plan.groups[1].eps = inst.eps * std::sqrt(1.0 - share);
        return plan;
    };

    double grid_best = 0.0;
    int grid_best_bits = -1;
    for (int bits0 = 0; bits0 <= 2; ++bits0)
        for (double share = 0.1; share <= 0.91; share += 0.1) {
            const SplitResult r = solve_split(inst, make_plan(bits0, share), AldaConfig{});
            if (r.d_combined > grid_best) {
                grid_best = r.d_combined;
                grid_best_bits = bits0;
            }
        }
    CHECK(grid_best_bits == 1);

    const SplitResult symmetric = solve_split(inst, make_plan(1, 0.5), AldaConfig{});
    CHECK(symmetric.d_combined >= grid_best - 0.01 * grid_best);
    // unconstrained-power antipodal pairs: combined distance is 2 eps
    CHECK(symmetric.d_combined == doctest::Approx(2.0 * inst.eps).epsilon(0.02));

    GaConfig ga;
    ga.pop = 16;
    ga.iters = 10;
    ga.seed = 7;
    const GaOutcome out = optimize_split(inst, 2, ga, AldaConfig{});
    out.plan.validate(inst);
    CHECK(out.plan.groups[0].bits == 1);
    CHECK(out.plan.groups[1].bits == 1);
    CHECK(out.result.d_combined >= 0.97 * grid_best);
}

TEST_CASE("ga best fitness is non-decreasing and deterministic") {
    Philox rng(44, 0);
    Vec sigma(6);
    sigma << 2.0, 1.7, 1.3, 1.0, 0.7, 0.4;
    Vec s0 = random_vector(6, rng);
    ReducedInstance inst = make_instance(4, 6, sigma, s0, std::pow(s0.norm() + 0.5, 2), 0.5);

    GaConfig ga;
    ga.pop = 8;
    ga.iters = 6;
    ga.seed = 99;
    const GaOutcome a = optimize_split(inst, 2, ga, AldaConfig{});
    for (std::size_t t = 1; t < a.best_per_gen.size(); ++t)
        CHECK(a.best_per_gen[t] >= a.best_per_gen[t - 1] - 1e-12);

    const GaOutcome b = optimize_split(inst, 2, ga, AldaConfig{});
    CHECK(a.plan.to_json() == b.plan.to_json());
    CHECK(a.result.d_combined == b.result.d_combined);

    // threaded evaluation must not perturb the outcome
    const GaOutcome c = optimize_split(inst, 2, ga, AldaConfig{}, 4);
    CHECK(a.plan.to_json() == c.plan.to_json());
}

TEST_CASE("raising the power budget never lowers the best fitness") {
    // huge eps so the power budget is the only binding constraint
    ReducedInstance lo = make_instance(4, 4, Vec::Ones(4), Vec::Zero(4), 1.0, 10.0);
    ReducedInstance hi = lo;
    hi.P = 2.0;

    GaConfig ga;
    ga.pop = 8;
    ga.iters = 5;
    ga.seed = 3;
    const GaOutcome a = optimize_split(lo, 2, ga, AldaConfig{});
    const GaOutcome b = optimize_split(hi, 2, ga, AldaConfig{});
    CHECK(b.result.d_combined >= a.result.d_combined - 1e-9);
}

TEST_CASE("split plan json round-trip") {
    SplitPlan plan;
    plan.groups.resize(2);
    plan.groups[0].dims = {0, 2};
    plan.groups[1].dims = {1, 3};
    plan.groups[0].bits = 1;
    plan.groups[1].bits = 1;
    plan.groups[0].power = 0.25;
    plan.groups[1].power = 0.5;
    plan.groups[0].eps = 0.3;
    plan.groups[1].eps = 0.4;

    const SplitPlan back = SplitPlan::from_json(plan.to_json());
    REQUIRE(back.groups.size() == 2);
    CHECK(back.groups[0].dims == plan.groups[0].dims);
    CHECK(back.groups[1].dims == plan.groups[1].dims);
    CHECK(back.groups[0].power == plan.groups[0].power);
    CHECK(back.groups[1].eps == plan.groups[1].eps);
    CHECK_THROWS_AS(SplitPlan::from_json("{not json"), InvalidInput);
}
