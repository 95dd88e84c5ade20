#ifndef ISAC_BDPS_HPP
#define ISAC_BDPS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "isac/alda.hpp"

namespace isac {

/// One dimension group of a split plan.
struct SplitGroup {
    std::vector<int> dims;  // 0-based dimension indices, disjoint across groups
    int bits = 0;           // m_g, group carries 2^bits signals
    double power = 0.0;     // P_g
    double eps = 0.0;       // eps_g; budgets satisfy sum eps_g^2 = eps^2
};

/**
 * Partition of the N dimensions into groups carrying bits, power, and
 * similarity shares. Valid plans partition {0..N-1}, split the bit budget
 * exactly, and respect sum P_g <= P and sum eps_g^2 = eps^2.
 */
struct SplitPlan {
    std::vector<SplitGroup> groups;

    void validate(const ReducedInstance& inst) const;
    int total_bits() const;

    std::string to_json() const;
    static SplitPlan from_json(const std::string& text);
};

struct SplitResult {
    std::vector<DesignResult> per_group;
    double d_combined = 0.0;  // sqrt(sum d_g^2), the decomposition objective
    double d_true = 0.0;      // min pairwise distance of the assembled product set
    SignalSet signals;        // all prod(M_g) concatenated signals, x-domain
    std::vector<Vec> s_signals;
};

struct GaConfig {
    int pop = 24;
    int iters = 30;
    double p_mut = 0.15;
    double p_cross = 0.8;
    std::uint64_t seed = 0;
    int elitism = 2;
    int tournament = 3;

    void validate() const;
};

/**
 * Solve each group's small max-min design independently (optionally in
 * parallel) and assemble the Cartesian-product codebook. Groups with zero
 * bits contribute the reference restriction itself as a single signal.
 */
SplitResult solve_split(const ReducedInstance& inst, const SplitPlan& plan,
                        const AldaConfig& cfg, int n_threads = 1);

struct GaOutcome {
    SplitPlan plan;
    SplitResult result;
    std::vector<double> best_per_gen;  // best fitness after each generation
};

/**
 * Genetic search over split plans: integer bit loads, simplex power and
 * similarity shares, and the dimension assignment, all repaired to valid
 * plans before evaluation. Fitness is the combined distance d_combined.
 * Deterministic for a fixed (seed, config) regardless of thread count.
 */
GaOutcome optimize_split(const ReducedInstance& inst, int G, const GaConfig& ga,
                         const AldaConfig& cfg, int n_threads = 1);

/// Gain-sorted round-robin assignment with even budget shares; the GA's
/// deterministic seed plan.
SplitPlan default_plan(const ReducedInstance& inst, int G);

}  // namespace isac

#endif
