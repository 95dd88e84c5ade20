#ifndef ISAC_ALDA_HPP
#define ISAC_ALDA_HPP

#include <optional>
#include <vector>

#include "isac/qcqp.hpp"

namespace isac {

enum class ZInitMode { Ones, Reference, Custom };

struct AldaConfig {
    ZInitMode z_init_mode = ZInitMode::Ones;
    Vec z_custom;              // used when z_init_mode == Custom
    double lambda0 = 0.5;
    double v0 = 0.5;
    double mu0 = 10.0;
    double rho = 2.0;          // penalty growth, > 1
    double mu_cap = 1e10;      // beyond this only the duals keep updating
    int max_outer = 60;
    int max_bfgs = 500;
    double bfgs_grad_tol = 1e-6;
    double feas_tol = 1e-6;
    double stall_tol = 1e-8;
    int n_starts = 1;          // multi-start replicas with perturbed z0
    std::uint64_t start_seed = 0;

    void validate() const;
};

/// One outer iteration of the solve, for convergence diagnostics.
struct OuterRecord {
    double lagrangian_before = 0.0;
    double lagrangian_after = 0.0;
    double objective = 0.0;  // z'z
    double feas_residual = 0.0;
    double mu = 0.0;
    int bfgs_iters = 0;
};

struct AldaState {
    StackedVector z;
    DualState duals;
    int outer_iter = 0;
    double feas_residual = 0.0;
    double objective = 0.0;
    bool converged = false;
    std::vector<OuterRecord> trace;
};

/// Final designed set plus the metrics recomputed from the returned signals.
struct DesignResult {
    SignalSet signals;                 // x-domain, x_i = V s_i
    std::vector<Vec> s_signals;        // diagonalized domain
    double d_achieved = 0.0;           // min over pairs of ||Lambda(s_k - s_l)||
    double power_used = 0.0;           // (1/M) sum ||s_k||^2
    Vec similarity;                    // per-signal ||s_k - s0||
    bool converged = false;
    bool power_scaled = false;         // final rescale to the power budget applied
};

struct KktReport {
    double stationarity = 0.0;       // ||grad L|| at the final iterate
    double max_violation = 0.0;      // max clamped constraint violation
    double compl_slack_dist = 0.0;   // max |lambda (z'Qz - d)|
    double compl_slack_sim = 0.0;    // max |v (||s_k - s0||^2 - eps^2)|
};

/**
 * Augmented-Lagrangian dual-ascent solve of the fixed-distance-target
 * problem: alternate an L-BFGS minimization of the slack-eliminated
 * Lagrangian (warm-started from the previous primal iterate) with the
 * clamped multiplier updates and geometric penalty growth. Converges when
 * the feasibility residual and the objective both settle; throws
 * InfeasibleDetected when violations stop shrinking under a large penalty.
 */
std::pair<AldaState, DesignResult> solve_p8(const QcqpInstance& q, const AldaConfig& cfg);

struct BisectOptions {
    double d_lo = 0.0;
    std::optional<double> d_hi;   // default: provable over-estimate from eps and sigma_1
    std::optional<double> d_tol;  // default: 1e-4 * d_hi
    double p_tol = 1e-3;          // relative power matching tolerance
};

struct MaxminResult {
    DesignResult design;
    AldaState state;          // state of the accepted probe
    QcqpInstance accepted_q;  // instance at the accepted distance target
    double d_target = 0.0;    // accepted squared-distance target
    int probes = 0;
    bool power_matched = false;  // stopped on |P* - P| <= p_tol * P
};

/**
 * Max-min-distance design via bisection on the squared-distance target:
 * raise the target while the power minimum stays below budget, shrink on
 * infeasibility or budget excess, then rescale the final signals to the
 * budget only when that cannot break the similarity constraint.
 */
MaxminResult solve_maxmin(const ReducedInstance& inst, const AldaConfig& cfg,
                          const BisectOptions& bisect = {});

/// Stationarity / feasibility / complementary-slackness residuals of a state.
KktReport kkt_report(const QcqpInstance& q, const AldaState& state);

/// Rebuild the x-domain result (metrics included) from diagonal-domain signals.
DesignResult make_design_result(const ReducedInstance& inst, const std::vector<Vec>& s_signals,
                                bool converged);

}  // namespace isac

#endif
