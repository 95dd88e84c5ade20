#include "isac/alda.hpp"

#include <cmath>
#include <limits>

#include "isac/errors.hpp"
#include "isac/lbfgs.hpp"
#include "isac/rng.hpp"

namespace isac {

void AldaConfig::validate() const {
    if (mu0 <= 0.0) throw InvalidInput("AldaConfig: mu0 must be > 0");
    if (rho <= 1.0) throw InvalidInput("AldaConfig: rho must be > 1");
    if (feas_tol <= 0.0 || stall_tol <= 0.0 || bfgs_grad_tol <= 0.0)
        throw InvalidInput("AldaConfig: tolerances must be > 0");
    if (max_outer < 1 || max_bfgs < 1 || n_starts < 1)
        throw InvalidInput("AldaConfig: iteration counts must be >= 1");
    if (lambda0 < 0.0 || v0 < 0.0) throw InvalidInput("AldaConfig: initial duals must be >= 0");
}

DesignResult make_design_result(const ReducedInstance& inst, const std::vector<Vec>& s_signals,
                                bool converged) {
    DesignResult r;
    r.s_signals = s_signals;
    r.converged = converged;
    const Vec g = inst.gains();
    const int M = static_cast<int>(s_signals.size());
    r.similarity = Vec(M);
    double dmin = std::numeric_limits<double>::infinity();
    double power = 0.0;
    for (int k = 0; k < M; ++k) {
        r.similarity(k) = (s_signals[k] - inst.s0).norm();
        power += s_signals[k].squaredNorm();
        for (int l = k + 1; l < M; ++l)
            dmin = std::min(dmin, g.cwiseProduct(s_signals[k] - s_signals[l]).norm());
    }
    r.d_achieved = (M > 1) ? dmin : 0.0;
    r.power_used = power / std::max(1, M);

    r.signals.signals.reserve(M);
    for (int k = 0; k < M; ++k) r.signals.signals.push_back(inst.V * s_signals[k]);
    r.signals.min_distance = r.d_achieved;
    r.signals.similarity = r.similarity;
    r.signals.avg_power = r.power_used;
    return r;
}

namespace {

StackedVector initial_z(const QcqpInstance& q, const AldaConfig& cfg, int start) {
    const int MN = q.M() * q.N();
    StackedVector z;
    switch (cfg.z_init_mode) {
        case ZInitMode::Ones:
            z = StackedVector::Ones(MN);
            break;
        case ZInitMode::Reference:
            z = q.z0();
            break;
        case ZInitMode::Custom:
            if (cfg.z_custom.size() != MN) throw InvalidInput("solve_p8: z_custom has wrong size");
            z = cfg.z_custom;
            break;
    }
    // Any start with identical blocks is an exact saddle: the distance
    // constraints have zero gradient there and no iteration can separate the
    // signals. The base start therefore gets a deterministic symmetry-breaking
    // perturbation; Custom starts are taken as given.
    Philox rng(cfg.start_seed, 0x1000u + static_cast<std::uint64_t>(start));
    if (start == 0) {
        if (cfg.z_init_mode != ZInitMode::Custom) {
            const double scale = 1e-3 * std::max(q.inst.eps, 1e-3);
            for (int i = 0; i < MN; ++i) z(i) += rng.uniform(-scale, scale);
        }
    } else {
        // Extra starts spread the signals at random inside the similarity
        // ball; perturbing one point would revisit the same basin.
        const int N = q.N();
        for (int k = 0; k < q.M(); ++k) {
            Vec dir(N);
            for (int i = 0; i < N; ++i) dir(i) = rng.gaussian();
            const double nrm = dir.norm();
            if (nrm > 0.0) dir *= (0.9 * q.inst.eps * rng.uniform()) / nrm;
            z.segment(k * N, N) = q.inst.s0 + dir;
        }
    }
    return z;
}

std::vector<Vec> split_blocks(const QcqpInstance& q, const StackedVector& z) {
    std::vector<Vec> s(q.M());
    for (int k = 0; k < q.M(); ++k) s[k] = z.segment(k * q.N(), q.N());
    return s;
}

struct SingleRun {
    AldaState state;
    bool infeasible_detected = false;
};

SingleRun run_one_start(const QcqpInstance& q, const AldaConfig& cfg, int start) {
    const int M = q.M();
    SingleRun run;
    AldaState& st = run.state;
    st.z = initial_z(q, cfg, start);
    st.duals = DualState::init(M, cfg.lambda0, cfg.v0, cfg.mu0);

    LbfgsOptions bopt;
    bopt.max_iters = cfg.max_bfgs;
    bopt.grad_tol = cfg.bfgs_grad_tol;

    double prev_obj = std::numeric_limits<double>::quiet_NaN();
    int stall_hits = 0;
    double prev_feas = std::numeric_limits<double>::infinity();
    int feas_stuck = 0;

    for (int j = 0; j < cfg.max_outer; ++j) {
        OuterRecord rec;
        rec.mu = st.duals.mu;
        rec.lagrangian_before = lagrangian(q, st.z, st.duals);

        auto fgrad = [&](const Vec& zz, Vec& grad) {
            lagrangian_grad(q, zz, st.duals, grad);
            return lagrangian(q, zz, st.duals);
        };
        const LbfgsReport brep = lbfgs_minimize(st.z, fgrad, bopt);
        rec.bfgs_iters = brep.iters;
        rec.lagrangian_after = brep.f;

        st.objective = st.z.squaredNorm();
        st.feas_residual = max_violation(q, st.z);
        st.outer_iter = j + 1;
        rec.objective = st.objective;
        rec.feas_residual = st.feas_residual;
        st.trace.push_back(rec);

        const bool stalled = !std::isnan(prev_obj) &&
                             std::abs(st.objective - prev_obj) <= cfg.stall_tol * std::max(1.0, std::abs(st.objective));
        stall_hits = stalled ? stall_hits + 1 : 0;
        if (st.feas_residual <= cfg.feas_tol && stall_hits >= 2) {
            st.converged = true;
            return run;
        }
        prev_obj = st.objective;

        // Infeasibility: a huge penalty no longer shrinks sizeable violations.
        if (st.duals.mu >= 1e8 && st.feas_residual > 10.0 * cfg.feas_tol) {
            feas_stuck = (st.feas_residual >= 0.999 * prev_feas) ? feas_stuck + 1 : 0;
            if (feas_stuck >= 3) {
                run.infeasible_detected = true;
                return run;
            }
        } else {
            feas_stuck = 0;
        }
        prev_feas = st.feas_residual;

        // Dual ascent with clamping, then geometric penalty growth.
        for (int l = 0; l < M; ++l)
            for (int k = 0; k < M; ++k) {
                if (k == l) continue;
                const int idx = pair_index(M, l, k);
                const double upd = st.duals.lambda(idx) - st.duals.mu * (pair_quadratic(q, st.z, k, l) - q.d);
                st.duals.lambda(idx) = std::max(0.0, upd);
            }
        for (int k = 0; k < M; ++k) {
            const double upd = st.duals.v(k) + st.duals.mu * similarity_residual(q, st.z, k);
            st.duals.v(k) = std::max(0.0, upd);
        }
        st.duals.mu = std::min(st.duals.mu * cfg.rho, cfg.mu_cap);
    }
    return run;
}

}  // namespace

std::pair<AldaState, DesignResult> solve_p8(const QcqpInstance& q, const AldaConfig& cfg) {
    cfg.validate();

    std::optional<SingleRun> best;
    std::optional<double> best_d;
    std::optional<SingleRun> infeasible_run;

    for (int start = 0; start < cfg.n_starts; ++start) {
        SingleRun run = run_one_start(q, cfg, start);
        if (run.infeasible_detected) {
            if (!infeasible_run) infeasible_run = std::move(run);
            continue;
        }
        const bool run_feasible = run.state.feas_residual <= cfg.feas_tol;
        const bool best_feasible = best && best->state.feas_residual <= cfg.feas_tol;
        double run_d = 0.0;
        if (run_feasible) {
            const auto s = split_blocks(q, run.state.z);
            run_d = make_design_result(q.inst, s, run.state.converged).d_achieved;
        }
        // feasible-first, then largest achieved distance, then lowest start index
        bool take = false;
        if (!best) take = true;
        else if (run_feasible && !best_feasible) take = true;
        else if (run_feasible && best_feasible && run_d > *best_d) take = true;
        else if (!run_feasible && !best_feasible && run.state.feas_residual < best->state.feas_residual) take = true;
        if (take) {
            best = std::move(run);
            best_d = run_d;
        }
    }

    if (!best || (infeasible_run && best->state.feas_residual > cfg.feas_tol)) {
        const AldaState& st = best ? best->state : infeasible_run->state;
        throw InfeasibleDetected("solve_p8: violations stopped decreasing under a large penalty",
                                 st.feas_residual, st.duals.mu, st.outer_iter);
    }

    DesignResult result = make_design_result(q.inst, split_blocks(q, best->state.z), best->state.converged);
    return {std::move(best->state), std::move(result)};
}

KktReport kkt_report(const QcqpInstance& q, const AldaState& state) {
    KktReport rep;
    rep.stationarity = lagrangian_grad(q, state.z, state.duals).norm();
    rep.max_violation = max_violation(q, state.z);
    const int M = q.M();
    for (int l = 0; l < M; ++l)
        for (int k = 0; k < M; ++k) {
            if (k == l) continue;
            const double c = pair_quadratic(q, state.z, k, l) - q.d;
            rep.compl_slack_dist = std::max(rep.compl_slack_dist,
                                            std::abs(state.duals.lambda(pair_index(M, l, k)) * c));
        }
    for (int k = 0; k < M; ++k)
        rep.compl_slack_sim = std::max(rep.compl_slack_sim,
                                       std::abs(state.duals.v(k) * similarity_residual(q, state.z, k)));
    return rep;
}

namespace {

// Rescale to the exact power budget when possible without leaving the
// similarity balls; the designed point stays feasible either way.
void apply_power_scaling(const ReducedInstance& inst, DesignResult& result) {
    if (result.power_used <= 0.0 || result.s_signals.empty()) return;
    if (result.power_used >= inst.P * (1.0 - 1e-12)) return;
    const double alpha = std::sqrt(inst.P / result.power_used);
    double worst = 0.0;
    for (const Vec& s : result.s_signals) worst = std::max(worst, (alpha * s - inst.s0).norm());
    if (worst > inst.eps * (1.0 + 1e-6)) return;
    std::vector<Vec> scaled;
    scaled.reserve(result.s_signals.size());
    for (const Vec& s : result.s_signals) scaled.push_back(alpha * s);
    const bool conv = result.converged;
    result = make_design_result(inst, scaled, conv);
    result.power_scaled = true;
}

}  // namespace

MaxminResult solve_maxmin(const ReducedInstance& inst, const AldaConfig& cfg,
                          const BisectOptions& bisect) {
    cfg.validate();
    if (bisect.d_lo < 0.0) throw InvalidInput("solve_maxmin: d_lo must be >= 0");

    const double sigma1 = inst.sigma.size() > 0 ? inst.sigma(0) : 0.0;
    const double eps2 = inst.eps * inst.eps;
    // Two points of one similarity ball are at most 2*eps apart, weighted by
    // at most sigma_1, for any power budget; this cap is the tightest simple
    // overestimate and keeps the default d_tol meaningful.
    const double d_hi_default = 4.0 * eps2 * sigma1 * sigma1 * (1.0 + 1e-6) + 1e-12;
    const double d_hi = bisect.d_hi.value_or(d_hi_default);
    if (d_hi < bisect.d_lo) throw InvalidInput("solve_maxmin: d_hi must be >= d_lo");
    const double d_tol = bisect.d_tol.value_or(1e-4 * std::max(d_hi, 1e-30));

    MaxminResult out;

    // Anchor at the lower edge; this must be feasible for the bisection to run.
    QcqpInstance q_lo(inst, bisect.d_lo);
    try {
        auto [st, res] = solve_p8(q_lo, cfg);
        if (st.feas_residual > cfg.feas_tol)
            throw NoFeasiblePoint("solve_maxmin: could not satisfy the similarity constraints at the lowest target");
        out.design = std::move(res);
        out.state = std::move(st);
        out.accepted_q = q_lo;
        out.d_target = bisect.d_lo;
        ++out.probes;
    } catch (const InfeasibleDetected&) {
        throw NoFeasiblePoint("solve_maxmin: the lowest distance target is already infeasible");
    }
    if (out.design.power_used > inst.P * (1.0 + bisect.p_tol))
        throw NoFeasiblePoint("solve_maxmin: similarity constraints demand more than the power budget");

    double lo = bisect.d_lo, hi = d_hi;
    while (hi - lo > d_tol) {
        const double mid = 0.5 * (lo + hi);
        QcqpInstance q_mid(inst, mid);
        bool keep_lo_side = false;
        try {
            auto [st, res] = solve_p8(q_mid, cfg);
            if (st.feas_residual <= cfg.feas_tol) {
                const double pstar = res.power_used;
                const bool matched = std::abs(pstar - inst.P) <= bisect.p_tol * inst.P;
                if (matched || pstar < inst.P) {
                    out.design = std::move(res);
                    out.state = std::move(st);
                    out.accepted_q = q_mid;
                    out.d_target = mid;
                    keep_lo_side = true;
                    if (matched) {
                        out.power_matched = true;
                        ++out.probes;
                        break;
                    }
                }
                // pstar > P: over budget, the epigraph problem is infeasible here
            }
        } catch (const InfeasibleDetected&) {
        }
        if (keep_lo_side) lo = mid;
        else hi = mid;
        ++out.probes;
    }

    apply_power_scaling(inst, out.design);
    return out;
}

}  // namespace isac
