#include "isac/lbfgs.hpp"

#include <cmath>
#include <deque>

namespace isac {

namespace {

struct LinesearchResult {
    double alpha = 0.0;
    double f = 0.0;
    bool wolfe_ok = false;  // both strong-Wolfe conditions hold at alpha
    bool accepted = false;  // alpha produced a usable decrease
    int evals = 0;
};

// Cubic minimizer of the interpolant through (a, fa, ga) and (b, fb, gb);
// falls back to bisection when the model degenerates or leaves the bracket.
double cubic_step(double a, double fa, double ga, double b, double fb, double gb) {
    const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - ga * gb;
    if (disc < 0.0) return 0.5 * (a + b);
    const double d2 = std::sqrt(disc) * (b > a ? 1.0 : -1.0);
    const double denom = gb - ga + 2.0 * d2;
    if (denom == 0.0) return 0.5 * (a + b);
    double t = b - (b - a) * (gb + d2 - d1) / denom;
    const double lo = std::min(a, b), hi = std::max(a, b);
    const double margin = 0.1 * (hi - lo);
    if (!(t > lo + margin && t < hi - margin)) t = 0.5 * (a + b);
    return t;
}

}  // namespace

LbfgsReport lbfgs_minimize(Vec& x, const ObjectiveFn& fg, const LbfgsOptions& opt) {
    LbfgsReport rep;
    const Eigen::Index n = x.size();

    Vec g(n), g_new(n), x_new(n);
    double f = fg(x, g);
    rep.n_evals = 1;

    std::deque<Vec> s_hist, y_hist;
    std::deque<double> rho_hist;
    Vec p(n), q(n);
    std::vector<double> alpha_buf;

    auto converged = [&](const Vec& grad, const Vec& xx) {
        return grad.norm() <= opt.grad_tol * std::max(1.0, xx.norm());
    };

    if (converged(g, x)) {
        rep.converged = true;
        rep.f = f;
        rep.grad_norm = g.norm();
        return rep;
    }

    for (int iter = 0; iter < opt.max_iters; ++iter) {
        // Two-loop recursion for p = -H g.
        q = g;
        const int m = static_cast<int>(s_hist.size());
        alpha_buf.assign(m, 0.0);
        for (int i = m - 1; i >= 0; --i) {
            alpha_buf[i] = rho_hist[i] * s_hist[i].dot(q);
            q -= alpha_buf[i] * y_hist[i];
        }
        if (m > 0) {
            const double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
            q *= gamma;
        }
        for (int i = 0; i < m; ++i) {
            const double beta = rho_hist[i] * y_hist[i].dot(q);
            q += (alpha_buf[i] - beta) * s_hist[i];
        }
        p = -q;

        double dphi0 = g.dot(p);
        if (dphi0 >= 0.0) {  // not a descent direction; reset to steepest descent
            p = -g;
            dphi0 = -g.squaredNorm();
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
        }

        // Strong Wolfe line search (bracket, then zoom).
        const double phi0 = f;
        double alpha = (iter == 0 && m == 0) ? 1.0 / std::max(1.0, g.norm()) : 1.0;
        const double alpha_max = 1e10;
        double alpha_prev = 0.0, phi_prev = phi0, dphi_prev = dphi0;
        LinesearchResult ls;
        double best_alpha = 0.0, best_f = phi0;
        double last_eval_alpha = -1.0;

        auto eval_at = [&](double a, double& phi_a, double& dphi_a) {
            x_new = x + a * p;
            phi_a = fg(x_new, g_new);
            dphi_a = g_new.dot(p);
            last_eval_alpha = a;
            ++ls.evals;
            if (phi_a < best_f && phi_a <= phi0 + opt.c1 * a * dphi0) {
                best_f = phi_a;
                best_alpha = a;
            }
        };

        auto zoom = [&](double lo, double f_lo, double g_lo, double hi, double f_hi, double g_hi) {
            for (int z = 0; z < opt.max_linesearch && ls.evals < opt.max_linesearch; ++z) {
                double a = cubic_step(lo, f_lo, g_lo, hi, f_hi, g_hi);
                if (std::abs(hi - lo) * std::max(1.0, p.norm()) < 1e-16 * std::max(1.0, x.norm())) break;
                double fa, ga;
                eval_at(a, fa, ga);
                if (fa > phi0 + opt.c1 * a * dphi0 || fa >= f_lo) {
                    hi = a;
                    f_hi = fa;
                    g_hi = ga;
                } else {
                    if (std::abs(ga) <= -opt.c2 * dphi0) {
                        ls.alpha = a;
                        ls.f = fa;
                        ls.wolfe_ok = true;
                        ls.accepted = true;
                        return;
                    }
                    if (ga * (hi - lo) >= 0.0) {
                        hi = lo;
                        f_hi = f_lo;
                        g_hi = g_lo;
                    }
                    lo = a;
                    f_lo = fa;
                    g_lo = ga;
                }
            }
        };

        while (ls.evals < opt.max_linesearch) {
            double phi_a, dphi_a;
            eval_at(alpha, phi_a, dphi_a);
            if (phi_a > phi0 + opt.c1 * alpha * dphi0 || (ls.evals > 1 && phi_a >= phi_prev)) {
                zoom(alpha_prev, phi_prev, dphi_prev, alpha, phi_a, dphi_a);
                break;
            }
            if (std::abs(dphi_a) <= -opt.c2 * dphi0) {
                ls.alpha = alpha;
                ls.f = phi_a;
                ls.wolfe_ok = true;
                ls.accepted = true;
                break;
            }
            if (dphi_a >= 0.0) {
                zoom(alpha, phi_a, dphi_a, alpha_prev, phi_prev, dphi_prev);
                break;
            }
            alpha_prev = alpha;
            phi_prev = phi_a;
            dphi_prev = dphi_a;
            alpha = std::min(2.0 * alpha, alpha_max);
        }

        if (!ls.accepted) {
            if (best_alpha > 0.0 && best_f < phi0) {
                // No Wolfe point within budget; take the best sufficient-decrease
                // point and drop the curvature pair for this step.
                ls.alpha = best_alpha;
                ls.f = best_f;
                ls.accepted = true;
            } else {
                break;  // line search failed outright
            }
        }

        rep.n_evals += ls.evals;
        if (last_eval_alpha != ls.alpha) {
            x_new = x + ls.alpha * p;
            fg(x_new, g_new);
            ++rep.n_evals;
        } else {
            x_new = x + ls.alpha * p;
        }

        const Vec s = x_new - x;
        const Vec y = g_new - g;
        const double sy = s.dot(y);
        if (ls.wolfe_ok && sy > 1e-10 * s.norm() * y.norm()) {
            s_hist.push_back(s);
            y_hist.push_back(y);
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > opt.memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }

        x = x_new;
        f = ls.f;
        g = g_new;
        rep.iters = iter + 1;

        if (converged(g, x)) {
            rep.converged = true;
            break;
        }
    }

    rep.f = f;
    rep.grad_norm = g.norm();
    return rep;
}

}  // namespace isac
