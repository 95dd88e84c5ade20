#ifndef ISAC_LBFGS_HPP
#define ISAC_LBFGS_HPP

#include <functional>

#include "isac/signal_model.hpp"

namespace isac {

struct LbfgsOptions {
    int memory = 10;          // stored correction pairs
    int max_iters = 500;
    double grad_tol = 1e-6;   // stop when ||g|| <= grad_tol * max(1, ||x||)
    double c1 = 1e-4;         // sufficient decrease (Armijo)
    double c2 = 0.9;          // curvature (strong Wolfe)
    int max_linesearch = 50;
};

struct LbfgsReport {
    int iters = 0;
    int n_evals = 0;
    double f = 0.0;
    double grad_norm = 0.0;
    bool converged = false;
};

/// Objective callback: returns f(x) and fills grad (same size as x).
using ObjectiveFn = std::function<double(const Vec& x, Vec& grad)>;

/**
 * Limited-memory BFGS minimization with a strong-Wolfe line search
 * (bracket + zoom with cubic/bisection interpolation). x is updated in
 * place; only steps satisfying both Wolfe conditions (or a best-effort
 * Armijo point when the search hits its evaluation cap) are accepted,
 * so f never increases across iterations.
 */
LbfgsReport lbfgs_minimize(Vec& x, const ObjectiveFn& fg, const LbfgsOptions& opt = {});

}  // namespace isac

#endif
