#ifndef ISAC_ERRORS_HPP
#define ISAC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace isac {

/// Bad arguments: dimension mismatches, non-finite inputs, invalid config values.
struct InvalidInput : std::invalid_argument {
    explicit InvalidInput(const std::string& msg) : std::invalid_argument(msg) {}
};

/// The solver certified that the requested distance target cannot be met:
/// constraint violations stopped decreasing while the penalty was already large.
struct InfeasibleDetected : std::runtime_error {
    double max_violation = 0.0;
    double mu = 0.0;
    int outer_iters = 0;
    int group = -1;  // set when raised inside a dimension-split subproblem

    InfeasibleDetected(const std::string& msg, double violation, double mu_, int iters)
        : std::runtime_error(msg), max_violation(violation), mu(mu_), outer_iters(iters) {}
};

/// Even the trivial distance target is infeasible; the problem setup is broken.
struct NoFeasiblePoint : std::runtime_error {
    explicit NoFeasiblePoint(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace isac

#endif
