#pragma once

#include <vector>

#include "topoderiv/expansion.hpp"

namespace topoderiv {

/// One epsilon sample of a method's defining Lagrangian differences: dl is
/// the partial-epsilon difference at frozen arguments, r1 (and r2 for the
/// two-remainder method) the state-variation differences. Their sum equals
/// j(eps) - j(0) on the sampling mesh by construction.
struct QuotientSample {
    double eps = 0.0;
    double ell1 = 0.0;
    double ell2 = 0.0;
    double dl = 0.0;
    double r1 = 0.0;
    double r2 = 0.0;  // delfour only, zero for the other methods
};

QuotientSample quotient_sample(Method method, const DifferenceSamples& s);

/// Extrapolated limit of one quotient sequence with its observed order, so
/// no extrapolation is ever reported without its empirical basis.
struct SequenceLimit {
    std::vector<double> values;   // quotient per eps, largest eps first
    double limit = 0.0;
    double observed_order = 0.0;  // from increment ratios; 0 when converged
    double residual = 0.0;        // relative spread of the last two extrapolants
    bool converged = false;       // increments at roundoff; limit = last value
    bool reliable = true;         // false when increments oscillate or stall
};

/// Geometric-sequence limit estimate: fits the increment-decay order, then
/// removes the leading term from the last pair. Sequences whose increments
/// sit at roundoff return the last value as a converged limit; oscillating
/// or stalling increments are flagged unreliable instead of silently
/// extrapolated.
SequenceLimit estimate_limit(const std::vector<double>& eps, const std::vector<double>& values);

/// First- and second-order limits of the defining quotients of one method.
/// First-order quotients divide the eps-differences by ell1(eps);
/// second-order quotients subtract ell1 times the first-order limit and
/// divide by ell2(eps).
struct LimitEstimates {
    Method method = Method::amstutz;
    std::vector<double> eps;
    SequenceLimit first_dl, first_r1, first_r2;
    SequenceLimit second_dl, second_r1, second_r2;

    double first_order() const { return first_dl.limit + first_r1.limit + first_r2.limit; }
    double second_order() const { return second_dl.limit + second_r1.limit + second_r2.limit; }
};

/// Runs the quotient limits of the chosen method over the samples (sorted by
/// decreasing eps internally; at least 3 distinct values required).
LimitEstimates lagrangian_limits(Method method, std::vector<QuotientSample> samples);

}  // namespace topoderiv
