#pragma once

#include <string>
#include <vector>

#include "topoderiv/corrector.hpp"
#include "topoderiv/state_adjoint.hpp"

namespace topoderiv {

/// Empirical convergence-order record. Raw sequences are kept so pass/fail
/// can be recomputed from the stored data alone.
struct RateReport {
    enum class Rule {
        slope_at_least,  // pass when slope >= predicted - tolerance-free threshold
        slope_within     // pass when |slope - predicted| <= tolerance
    };

    std::string quantity;
    std::vector<double> eps;          // strictly decreasing
    std::vector<double> values;       // same length as eps
    std::vector<double> pair_slopes;  // log-log slope of consecutive pairs
    double slope = 0.0;               // least-squares slope over all points
    double predicted = 0.0;           // expected exponent or threshold
    double tolerance = 0.0;           // used by slope_within
    Rule rule = Rule::slope_at_least;
    bool degenerate = false;  // all values under the zero floor; auto-pass
    bool pass = false;
    std::string note;
};

/// Least-squares log-log slope fit (at least 3 points). Values whose
/// magnitudes all stay at or below zero_floor short-circuit to a degenerate
/// auto-pass, which is how identically-zero residual curves (no contrast)
/// are reported.
RateReport rate_at_least(std::string quantity, std::vector<double> eps,
                         std::vector<double> values, double threshold,
                         double zero_floor = 0.0);
RateReport rate_within(std::string quantity, std::vector<double> eps, std::vector<double> values,
                       double predicted, double tolerance, double zero_floor = 0.0);

/// Change-of-variables identities between a field on D and its pull-back to
/// the inflated domain D_eps = (D - x0) / eps:
///   |v_eps|_{Lp(D_eps)}   = eps^(-d/p)           |v|_{Lp(D)},
///   |grad v_eps|_{L2(D_eps)} = eps^(1-d/2)       |grad v|_{L2(D)},
///   |v_eps|_eps           = eps^(1-d/2) (|v|_{L2(D)} + |grad v|_{L2(D)}),
/// where v_eps(y) = v(x0 + eps y) on the affine-image mesh and the scaled
/// norm is |w|_eps = eps |w|_{L2} + |grad w|_{L2}. Exact under a shared
/// fixed-degree quadrature, so the check demands 1e-12 on random fields.
RateReport check_scaling_identities(const ProblemSpec& problem, const Eigen::Vector3d& x0,
                                    const std::vector<double>& eps_grid, int num_fields,
                                    unsigned seed, double tol = 1e-12);

/// Surface remainder rates of a decaying profile V(x) = x_i / |x|^(m+1) over
/// the rescaled outer boundary Gamma_eps = (boundary of D - x0) / eps:
///   item (i):   eps-scaled L2 surface norm of V  ~ eps^((2m+1-d)/2),
///   item (iii): the same norm of grad V          ~ eps^((2m+3-d)/2);
/// both evaluated by pure surface quadrature, no finite elements involved.
std::vector<RateReport> check_remainder_rates(int dim, int m, const std::vector<double>& eps_grid,
                                              double tolerance = 0.2);

/// Resolution parameters of the corrector rate check.
struct CorrectorRateParams {
    double h = 0.05;        // interior width away from the inclusion
    int order = 2;
    double R = 20.0;        // exterior truncation radius
    double h_inner = 0.1;   // exterior width at the inclusion
    double grading = 0.05;
    double jet_patch = 0.2; // jet recovery radius on the unperturbed mesh
    int min_segments = 64;  // boundary fan resolution floor
    int quad_degree = 4;    // norm quadrature on the image mesh
};

/// Convergence of the rescaled finite element variations to the exterior
/// correctors: for each eps, solves the perturbed and unperturbed problems
/// on one fitted mesh, forms (perturbed - unperturbed)/eps, pulls it back to
/// D_eps via the affine image mesh, and measures the eps-scaled norm of the
/// difference to the corrector (evaluated from the level fields, switching
/// to the fitted far-field model outside 0.9 of the outer level radius).
/// Supported kinds: U1 (state), P1 (fixed-linearization adjoint), Q1hat
/// (averaged adjoint; the gradient coupling Q1tilde is added when gamma_g
/// is active).
RateReport corrector_rate_check(CorrectorKind kind, const ProblemSpec& problem,
                                const PerturbationSpec& pert, const std::vector<double>& eps_grid,
                                const CorrectorRateParams& params = {}, double threshold = 0.7);

}  // namespace topoderiv
