#pragma once

#include <string>
#include <vector>

#include "topoderiv/expansion.hpp"
#include "topoderiv/rates.hpp"

namespace topoderiv {

/// One oracle point: perturbed and unperturbed solves on a single mesh
/// fitted to omega_eps. The unperturbed cost inside `samples` lives on the
/// same mesh, so the increment j - j0 carries no cross-mesh error, and
/// ell1/ell2 use the discrete inclusion measure of that mesh.
struct SweepPoint {
    double eps = 0.0;
    double h = 0.0;            // element width away from the inclusion
    double h_inclusion = 0.0;  // element width at the inclusion boundary
    int scalar_dofs = 0;
    double residual = 0.0;  // perturbed state-solve residual
    DifferenceSamples samples;
};

/// Brute-force oracle curve of j(eps) over a decreasing eps grid.
struct SweepCurve {
    std::vector<SweepPoint> points;  // strictly decreasing eps
    double refine_change = 0.0;      // smallest-eps increment change under refinement
    double refine_budget = 0.0;      // allowed change: budget_factor * ell2
    std::vector<std::string> warnings;
};

struct SweepParams {
    double h = 0.05;  // target width away from the inclusion
    int order = 2;
    int min_segments = 64;       // boundary fan resolution floor
    double budget_factor = 0.1;  // mesh-convergence budget in units of ell2
    bool check_refinement = true;
    int jobs = 1;  // eps points solved concurrently; results merge by index
};

/// Direction fan used by the sweep: box-aligned, with resolution raised
/// until the fitted mesh at the largest eps keeps inclusion-zone cell
/// diameters at or below eps/4. Cell widths near the inclusion scale with
/// eps at fixed fan, so the largest eps settles the whole grid. Sharing the
/// returned fan with expansion_report keeps the discrete inclusion polygon
/// identical between the formulas and the oracle.
DirectionFan sweep_fan(const ProblemSpec& problem, const PerturbationSpec& pert,
                       const SweepParams& params = {});

/// Runs the defining quotients' ingredients directly: for each eps, builds a
/// fitted mesh (all points share one direction fan), solves both coefficient
/// layouts, and records cancellation-free cost increments plus the
/// per-method Lagrangian differences. The smallest eps is re-run on a
/// once-refined mesh; a budget violation throws std::runtime_error with a
/// suggested width, a near miss only warns. Passing a fan overrides the
/// sweep_fan default; the eps/4 inclusion-zone bound is still enforced.
SweepCurve brute_force_sweep(const ProblemSpec& problem, const PerturbationSpec& pert,
                             const SweepParams& params = {}, const DirectionFan* fan = nullptr);

/// Expansion residuals against an oracle curve for one method and given
/// derivative values:
///   r1 = j(eps) - j(0) - ell1 dJ, checked as slope of r1/ell1,
///   r2 = r1 - ell2 d2J,           checked as slope of r2/ell2.
/// Thresholds: 0.7 for the first order (2D prediction 1 - alpha) and 0.5 for
/// the extra order. Passing a deliberately wrong dJ breaks the first check
/// (negative control).
std::vector<RateReport> expansion_residuals(const SweepCurve& curve, double j_scale, double dj,
                                            double d2j, const std::string& label);

/// Residual reports for all three methods of a report against one curve.
std::vector<RateReport> expansion_residuals(const SweepCurve& curve,
                                            const ExpansionReport& report);

}  // namespace topoderiv
