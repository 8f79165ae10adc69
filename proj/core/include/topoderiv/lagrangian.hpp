#pragma once

#include "topoderiv/state_adjoint.hpp"

namespace topoderiv {

/// Value of the shape functional
///   J_eps(u) = gamma_f * int f . u + gamma_g * int |grad u - grad u_d|^2
///            + gamma_m * int_{measured} |u - u_m|^2,
/// with f = f1 on region 1 / f2 on region 2 when `perturbed`, f2 everywhere
/// otherwise.
struct CostBreakdown {
    double total = 0;
    double load_term = 0;
    double gradient_term = 0;
    double boundary_term = 0;
};
CostBreakdown cost_evaluate(const ProblemSpec& problem, const FemField& u, bool perturbed);

/// J_eps(u_new) - J_eps(u_old) evaluated through the exact midpoint identity
/// for quadratic functionals, which avoids the catastrophic cancellation of
/// subtracting two O(1) cost values when u_new - u_old is small.
double cost_difference(const ProblemSpec& problem, const FemField& u_new, const FemField& u_old,
                       bool perturbed);

/// Lagrangian L(eps, u, v) = J_eps(u) + a_eps(u, v) - f_eps(v) on the mesh of
/// a context; `perturbed` selects the eps > 0 coefficient layout.
double lagrangian_value(MeshContext& ctx, const FemField& u, const FemField& v, bool perturbed);

/// Per-mesh samples of the perturbation-difference forms that the quotient
/// estimators consume. Each decomposition satisfies, up to roundoff,
///   j(eps) - j(0) = am_dl + am_R = av_dl + av_R = df_dl + df_R1 + df_R2,
/// with every piece evaluated either as a local integral over the inclusion
/// or as a quadratic form in the solution difference, never as a difference
/// of two O(1) totals.
struct DifferenceSamples {
    double eps = 0;
    double ell1 = 0;  // discrete inclusion measure |omega_eps|
    double ell2 = 0;  // eps * ell1
    double j_eps = 0;
    double j0 = 0;
    double j_diff = 0;  // j(eps) - j(0), cancellation-free
    double am_dl = 0, am_R = 0;
    double av_dl = 0, av_R = 0;
    double df_dl = 0, df_R1 = 0, df_R2 = 0;
};
DifferenceSamples difference_samples(MeshContext& ctx, double eps);

}  // namespace topoderiv
