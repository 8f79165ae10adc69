#pragma once

#include "topoderiv/farfield.hpp"
#include "topoderiv/state_adjoint.hpp"

namespace topoderiv {

/// Compensation problems on the computational domain. The exterior
/// correctors leave a slowly decaying far-field trace on the boundary of D;
/// each kind below solves the background-material problem that cancels one
/// such trace. The u kinds restore the state boundary conditions, the p and
/// q kinds the two adjoint families. q2U is the odd one out: it has
/// homogeneous Dirichlet data and instead collects the cost-term sources
/// (boundary measurement and gradient tracking) that the averaged adjoint
/// picks up from the state correctors.
enum class RegularKind { u1, u2, p1, p2, q1, q2U, q2Q };

const char* regular_kind_name(RegularKind kind);

struct RegularCorrector {
    RegularKind kind = RegularKind::u1;
    FemField field;
    /// Largest model coefficient that produced the data; zero data must give
    /// a zero field, which tests check against this scale.
    double data_scale = 0.0;
};

/// Solves, for a far-field model R fitted around the expansion point x0,
///   integral_D C2 eps(w) : eps(phi) = -integral_{Gamma^N} C2 eps(R)(x - x0) n . phi dS
/// for test functions vanishing on the Dirichlet part, with trace
/// w = -R(x - x0) there. Adjoint kinds (p1, p2, q1, q2Q) pose the transposed
/// material law and apply C2^T in the traction. Both the trace and the
/// traction come from the fitted model evaluated analytically, so the data
/// stay consistent with the decay profile rather than with any single mesh.
RegularCorrector solve_regular_corrector(MeshContext& ctx, RegularKind kind,
                                         const FarFieldModel& farfield,
                                         const Eigen::Vector3d& x0);

/// Data feeding the q2U problem. The pointers may stay null when the weight
/// multiplying them vanishes; otherwise they must outlive the solve call.
struct RegularCouplings {
    const FarFieldModel* R1 = nullptr;  ///< first-order state far field
    const FarFieldModel* R2 = nullptr;  ///< combined second-order state far field
    const FemField* u1 = nullptr;       ///< first-order state compensation
    const FemField* u2 = nullptr;       ///< second-order state compensation
};

/// Solves the measurement/gradient-tracking compensation of the averaged
/// adjoint: homogeneous Dirichlet data and right-hand side
///   -gamma_m integral_{Gamma^m} [R1 + R2](x - x0) + [u1 + u2]) . phi dS
///   -gamma_g integral_D grad(u1 + u2) : grad phi dx
///   -gamma_g integral_{Gamma^N} grad[R1 + R2](x - x0) n . phi dS
/// with the transposed material law. Weights are the effective ones, so in
/// the restricted 2D cost this reduces to a zero field.
RegularCorrector solve_regular_corrector_q2U(MeshContext& ctx, const RegularCouplings& c,
                                             const Eigen::Vector3d& x0);

}  // namespace topoderiv
