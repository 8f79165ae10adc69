#pragma once

#include "topoderiv/corrector.hpp"

namespace topoderiv {

/// The two condensed corrector maps. The strain map sends a probe strain
/// zeta to the omega-averaged strain of the exterior adjoint corrector
/// driven by (C2 - C1)^T zeta; composing it with eps(q0)(x0) condenses the
/// first-order derivative term that pairs eps(u0) with the corrector strain.
/// The gradient-coupled map routes zeta through the state corrector driven
/// by (C2 - C1) zeta and then through the gradient-tracking coupling
/// -gamma_g grad(U) : grad(phi); it vanishes when gamma_g = 0 and only
/// arises with the unrestricted cost (d = 3).
enum class PolarisationKind { strain, gradient_coupled };

const char* polarisation_kind_name(PolarisationKind kind);

/// A linear map on symmetric matrices, stored in the orthonormal Voigt
/// basis, so matrix columns are the images of the basis matrices and
/// A : map(B) = voigt(A)^T matrix voigt(B).
struct PolarisationTensor {
    PolarisationKind kind = PolarisationKind::strain;
    int dim = 0;
    Eigen::MatrixXd matrix;

    /// Image of a (padded) symmetric matrix under the map.
    Eigen::Matrix3d apply(const Eigen::Matrix3d& zeta) const;
};

/// Builds the map column by column on an existing workspace: one corrector
/// solve per orthonormal basis matrix (two for the gradient-coupled kind),
/// recording the Richardson-extrapolated omega-averaged strain. Linearity in
/// zeta is exact by construction, since every step from drive to average is
/// linear.
PolarisationTensor polarisation_tensor(const ExteriorWorkspace& ws, PolarisationKind kind,
                                       double gamma_g = 0.0);

/// Convenience wrapper that builds the two-level exterior workspace first.
PolarisationTensor polarisation_tensor(const ElasticTensor& C1, const ElasticTensor& C2,
                                       const InclusionShape& omega, int dim,
                                       PolarisationKind kind, double gamma_g, double R,
                                       double h_inner);

}  // namespace topoderiv
