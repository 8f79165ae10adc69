#pragma once

#include <array>

#include "topoderiv/fem.hpp"

namespace topoderiv {

/// Pointwise second-order jet of a vector field: value, gradient, and
/// componentwise Hessians, with the strain quantities derived from them.
struct LocalJet {
    int dim = 0;
    Eigen::Vector3d value = Eigen::Vector3d::Zero();
    Eigen::Matrix3d grad = Eigen::Matrix3d::Zero();  // grad(i, j) = d u_i / d x_j
    std::array<Eigen::Matrix3d, 3> hess = {Eigen::Matrix3d::Zero(), Eigen::Matrix3d::Zero(),
                                           Eigen::Matrix3d::Zero()};  // hess[i](j, k)

    Eigen::Matrix3d strain() const;
    /// Directional derivative of the strain: entry (i, j) is
    /// sum_k x_k d eps_ij / d x_k.
    Eigen::Matrix3d strain_gradient_along(const Eigen::Vector3d& x) const;
    /// Gradient along x: entry i is sum_k x_k d u_i / d x_k.
    Eigen::Vector3d gradient_along(const Eigen::Vector3d& x) const;
};

/// Recovers the jet of a finite element field at a point by a moving
/// least-squares polynomial fit (default degree 3) over all dofs within
/// patch_radius. Refuses when the patch is too small or degenerate for the
/// requested degree. The fit smooths out the broken derivatives of the
/// Lagrange basis, so second derivatives converge where the underlying field
/// is smooth.
LocalJet recover_jet(const FemField& u, const CellLocator& locator, const Eigen::Vector3d& x0,
                     double patch_radius, int fit_degree = 3);

/// Point evaluation of a finite element field through a cell locator.
class FieldEvaluator {
public:
    FieldEvaluator(const FemField& u, const CellLocator& locator)
        : u_(&u), locator_(&locator) {}

    Eigen::Vector3d value(const Eigen::Vector3d& x) const;
    Eigen::Matrix3d gradient(const Eigen::Vector3d& x) const;
    bool inside(const Eigen::Vector3d& x) const;

private:
    int locate_or_throw(const Eigen::Vector3d& x, Eigen::Vector4d& bary) const;

    const FemField* u_;
    const CellLocator* locator_;
};

}  // namespace topoderiv
