#pragma once

#include <Eigen/Dense>

namespace topoderiv {

/// Quadrature points and weights on a reference element. Weights sum to the
/// reference measure (1 for the unit segment, 1/2 for the unit triangle, 1/6
/// for the unit tetrahedron), so mapped integrals only need |det J|.
struct QuadratureRule {
    Eigen::Matrix<double, Eigen::Dynamic, 3> points;  // rows are reference coordinates
    Eigen::VectorXd weights;
    int degree = 0;  // polynomial degree integrated exactly

    int size() const { return static_cast<int>(weights.size()); }
};

/// Gauss-Legendre rule with n points on [0, 1], exact to degree 2n-1.
QuadratureRule gauss_segment(int n);

/// Rule on the reference simplex of dimension dim (1, 2, or 3), exact for
/// polynomials of total degree <= degree. Simplex rules are built as
/// collapsed tensor products of Gauss-Legendre rules, which keeps them
/// positive and makes the exactness degree a short change-of-variables
/// argument instead of a table lookup. Cached; returned by reference.
const QuadratureRule& simplex_rule(int dim, int degree);

}  // namespace topoderiv
