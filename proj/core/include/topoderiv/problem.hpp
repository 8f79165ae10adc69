#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "topoderiv/expression.hpp"
#include "topoderiv/tensor.hpp"

namespace topoderiv {

/// Weights of the three cost terms: gamma_f (work of the load), gamma_g
/// (gradient tracking), gamma_m (boundary measurement tracking).
struct CostWeights {
    double gamma_f = 0.0;
    double gamma_g = 0.0;
    double gamma_m = 0.0;
};

/// Resolved tag carried by every boundary facet. A measured facet is a
/// Neumann facet that additionally enters the gamma_m tracking integral, so
/// the three tags partition the boundary and the measurement region never
/// touches the Dirichlet part.
enum class BoundaryTag : int {
    Dirichlet = 1,
    Neumann = 2,
    NeumannMeasured = 3,
};

/// Reference inclusion shape, in local coordinates around the origin. All
/// supported shapes are star shaped with respect to 0, which the fitted mesh
/// generator exploits by placing the inclusion boundary through a radius
/// function per direction.
struct InclusionShape {
    enum class Kind { Ball, Ellipse, Polygon };

    Kind kind = Kind::Ball;
    /// Ellipse semi axes (first `dim` entries used). Ball behaves as all ones.
    Eigen::Vector3d semi_axes = Eigen::Vector3d::Ones();
    /// Polygon vertices, 2D only, counter clockwise, star shaped around 0.
    std::vector<Eigen::Vector2d> polygon;

    /// |omega| (area in 2D, volume in 3D).
    double measure(int dim) const;
    /// max_{x in omega} |x|, used by the containment guard.
    double max_radius(int dim) const;
    /// Distance from the origin to the shape boundary along unit vector dir.
    double boundary_radius(const Eigen::Vector3d& dir, int dim) const;
    bool contains(const Eigen::Vector3d& x, int dim) const;
    /// Throws std::invalid_argument when the shape is unusable in `dim`.
    void validate(int dim) const;
    /// Stable one-line description, used in cache keys and reports.
    std::string describe() const;
};

/// Axis-aligned box domain D with a per-side boundary tag. Side order:
/// 0 = x min, 1 = x max, 2 = y min, 3 = y max, 4 = z min, 5 = z max
/// (named left, right, bottom, top, back, front in config files).
struct ProblemSpec {
    int dim = 2;
    Eigen::Vector3d lo = Eigen::Vector3d::Zero();
    Eigen::Vector3d hi = Eigen::Vector3d::Ones();
    std::array<BoundaryTag, 6> side_tags{BoundaryTag::Dirichlet, BoundaryTag::Neumann,
                                         BoundaryTag::Neumann,  BoundaryTag::Neumann,
                                         BoundaryTag::Neumann,  BoundaryTag::Neumann};

    ElasticTensor C1;  ///< phase inside the inclusion
    ElasticTensor C2;  ///< background phase
    VectorExpression f1;
    VectorExpression f2;

    VectorExpression dirichlet_datum;     ///< u_D on the Dirichlet part
    VectorExpression neumann_datum;       ///< u_N on the Neumann part (incl. measured)
    VectorExpression measurement_target;  ///< u_m in the gamma_m term
    VectorExpression gradient_target;     ///< u_d; the cost tracks its gradient

    CostWeights weights;

    /// In 2D the gradient and measurement terms are disabled by default; this
    /// switch re-enables them for oracle-only experiments.
    bool allow_full_cost_2d = false;

    /// Throws std::invalid_argument on an inconsistent description.
    void validate() const;

    const ElasticTensor& tensor(int region) const;
    const VectorExpression& load(int region) const;

    bool has_tag(BoundaryTag t) const;
    /// Euclidean distance from an interior point to the box boundary.
    double boundary_distance(const Eigen::Vector3d& p) const;
    Eigen::Vector3d extent() const { return hi - lo; }

    /// Effective weights after the 2D restriction is applied.
    CostWeights effective_weights() const;
    /// True when C1 = C2 and f1 = f2 (perturbed and unperturbed problems agree).
    bool no_contrast() const;
};

/// Inclusion placement: center x0, reference shape omega, and the epsilon
/// grid to sweep. omega_eps = x0 + eps * omega.
struct PerturbationSpec {
    Eigen::Vector3d x0 = Eigen::Vector3d::Zero();
    InclusionShape shape;
    std::vector<double> epsilons;

    /// Throws when 0 is not interior to omega or some omega_eps leaves D.
    void validate(const ProblemSpec& problem) const;

    /// ell1(eps) = |omega_eps| = eps^d |omega|.
    double ell1(double eps, int dim) const;
    /// ell2(eps) = eps * ell1(eps).
    double ell2(double eps, int dim) const;
    double max_eps() const;
};

/// Convenience for config-driven sweeps: geometric grid from eps_max downward.
std::vector<double> geometric_eps_grid(double eps_max, double ratio, int count);

const char* boundary_tag_name(BoundaryTag t);

}  // namespace topoderiv
