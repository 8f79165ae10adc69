#pragma once

#include "topoderiv/mesh.hpp"
#include "topoderiv/problem.hpp"

namespace topoderiv {

/// Ray directions from a common center, shared between the fitted interior
/// meshes of an epsilon sweep and the exterior corrector meshes. Sharing one
/// fan makes the discretized inclusion boundary literally the same polygon
/// (or surface triangulation) everywhere, so shape discretization error
/// cancels in all cross-mesh comparisons.
///
/// In 2D the fan is a sorted list of unit vectors; `loops` holds the single
/// closed loop 0..M-1. In 3D the directions are the nodes of a triangulated
/// reference surface and `surface_tris` its triangles (outward oriented).
struct DirectionFan {
    int dim = 2;
    std::vector<Eigen::Vector3d> directions;
    std::vector<std::array<int, 3>> surface_tris;  // 3D only

    int size() const { return static_cast<int>(directions.size()); }
};

/// Fan aligned with the box of `problem` as seen from center x0: in 2D,
/// uniform angles (at least `segments`, at least 64) with the box corner
/// directions merged in; in 3D, the directions of a per-face grid of the box
/// surface with about `segments` subdivisions per unit length.
DirectionFan make_box_fan(const ProblemSpec& problem, const Eigen::Vector3d& x0, int segments);

/// Center-symmetric fan with no box alignment, for standalone exterior runs.
DirectionFan make_uniform_fan(int dim, int segments);

/// Number of fan segments implied by mesh width h for a problem, also the
/// resolution of the discretized inclusion boundary.
int fan_segments(const ProblemSpec& problem, const Eigen::Vector3d& x0, double h);

/// Uniform structured mesh of the box D, no inclusion (all cells region 2).
/// Boundary facets are tagged from problem.side_tags.
Mesh build_uniform_mesh(const ProblemSpec& problem, double h);

/// Fitted mesh of D resolving the inclusion boundary of x0 + eps*omega as
/// facets; cells inside are region 1. Radial layered construction: element
/// width grows from about 2*pi*eps/M at the inclusion to about h at the
/// domain boundary. Refuses when h is too coarse relative to the inclusion.
Mesh build_fitted_mesh(const ProblemSpec& problem, const PerturbationSpec& pert, double eps,
                       double h, const DirectionFan& fan);

/// Convenience entry point: fitted mesh when pert is given (the fan is
/// rebuilt deterministically from h and pert->max_eps()), uniform otherwise.
Mesh build_mesh(const ProblemSpec& problem, double h, const PerturbationSpec* pert, double eps);

/// Graded mesh of the ball B_R(0) fitted to omega (region 1 inside, region 2
/// outside, outer sphere facets tagged Dirichlet). Element width grows
/// geometrically from h_inner at the inclusion boundary to about grading*R
/// near the truncation radius. Requires R >= 10 * diam(omega).
Mesh build_exterior_mesh(const InclusionShape& shape, int dim, double R, double h_inner,
                         double grading, const DirectionFan& fan);

}  // namespace topoderiv
