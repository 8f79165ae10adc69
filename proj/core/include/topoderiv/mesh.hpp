#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

namespace topoderiv {

/// Conforming simplicial mesh: triangles in 2D, tetrahedra in 3D. Cells carry
/// a region tag (1 inside the inclusion, 2 outside); boundary facets carry a
/// boundary tag and remember their owning cell so outward normals are cheap.
struct Mesh {
    struct Facet {
        std::array<int, 3> nodes{-1, -1, -1};  // first dim entries used
        int tag = 0;
        int cell = -1;  // owning cell; the normal points away from it
    };

    int dim = 2;
    std::vector<Eigen::Vector3d> nodes;
    std::vector<std::array<int, 4>> cells;  // first dim+1 entries used
    std::vector<int> cell_region;
    std::vector<Facet> boundary_facets;

    int num_nodes() const { return static_cast<int>(nodes.size()); }
    int num_cells() const { return static_cast<int>(cells.size()); }
    int nodes_per_cell() const { return dim + 1; }
    int nodes_per_facet() const { return dim; }

    /// Columns are the edge vectors x_i - x_0 of cell c (dim x dim, top-left block).
    Eigen::Matrix3d cell_jacobian(int c) const;
    double cell_measure(int c) const;
    Eigen::Vector3d cell_centroid(int c) const;
    double cell_diameter(int c) const;

    double facet_measure(const Facet& f) const;
    Eigen::Vector3d facet_centroid(const Facet& f) const;
    /// Unit outward normal of a boundary facet (away from its owning cell).
    Eigen::Vector3d facet_normal(const Facet& f) const;

    double total_measure() const;
    double region_measure(int region) const;
    double boundary_measure(int tag) const;
    /// Largest cell diameter within a region (0 selects all cells).
    double max_diameter(int region = 0) const;

    /// Structural checks: used node indices valid, positive cell measures,
    /// face conformity (interior faces shared by exactly two cells), boundary
    /// facets exactly the faces owned by one cell, each tagged once.
    /// Throws std::runtime_error with a description of the first violation.
    void validate() const;

    /// Mesh with nodes mapped through x -> (x - x0) / scale; connectivity,
    /// regions, and tags are shared structure (copied as-is). The image of a
    /// mesh of D under scale eps is a mesh of the inflated domain D_eps.
    Mesh affine_image(const Eigen::Vector3d& x0, double scale) const;
};

/// Uniform-grid spatial hash for point-in-cell queries on a fixed mesh.
class CellLocator {
public:
    explicit CellLocator(const Mesh& mesh);

    /// Cell containing p (within tolerance), with barycentric coordinates of
    /// p in that cell written to `bary`; -1 when p lies outside the mesh.
    int locate(const Eigen::Vector3d& p, Eigen::Vector4d& bary, double tol = 1e-10) const;

    /// All cells whose bounding boxes meet the ball around p; for patch scans.
    std::vector<int> cells_near(const Eigen::Vector3d& p, double radius) const;

private:
    std::array<int, 3> grid_index(const Eigen::Vector3d& p) const;

    const Mesh& mesh_;
    Eigen::Vector3d lo_, hi_;
    double cell_size_ = 1;
    std::array<int, 3> counts_{1, 1, 1};
    std::vector<std::vector<int>> bins_;
};

/// Barycentric coordinates of p in cell c; all entries >= -tol iff inside.
Eigen::Vector4d barycentric_coordinates(const Mesh& mesh, int c, const Eigen::Vector3d& p);

}  // namespace topoderiv
