#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "topoderiv/mesh.hpp"
#include "topoderiv/tensor.hpp"

namespace topoderiv {

/// Continuous Lagrange space (order 1 or 2) on a simplicial mesh. Scalar
/// degrees of freedom sit at vertices, plus edge midpoints for order 2; a
/// vector field with d components stores coefficients interleaved as
/// scalar_dof * d + component.
class FemSpace {
public:
    FemSpace(const Mesh& mesh, int order);

    const Mesh& mesh() const { return *mesh_; }
    int order() const { return order_; }
    int dim() const { return mesh_->dim; }
    int num_scalar_dofs() const { return num_scalar_dofs_; }
    int num_vector_dofs() const { return num_scalar_dofs_ * mesh_->dim; }
    int dofs_per_cell() const { return dofs_per_cell_; }

    int cell_dof(int cell, int local) const { return cell_dofs_[cell][local]; }
    const Eigen::Vector3d& dof_point(int dof) const { return dof_points_[dof]; }

    /// Scalar dof sitting at the midpoint of edge (a, b); order 2 only.
    int edge_dof(int a, int b) const;

    /// Shape function values at a barycentric point (component 0 belongs to
    /// local vertex 0). `values` must hold dofs_per_cell() entries.
    void shape_values(const Eigen::Vector4d& bary, double* values) const;

    /// Physical-space shape gradients on a cell; row i is grad N_i.
    void shape_gradients(int cell, const Eigen::Vector4d& bary,
                         Eigen::Matrix<double, 10, 3>& grads) const;

    /// Scalar dofs lying on a boundary facet (vertices, plus edge midpoints
    /// for order 2).
    std::vector<int> facet_dofs(const Mesh::Facet& facet) const;

private:
    const Mesh* mesh_;
    int order_;
    int num_scalar_dofs_;
    int dofs_per_cell_;
    std::vector<std::array<int, 10>> cell_dofs_;
    std::vector<Eigen::Vector3d> dof_points_;
    std::map<std::array<int, 2>, int> edge_dofs_;
    std::vector<Eigen::Matrix3d> jac_inv_t_;  // per cell, padded to 3x3
};

/// A vector-valued finite element field: coefficients over a FemSpace.
struct FemField {
    const FemSpace* space = nullptr;
    Eigen::VectorXd coeffs;

    FemField() = default;
    explicit FemField(const FemSpace& s)
        : space(&s), coeffs(Eigen::VectorXd::Zero(s.num_vector_dofs())) {}

    Eigen::Vector3d value(int cell, const Eigen::Vector4d& bary) const;
    /// gradient(i, j) = d u_i / d x_j, padded with zeros beyond the dimension
    Eigen::Matrix3d gradient(int cell, const Eigen::Vector4d& bary) const;
};

/// Interpolates a closure at the dof points.
FemField interpolate(const FemSpace& space,
                     const std::function<Eigen::Vector3d(const Eigen::Vector3d&)>& f);

/// Right-hand side description for the elasticity solver: a sum of volume,
/// boundary, and weak gradient terms. All closures receive physical points.
struct RhsSpec {
    struct VolumeTerm {
        int region;  // 0 = everywhere
        std::function<Eigen::Vector3d(const Eigen::Vector3d&)> f;
        double coeff = 1.0;
    };
    struct BoundaryTerm {
        int tag;
        std::function<Eigen::Vector3d(const Eigen::Vector3d&, const Eigen::Vector3d&)> g;
        double coeff = 1.0;
    };
    struct FieldBoundaryTerm {  // coeff * integral_tag w . phi
        int tag;
        const FemField* w;
        double coeff = 1.0;
    };
    struct GradientTerm {  // coeff * integral_D grad w : grad phi
        const FemField* w;
        double coeff = 1.0;
    };
    struct GradientClosureTerm {  // coeff * integral_D G(x) : grad phi
        std::function<Eigen::Matrix3d(const Eigen::Vector3d&)> G;
        double coeff = 1.0;
    };
    struct StrainTerm {  // coeff * integral_region M(x) : eps(phi)
        int region;  // 0 = everywhere
        std::function<Eigen::Matrix3d(const Eigen::Vector3d&)> M;
        double coeff = 1.0;
    };

    std::vector<VolumeTerm> volume;
    std::vector<BoundaryTerm> boundary;
    std::vector<FieldBoundaryTerm> field_boundary;
    std::vector<GradientTerm> gradient;
    std::vector<GradientClosureTerm> gradient_closure;
    std::vector<StrainTerm> strain;
    int quad_degree = 6;
};

/// Assembled two-phase elasticity operator with cached factorization:
/// a(u, phi) = integral of C_region eps(u) : eps(phi), where region 1 uses
/// C_in and region 2 uses C_out. Dirichlet dofs are the dofs supported on
/// facets whose tag appears in dirichlet_tags; they are condensed out and the
/// factorization is reused across right-hand sides.
class FemSystem {
public:
    FemSystem(const FemSpace& space, const ElasticTensor& C_in, const ElasticTensor& C_out,
              std::vector<int> dirichlet_tags);

    const FemSpace& space() const { return *space_; }
    const Eigen::SparseMatrix<double>& stiffness() const { return K_; }

    Eigen::VectorXd assemble_rhs(const RhsSpec& rhs) const;

    /// Solves a(u, phi) = rhs(phi) for all phi vanishing on the Dirichlet
    /// part, with trace g on it (g = nullptr means zero). Refuses if the
    /// relative residual on the free dofs exceeds 1e-10.
    FemField solve(const Eigen::VectorXd& rhs_vector,
                   const std::function<Eigen::Vector3d(const Eigen::Vector3d&)>& g = {}) const;
    FemField solve(const RhsSpec& rhs,
                   const std::function<Eigen::Vector3d(const Eigen::Vector3d&)>& g = {}) const;

    /// Energy pairing u^T K v = integral of C_region eps(v) : eps(u) over the
    /// whole space (both arguments may be nonzero on the Dirichlet part; the
    /// tensor acts on the second argument, which only matters without major
    /// symmetry).
    double energy(const FemField& u, const FemField& v) const;

    const std::vector<int>& dirichlet_dofs() const { return fixed_scalar_dofs_; }

private:
    const FemSpace* space_;
    Eigen::SparseMatrix<double> K_;
    Eigen::SparseMatrix<double> K_ff_, K_fc_;
    std::vector<int> fixed_scalar_dofs_;    // scalar dof ids with Dirichlet data
    std::vector<int> free_index_;           // vector dof -> free index or -1
    std::vector<int> free_dofs_;            // free index -> vector dof
    std::vector<int> fixed_dofs_;           // fixed index -> vector dof
    bool symmetric_;
    std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
    std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
};

/// Quadrature-based norms; all integrals use a fixed rule so that affine
/// scaling identities hold exactly.
double lp_norm(const FemField& u, int p);
double gradient_l2_norm(const FemField& u);
double boundary_l2_norm(const FemField& u, int tag);
/// eps * |u|_L2 + |grad u|_L2
double scaled_norm(const FemField& u, double eps);
/// |u|_L2 + |grad u|_L2 (sum form)
double h1_norm(const FemField& u);

/// integral of C_region eps(u) : eps(v) by direct quadrature (no assembled
/// matrix needed; u and v must share a space).
double energy_product(const FemField& u, const FemField& v, const ElasticTensor& C_in,
                      const ElasticTensor& C_out);

/// integral over region of M(x) : eps(u)
double strain_pairing(const FemField& u, int region,
                      const std::function<Eigen::Matrix3d(const Eigen::Vector3d&)>& M);

/// integral over region of f(x) . u
double volume_pairing(const FemField& u, int region,
                      const std::function<Eigen::Vector3d(const Eigen::Vector3d&)>& f);

/// integral of grad u : grad v, optionally restricted to a region (0 = all)
double gradient_product(const FemField& u, const FemField& v, int region = 0);

/// integral over region of G(x) : grad u
double gradient_closure_pairing(const FemField& u, int region,
                                const std::function<Eigen::Matrix3d(const Eigen::Vector3d&)>& G);

/// integral over the tagged boundary part of u . v
double boundary_pairing(const FemField& u, const FemField& v, int tag);

/// integral over the tagged boundary part of g(x) . u
double boundary_closure_pairing(const FemField& u, int tag,
                                const std::function<Eigen::Vector3d(const Eigen::Vector3d&)>& g);

/// Generic quadrature over cells of a region (0 = all): integrates
/// f(x, u(x), grad u(x)).
double field_integral(
    const FemField& u, int region,
    const std::function<double(const Eigen::Vector3d&, const Eigen::Vector3d&,
                               const Eigen::Matrix3d&)>& f);

/// Generic quadrature over the tagged boundary part: integrates
/// f(x, n(x), u(x)).
double field_boundary_integral(
    const FemField& u, int tag,
    const std::function<double(const Eigen::Vector3d&, const Eigen::Vector3d&,
                               const Eigen::Vector3d&)>& f);

/// Mean of u over a region, and mean of eps(u) over a region.
Eigen::Vector3d region_mean_value(const FemField& u, int region);
Eigen::Matrix3d region_mean_strain(const FemField& u, int region);
/// Means of x_k eps(u) over a region, k = 0..dim-1 (strain first moments).
std::array<Eigen::Matrix3d, 3> region_strain_moments(const FemField& u, int region);

}  // namespace topoderiv
