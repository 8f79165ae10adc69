#include "topoderiv/fem.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "topoderiv/quadrature.hpp"

namespace topoderiv {

namespace {

[[noreturn]] void fem_fail(const std::string& msg) { throw std::runtime_error("fem: " + msg); }

Eigen::Vector4d bary_from_ref(int dim, const Eigen::Vector3d& ref) {
    Eigen::Vector4d b = Eigen::Vector4d::Zero();
    double sum = 0;
    for (int i = 0; i < dim; ++i) {
        b[i + 1] = ref[i];
        sum += ref[i];
    }
    b[0] = 1.0 - sum;
    return b;
}

std::array<int, 2> edge_key(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

constexpr int kEdges2d[3][2] = {{0, 1}, {0, 2}, {1, 2}};
constexpr int kEdges3d[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};

}  // namespace

FemSpace::FemSpace(const Mesh& mesh, int order) : mesh_(&mesh), order_(order) {
    if (order != 1 && order != 2) fem_fail("order must be 1 or 2");
    const int dim = mesh.dim;
    const int nv = dim + 1;
    dofs_per_cell_ = order == 1 ? nv : (dim == 2 ? 6 : 10);

    cell_dofs_.resize(mesh.num_cells());
    dof_points_ = mesh.nodes;
    int next = mesh.num_nodes();
    const auto edges2 = kEdges2d;
    const auto edges3 = kEdges3d;
    const int n_edges = dim == 2 ? 3 : 6;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        auto& dofs = cell_dofs_[c];
        dofs.fill(-1);
        for (int i = 0; i < nv; ++i) dofs[i] = mesh.cells[c][i];
        if (order == 2) {
            for (int e = 0; e < n_edges; ++e) {
                const int a = mesh.cells[c][dim == 2 ? edges2[e][0] : edges3[e][0]];
                const int b = mesh.cells[c][dim == 2 ? edges2[e][1] : edges3[e][1]];
                auto [it, inserted] = edge_dofs_.try_emplace(edge_key(a, b), next);
                if (inserted) {
                    dof_points_.push_back(0.5 * (mesh.nodes[a] + mesh.nodes[b]));
                    ++next;
                }
                dofs[nv + e] = it->second;
            }
        }
    }
    num_scalar_dofs_ = next;

    jac_inv_t_.resize(mesh.num_cells());
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const Eigen::Matrix3d J = mesh.cell_jacobian(c);
        Eigen::Matrix3d inv_t = Eigen::Matrix3d::Zero();
        if (dim == 2)
            inv_t.topLeftCorner<2, 2>() = J.topLeftCorner<2, 2>().inverse().transpose();
        else
            inv_t = J.inverse().transpose();
        jac_inv_t_[c] = inv_t;
    }
}

int FemSpace::edge_dof(int a, int b) const {
    auto it = edge_dofs_.find(edge_key(a, b));
    if (it == edge_dofs_.end()) fem_fail("no midpoint dof on requested edge");
    return it->second;
}

void FemSpace::shape_values(const Eigen::Vector4d& bary, double* values) const {
    const int dim = mesh_->dim;
    const int nv = dim + 1;
    if (order_ == 1) {
        for (int a = 0; a < nv; ++a) values[a] = bary[a];
        return;
    }
    for (int a = 0; a < nv; ++a) values[a] = bary[a] * (2.0 * bary[a] - 1.0);
    const int n_edges = dim == 2 ? 3 : 6;
    for (int e = 0; e < n_edges; ++e) {
        const int a = dim == 2 ? kEdges2d[e][0] : kEdges3d[e][0];
        const int b = dim == 2 ? kEdges2d[e][1] : kEdges3d[e][1];
        values[nv + e] = 4.0 * bary[a] * bary[b];
    }
}

void FemSpace::shape_gradients(int cell, const Eigen::Vector4d& bary,
                               Eigen::Matrix<double, 10, 3>& grads) const {
    const int dim = mesh_->dim;
    const int nv = dim + 1;
    const Eigen::Matrix3d& inv_t = jac_inv_t_[cell];
    Eigen::Vector3d grad_l[4];
    grad_l[0] = Eigen::Vector3d::Zero();
    for (int a = 1; a < nv; ++a) {
        grad_l[a] = inv_t.col(a - 1);
        grad_l[0] -= grad_l[a];
    }
    grads.setZero();
    if (order_ == 1) {
        for (int a = 0; a < nv; ++a) grads.row(a) = grad_l[a].transpose();
        return;
    }
    for (int a = 0; a < nv; ++a) grads.row(a) = (4.0 * bary[a] - 1.0) * grad_l[a].transpose();
    const int n_edges = dim == 2 ? 3 : 6;
    for (int e = 0; e < n_edges; ++e) {
        const int a = dim == 2 ? kEdges2d[e][0] : kEdges3d[e][0];
        const int b = dim == 2 ? kEdges2d[e][1] : kEdges3d[e][1];
        grads.row(nv + e) = 4.0 * (bary[b] * grad_l[a] + bary[a] * grad_l[b]).transpose();
    }
}

std::vector<int> FemSpace::facet_dofs(const Mesh::Facet& facet) const {
    const int dim = mesh_->dim;
    std::vector<int> dofs(facet.nodes.begin(), facet.nodes.begin() + dim);
    if (order_ == 2) {
        if (dim == 2) {
            dofs.push_back(edge_dof(facet.nodes[0], facet.nodes[1]));
        } else {
            dofs.push_back(edge_dof(facet.nodes[0], facet.nodes[1]));
            dofs.push_back(edge_dof(facet.nodes[0], facet.nodes[2]));
            dofs.push_back(edge_dof(facet.nodes[1], facet.nodes[2]));
        }
    }
    return dofs;
}

Eigen::Vector3d FemField::value(int cell, const Eigen::Vector4d& bary) const {
    const int dim = space->dim();
    double N[10];
    space->shape_values(bary, N);
    Eigen::Vector3d v = Eigen::Vector3d::Zero();
    for (int i = 0; i < space->dofs_per_cell(); ++i) {
        const int dof = space->cell_dof(cell, i);
        for (int a = 0; a < dim; ++a) v[a] += N[i] * coeffs[dof * dim + a];
    }
    return v;
}

Eigen::Matrix3d FemField::gradient(int cell, const Eigen::Vector4d& bary) const {
    const int dim = space->dim();
    Eigen::Matrix<double, 10, 3> G;
    space->shape_gradients(cell, bary, G);
    Eigen::Matrix3d g = Eigen::Matrix3d::Zero();
    for (int i = 0; i < space->dofs_per_cell(); ++i) {
        const int dof = space->cell_dof(cell, i);
        for (int a = 0; a < dim; ++a) g.row(a) += coeffs[dof * dim + a] * G.row(i);
    }
    return g;
}

FemField interpolate(const FemSpace& space,
                     const std::function<Eigen::Vector3d(const Eigen::Vector3d&)>& f) {
    FemField u(space);
    const int dim = space.dim();
    for (int dof = 0; dof < space.num_scalar_dofs(); ++dof) {
        const Eigen::Vector3d v = f(space.dof_point(dof));
        for (int a = 0; a < dim; ++a) u.coeffs[dof * dim + a] = v[a];
    }
    return u;
}

namespace {

// Columns of the strain interpolation matrix: voigt coordinates of
// sym(e_a otimes grad N_i) for each (scalar dof, component) pair.
void fill_strain_matrix(int dim, int n_dofs, const Eigen::Matrix<double, 10, 3>& grads,
                        Eigen::MatrixXd& B) {
    Eigen::MatrixXd E(dim, dim);
    for (int i = 0; i < n_dofs; ++i)
        for (int a = 0; a < dim; ++a) {
            E.setZero();
            for (int j = 0; j < dim; ++j) {
                E(a, j) += 0.5 * grads(i, j);
                E(j, a) += 0.5 * grads(i, j);
            }
            B.col(i * dim + a) = ElasticTensor::voigt(dim, E);
        }
}

double jacobian_factor(const Mesh& mesh, int cell) {
    return mesh.cell_measure(cell) * (mesh.dim == 2 ? 2.0 : 6.0);
}

struct FacetQuadPoint {
    Eigen::Vector3d x;
    Eigen::Vector4d cell_bary;
    double weight;  // includes the facet measure
};

std::vector<FacetQuadPoint> facet_quadrature(const Mesh& mesh, const Mesh::Facet& facet,
                                             int degree) {
    std::vector<FacetQuadPoint> out;
    if (mesh.dim == 2) {
        const QuadratureRule rule = gauss_segment((degree + 2) / 2);
        const Eigen::Vector3d a = mesh.nodes[facet.nodes[0]];
        const Eigen::Vector3d b = mesh.nodes[facet.nodes[1]];
        const double len = mesh.facet_measure(facet);
        for (int q = 0; q < rule.size(); ++q) {
            const double t = rule.points(q, 0);
            FacetQuadPoint p;
            p.x = (1.0 - t) * a + t * b;
            p.cell_bary = barycentric_coordinates(mesh, facet.cell, p.x);
            p.weight = rule.weights[q] * len;
            out.push_back(p);
        }
    } else {
        const QuadratureRule& rule = simplex_rule(2, degree);
        const Eigen::Vector3d a = mesh.nodes[facet.nodes[0]];
        const Eigen::Vector3d b = mesh.nodes[facet.nodes[1]];
        const Eigen::Vector3d c = mesh.nodes[facet.nodes[2]];
        const double area2 = 2.0 * mesh.facet_measure(facet);
        for (int q = 0; q < rule.size(); ++q) {
            const double s = rule.points(q, 0), t = rule.points(q, 1);
            FacetQuadPoint p;
            p.x = (1.0 - s - t) * a + s * b + t * c;
            p.cell_bary = barycentric_coordinates(mesh, facet.cell, p.x);
            p.weight = rule.weights[q] * area2;
            out.push_back(p);
        }
    }
    return out;
}

}  // namespace

FemSystem::FemSystem(const FemSpace& space, const ElasticTensor& C_in,
                     const ElasticTensor& C_out, std::vector<int> dirichlet_tags)
    : space_(&space) {
    const Mesh& mesh = space.mesh();
    const int dim = mesh.dim;
    const int nd = space.dofs_per_cell();
    const int n_vec = space.num_vector_dofs();
    if (C_in.dim() != dim || C_out.dim() != dim) fem_fail("tensor dimension mismatch");

    const Eigen::MatrixXd D_in = C_in.sym_matrix();
    const Eigen::MatrixXd D_out = C_out.sym_matrix();
    symmetric_ = (D_in - D_in.transpose()).norm() <= 1e-12 * (1.0 + D_in.norm()) &&
                 (D_out - D_out.transpose()).norm() <= 1e-12 * (1.0 + D_out.norm());

    const QuadratureRule& rule = simplex_rule(dim, std::max(1, 2 * (space.order() - 1)));
    const int vs = ElasticTensor::voigt_size(dim);
    Eigen::MatrixXd B(vs, nd * dim);
    Eigen::Matrix<double, 10, 3> grads;
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(mesh.num_cells()) * nd * dim * nd * dim);
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const Eigen::MatrixXd& D = mesh.cell_region[c] == 1 ? D_in : D_out;
        const double jac = jacobian_factor(mesh, c);
        Eigen::MatrixXd K_cell = Eigen::MatrixXd::Zero(nd * dim, nd * dim);
        for (int q = 0; q < rule.size(); ++q) {
            const Eigen::Vector4d bary = bary_from_ref(dim, rule.points.row(q).transpose());
            space.shape_gradients(c, bary, grads);
            fill_strain_matrix(dim, nd, grads, B);
            K_cell.noalias() += (jac * rule.weights[q]) * B.transpose() * D * B;
        }
        for (int i = 0; i < nd; ++i)
            for (int a = 0; a < dim; ++a)
                for (int j = 0; j < nd; ++j)
                    for (int b = 0; b < dim; ++b)
                        triplets.emplace_back(space.cell_dof(c, i) * dim + a,
                                              space.cell_dof(c, j) * dim + b,
                                              K_cell(i * dim + a, j * dim + b));
    }
    K_.resize(n_vec, n_vec);
    K_.setFromTriplets(triplets.begin(), triplets.end());

    // Dirichlet dofs from tagged facets
    std::vector<bool> fixed(space.num_scalar_dofs(), false);
    for (const auto& facet : mesh.boundary_facets) {
        bool match = false;
        for (int t : dirichlet_tags) match |= facet.tag == t;
        if (!match) continue;
        for (int dof : space.facet_dofs(facet)) fixed[dof] = true;
    }
    for (int dof = 0; dof < space.num_scalar_dofs(); ++dof)
        if (fixed[dof]) fixed_scalar_dofs_.push_back(dof);
    if (fixed_scalar_dofs_.empty()) fem_fail("no Dirichlet dofs; the operator would be singular");

    free_index_.assign(n_vec, -1);
    std::vector<int> fixed_index(n_vec, -1);
    for (int v = 0; v < n_vec; ++v) {
        if (fixed[v / dim]) {
            fixed_index[v] = static_cast<int>(fixed_dofs_.size());
            fixed_dofs_.push_back(v);
        } else {
            free_index_[v] = static_cast<int>(free_dofs_.size());
            free_dofs_.push_back(v);
        }
    }

    std::vector<Eigen::Triplet<double>> ff, fc;
    for (int col = 0; col < K_.outerSize(); ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator it(K_, col); it; ++it) {
            const int r = static_cast<int>(it.row());
            if (free_index_[r] < 0) continue;
            if (free_index_[col] >= 0)
                ff.emplace_back(free_index_[r], free_index_[col], it.value());
            else
                fc.emplace_back(free_index_[r], fixed_index[col], it.value());
        }
    K_ff_.resize(static_cast<int>(free_dofs_.size()), static_cast<int>(free_dofs_.size()));
    K_ff_.setFromTriplets(ff.begin(), ff.end());
    K_fc_.resize(static_cast<int>(free_dofs_.size()), static_cast<int>(fixed_dofs_.size()));
    K_fc_.setFromTriplets(fc.begin(), fc.end());

    if (symmetric_) {
        ldlt_ = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
        ldlt_->compute(K_ff_);
        if (ldlt_->info() != Eigen::Success) fem_fail("LDLT factorization failed");
    } else {
        lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
        lu_->compute(K_ff_);
        if (lu_->info() != Eigen::Success) fem_fail("LU factorization failed");
    }
}

Eigen::VectorXd FemSystem::assemble_rhs(const RhsSpec& rhs) const {
    const FemSpace& space = *space_;
    const Mesh& mesh = space.mesh();
    const int dim = mesh.dim;
    const int nd = space.dofs_per_cell();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(space.num_vector_dofs());

    for (const auto& term : rhs.gradient)
        if (term.w->space != space_) fem_fail("gradient term field lives on a different space");
    for (const auto& term : rhs.field_boundary)
        if (term.w->space != space_) fem_fail("boundary term field lives on a different space");

    const bool any_volume = !rhs.volume.empty() || !rhs.strain.empty() ||
                            !rhs.gradient.empty() || !rhs.gradient_closure.empty();
    if (any_volume) {
        const QuadratureRule& rule = simplex_rule(dim, rhs.quad_degree);
        double N[10];
        Eigen::Matrix<double, 10, 3> grads;
        for (int c = 0; c < mesh.num_cells(); ++c) {
            const int region = mesh.cell_region[c];
            const double jac = jacobian_factor(mesh, c);
            for (int q = 0; q < rule.size(); ++q) {
                const Eigen::Vector4d bary = bary_from_ref(dim, rule.points.row(q).transpose());
                const double wq = jac * rule.weights[q];
                Eigen::Vector3d x = Eigen::Vector3d::Zero();
                for (int i = 0; i <= dim; ++i) x += bary[i] * mesh.nodes[mesh.cells[c][i]];
                space.shape_values(bary, N);
                space.shape_gradients(c, bary, grads);

                Eigen::Vector3d fval = Eigen::Vector3d::Zero();
                for (const auto& term : rhs.volume)
                    if (term.region == 0 || term.region == region)
                        fval += term.coeff * term.f(x);
                Eigen::Matrix3d gval = Eigen::Matrix3d::Zero();
                for (const auto& term : rhs.gradient)
                    gval += term.coeff * term.w->gradient(c, bary);
                for (const auto& term : rhs.gradient_closure) gval += term.coeff * term.G(x);
                Eigen::Matrix3d sval = Eigen::Matrix3d::Zero();
                for (const auto& term : rhs.strain)
                    if (term.region == 0 || term.region == region) {
                        const Eigen::Matrix3d M = term.M(x);
                        sval += term.coeff * 0.5 * (M + M.transpose());
                    }

                const bool has_f = fval.squaredNorm() > 0;
                const bool has_g = gval.squaredNorm() > 0 || sval.squaredNorm() > 0;
                if (!has_f && !has_g) continue;
                for (int i = 0; i < nd; ++i) {
                    const int dof = space.cell_dof(c, i);
                    for (int a = 0; a < dim; ++a) {
                        double val = 0;
                        if (has_f) val += N[i] * fval[a];
                        if (has_g)
                            for (int j = 0; j < dim; ++j)
                                val += (gval(a, j) + sval(a, j)) * grads(i, j);
                        b[dof * dim + a] += wq * val;
                    }
                }
            }
        }
    }

    if (!rhs.boundary.empty() || !rhs.field_boundary.empty()) {
        double N[10];
        for (const auto& facet : mesh.boundary_facets) {
            bool needed = false;
            for (const auto& term : rhs.boundary) needed |= term.tag == facet.tag;
            for (const auto& term : rhs.field_boundary) needed |= term.tag == facet.tag;
            if (!needed) continue;
            const Eigen::Vector3d n = mesh.facet_normal(facet);
            for (const auto& qp : facet_quadrature(mesh, facet, rhs.quad_degree)) {
                Eigen::Vector3d gval = Eigen::Vector3d::Zero();
                for (const auto& term : rhs.boundary)
                    if (term.tag == facet.tag) gval += term.coeff * term.g(qp.x, n);
                for (const auto& term : rhs.field_boundary)
                    if (term.tag == facet.tag)
                        gval += term.coeff * term.w->value(facet.cell, qp.cell_bary);
                if (gval.squaredNorm() == 0) continue;
                space.shape_values(qp.cell_bary, N);
                for (int i = 0; i < nd; ++i) {
                    const int dof = space.cell_dof(facet.cell, i);
                    for (int a = 0; a < dim; ++a) b[dof * dim + a] += qp.weight * N[i] * gval[a];
                }
            }
        }
    }
    return b;
}

FemField FemSystem::solve(const Eigen::VectorXd& rhs_vector,
                          const std::function<Eigen::Vector3d(const Eigen::Vector3d&)>& g) const {
    const FemSpace& space = *space_;
    const int dim = space.dim();
    if (rhs_vector.size() != space.num_vector_dofs()) fem_fail("rhs size mismatch");

    Eigen::VectorXd u_c = Eigen::VectorXd::Zero(static_cast<int>(fixed_dofs_.size()));
    if (g) {
        for (std::size_t k = 0; k < fixed_dofs_.size(); ++k) {
            const int v = fixed_dofs_[k];
            u_c[static_cast<int>(k)] = g(space.dof_point(v / dim))[v % dim];
        }
    }

    Eigen::VectorXd b_f(static_cast<int>(free_dofs_.size()));
    for (std::size_t k = 0; k < free_dofs_.size(); ++k)
        b_f[static_cast<int>(k)] = rhs_vector[free_dofs_[k]];
    if (u_c.size() > 0) b_f -= K_fc_ * u_c;

    const Eigen::VectorXd x = symmetric_ ? ldlt_->solve(b_f).eval() : lu_->solve(b_f).eval();
    const double res = (K_ff_ * x - b_f).norm();
    const double scale = std::max(b_f.norm(), (K_ff_ * x).norm());
    if (scale > 0 && res > 1e-10 * scale) {
        std::ostringstream os;
        os << "solver residual too large: " << res / scale;
        fem_fail(os.str());
    }

    FemField u(space);
    for (std::size_t k = 0; k < free_dofs_.size(); ++k)
        u.coeffs[free_dofs_[k]] = x[static_cast<int>(k)];
    for (std::size_t k = 0; k < fixed_dofs_.size(); ++k)
        u.coeffs[fixed_dofs_[k]] = u_c[static_cast<int>(k)];
    return u;
}

FemField FemSystem::solve(const RhsSpec& rhs,
                          const std::function<Eigen::Vector3d(const Eigen::Vector3d&)>& g) const {
    return solve(assemble_rhs(rhs), g);
}

double FemSystem::energy(const FemField& u, const FemField& v) const {
    return u.coeffs.dot(K_ * v.coeffs);
}

namespace {

constexpr int kNormQuadDegree = 6;

template <typename F>
double cell_integral(const FemSpace& space, int region, F&& evaluate) {
    const Mesh& mesh = space.mesh();
    const QuadratureRule& rule = simplex_rule(mesh.dim, kNormQuadDegree);
    double total = 0;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        if (region != 0 && mesh.cell_region[c] != region) continue;
        const double jac = jacobian_factor(mesh, c);
        for (int q = 0; q < rule.size(); ++q) {
            const Eigen::Vector4d bary = bary_from_ref(mesh.dim, rule.points.row(q).transpose());
            Eigen::Vector3d x = Eigen::Vector3d::Zero();
            for (int i = 0; i <= mesh.dim; ++i) x += bary[i] * mesh.nodes[mesh.cells[c][i]];
            total += jac * rule.weights[q] * evaluate(c, bary, x);
        }
    }
    return total;
}

}  // namespace

double lp_norm(const FemField& u, int p) {
    if (p != 1 && p != 2) fem_fail("lp_norm supports p = 1 and p = 2");
    const double integral = cell_integral(
        *u.space, 0, [&](int c, const Eigen::Vector4d& bary, const Eigen::Vector3d&) {
            const double n = u.value(c, bary).norm();
            return p == 1 ? n : n * n;
        });
    return p == 1 ? integral : std::sqrt(integral);
}

double gradient_l2_norm(const FemField& u) {
    const double integral = cell_integral(
        *u.space, 0, [&](int c, const Eigen::Vector4d& bary, const Eigen::Vector3d&) {
            return u.gradient(c, bary).squaredNorm();
        });
    return std::sqrt(integral);
}

double boundary_l2_norm(const FemField& u, int tag) {
    const Mesh& mesh = u.space->mesh();
    double total = 0;
    for (const auto& facet : mesh.boundary_facets) {
        if (facet.tag != tag) continue;
        for (const auto& qp : facet_quadrature(mesh, facet, kNormQuadDegree))
            total += qp.weight * u.value(facet.cell, qp.cell_bary).squaredNorm();
    }
    return std::sqrt(total);
}

double scaled_norm(const FemField& u, double eps) {
    return eps * lp_norm(u, 2) + gradient_l2_norm(u);
}

double h1_norm(const FemField& u) { return lp_norm(u, 2) + gradient_l2_norm(u); }

double energy_product(const FemField& u, const FemField& v, const ElasticTensor& C_in,
                      const ElasticTensor& C_out) {
    if (u.space != v.space) fem_fail("energy_product arguments live on different spaces");
    const int dim = u.space->dim();
    return cell_integral(*u.space, 0,
                         [&](int c, const Eigen::Vector4d& bary, const Eigen::Vector3d&) {
                             const ElasticTensor& C =
                                 u.space->mesh().cell_region[c] == 1 ? C_in : C_out;
                             const Eigen::Matrix3d gu = u.gradient(c, bary);
                             const Eigen::Matrix3d gv = v.gradient(c, bary);
                             const Eigen::MatrixXd eu =
                                 0.5 * (gu + gu.transpose()).topLeftCorner(dim, dim);
                             const Eigen::MatrixXd ev =
                                 0.5 * (gv + gv.transpose()).topLeftCorner(dim, dim);
                             return (C.apply(eu).array() * ev.array()).sum();
                         });
}

double strain_pairing(const FemField& u, int region,
                      const std::function<Eigen::Matrix3d(const Eigen::Vector3d&)>& M) {
    return cell_integral(*u.space, region,
                         [&](int c, const Eigen::Vector4d& bary, const Eigen::Vector3d& x) {
                             const Eigen::Matrix3d g = u.gradient(c, bary);
                             const Eigen::Matrix3d e = 0.5 * (g + g.transpose());
                             return (M(x).array() * e.array()).sum();
                         });
}

double volume_pairing(const FemField& u, int region,
                      const std::function<Eigen::Vector3d(const Eigen::Vector3d&)>& f) {
    return cell_integral(*u.space, region,
                         [&](int c, const Eigen::Vector4d& bary, const Eigen::Vector3d& x) {
                             return f(x).dot(u.value(c, bary));
                         });
}

double gradient_product(const FemField& u, const FemField& v, int region) {
    if (u.space != v.space) fem_fail("gradient_product arguments live on different spaces");
    return cell_integral(*u.space, region,
                         [&](int c, const Eigen::Vector4d& bary, const Eigen::Vector3d&) {
                             return (u.gradient(c, bary).array() * v.gradient(c, bary).array())
                                 .sum();
                         });
}

double gradient_closure_pairing(const FemField& u, int region,
                                const std::function<Eigen::Matrix3d(const Eigen::Vector3d&)>& G) {
    return cell_integral(*u.space, region,
                         [&](int c, const Eigen::Vector4d& bary, const Eigen::Vector3d& x) {
                             return (G(x).array() * u.gradient(c, bary).array()).sum();
                         });
}

double boundary_pairing(const FemField& u, const FemField& v, int tag) {
    if (u.space != v.space) fem_fail("boundary_pairing arguments live on different spaces");
    const Mesh& mesh = u.space->mesh();
    double total = 0;
    for (const auto& facet : mesh.boundary_facets) {
        if (facet.tag != tag) continue;
        for (const auto& qp : facet_quadrature(mesh, facet, kNormQuadDegree))
            total += qp.weight *
                     u.value(facet.cell, qp.cell_bary).dot(v.value(facet.cell, qp.cell_bary));
    }
    return total;
}

double boundary_closure_pairing(const FemField& u, int tag,
                                const std::function<Eigen::Vector3d(const Eigen::Vector3d&)>& g) {
    const Mesh& mesh = u.space->mesh();
    double total = 0;
    for (const auto& facet : mesh.boundary_facets) {
        if (facet.tag != tag) continue;
        for (const auto& qp : facet_quadrature(mesh, facet, kNormQuadDegree))
            total += qp.weight * g(qp.x).dot(u.value(facet.cell, qp.cell_bary));
    }
    return total;
}

double field_integral(
    const FemField& u, int region,
    const std::function<double(const Eigen::Vector3d&, const Eigen::Vector3d&,
                               const Eigen::Matrix3d&)>& f) {
    return cell_integral(*u.space, region,
                         [&](int c, const Eigen::Vector4d& bary, const Eigen::Vector3d& x) {
                             return f(x, u.value(c, bary), u.gradient(c, bary));
                         });
}

double field_boundary_integral(
    const FemField& u, int tag,
    const std::function<double(const Eigen::Vector3d&, const Eigen::Vector3d&,
                               const Eigen::Vector3d&)>& f) {
    const Mesh& mesh = u.space->mesh();
    double total = 0;
    for (const auto& facet : mesh.boundary_facets) {
        if (facet.tag != tag) continue;
        const Eigen::Vector3d n = mesh.facet_normal(facet);
        for (const auto& qp : facet_quadrature(mesh, facet, kNormQuadDegree))
            total += qp.weight * f(qp.x, n, u.value(facet.cell, qp.cell_bary));
    }
    return total;
}

Eigen::Vector3d region_mean_value(const FemField& u, int region) {
    const double measure = u.space->mesh().region_measure(region);
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (int a = 0; a < 3; ++a) {
        mean[a] = cell_integral(*u.space, region,
                                [&](int c, const Eigen::Vector4d& bary, const Eigen::Vector3d&) {
                                    return u.value(c, bary)[a];
                                }) /
                  measure;
    }
    return mean;
}

Eigen::Matrix3d region_mean_strain(const FemField& u, int region) {
    const double measure = u.space->mesh().region_measure(region);
    Eigen::Matrix3d mean = Eigen::Matrix3d::Zero();
    for (int r = 0; r < 3; ++r)
        for (int s = 0; s < 3; ++s)
            mean(r, s) = cell_integral(*u.space, region,
                                       [&](int c, const Eigen::Vector4d& bary,
                                           const Eigen::Vector3d&) {
                                           const Eigen::Matrix3d g = u.gradient(c, bary);
                                           return 0.5 * (g(r, s) + g(s, r));
                                       }) /
                         measure;
    return mean;
}

std::array<Eigen::Matrix3d, 3> region_strain_moments(const FemField& u, int region) {
    const Mesh& mesh = u.space->mesh();
    const double measure = mesh.region_measure(region);
    std::array<Eigen::Matrix3d, 3> moments = {Eigen::Matrix3d::Zero(), Eigen::Matrix3d::Zero(),
                                              Eigen::Matrix3d::Zero()};
    for (int k = 0; k < mesh.dim; ++k)
        for (int r = 0; r < 3; ++r)
            for (int s = r; s < 3; ++s) {
                const double m =
                    cell_integral(*u.space, region,
                                  [&](int c, const Eigen::Vector4d& bary,
                                      const Eigen::Vector3d& x) {
                                      const Eigen::Matrix3d g = u.gradient(c, bary);
                                      return x[k] * 0.5 * (g(r, s) + g(s, r));
                                  }) /
                    measure;
                moments[k](r, s) = m;
                moments[k](s, r) = m;
            }
    return moments;
}

}  // namespace topoderiv
