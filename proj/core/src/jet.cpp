#include "topoderiv/jet.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace topoderiv {

Eigen::Matrix3d LocalJet::strain() const { return 0.5 * (grad + grad.transpose()); }

Eigen::Matrix3d LocalJet::strain_gradient_along(const Eigen::Vector3d& x) const {
    Eigen::Matrix3d out = Eigen::Matrix3d::Zero();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                out(i, j) += 0.5 * (hess[i](j, k) + hess[j](i, k)) * x[k];
    return out;
}

Eigen::Vector3d LocalJet::gradient_along(const Eigen::Vector3d& x) const { return grad * x; }

namespace {

struct Monomial {
    std::array<int, 3> p;
    int total() const { return p[0] + p[1] + p[2]; }
};

std::vector<Monomial> monomials(int dim, int degree) {
    std::vector<Monomial> out;
    for (int i = 0; i <= degree; ++i)
        for (int j = 0; j + i <= degree; ++j) {
            if (dim == 2) {
                out.push_back({{i, j, 0}});
            } else {
                for (int k = 0; k + i + j <= degree; ++k) out.push_back({{i, j, k}});
            }
        }
    return out;
}

double eval_monomial(const Monomial& m, const Eigen::Vector3d& s) {
    double v = 1;
    for (int a = 0; a < 3; ++a)
        for (int q = 0; q < m.p[a]; ++q) v *= s[a];
    return v;
}

int find_monomial(const std::vector<Monomial>& ms, int i, int j, int k) {
    for (std::size_t n = 0; n < ms.size(); ++n)
        if (ms[n].p[0] == i && ms[n].p[1] == j && ms[n].p[2] == k) return static_cast<int>(n);
    return -1;
}

}  // namespace

LocalJet recover_jet(const FemField& u, const CellLocator& locator, const Eigen::Vector3d& x0,
                     double patch_radius, int fit_degree) {
    const FemSpace& space = *u.space;
    const int dim = space.dim();
    if (fit_degree < 2) throw std::invalid_argument("jet: fit degree must be at least 2");

    std::set<int> patch;
    for (int c : locator.cells_near(x0, patch_radius))
        for (int i = 0; i < space.dofs_per_cell(); ++i) {
            const int dof = space.cell_dof(c, i);
            if ((space.dof_point(dof) - x0).norm() <= patch_radius) patch.insert(dof);
        }

    const std::vector<Monomial> ms = monomials(dim, fit_degree);
    const int n_mono = static_cast<int>(ms.size());
    const int n_pts = static_cast<int>(patch.size());
    if (n_pts < n_mono) {
        std::ostringstream os;
        os << "jet: patch around (" << x0.transpose() << ") has " << n_pts
           << " dofs but a degree-" << fit_degree << " fit needs " << n_mono;
        throw std::runtime_error(os.str());
    }

    Eigen::MatrixXd A(n_pts, n_mono);
    Eigen::MatrixXd rhs(n_pts, dim);
    int row = 0;
    for (int dof : patch) {
        const Eigen::Vector3d s = (space.dof_point(dof) - x0) / patch_radius;
        for (int m = 0; m < n_mono; ++m) A(row, m) = eval_monomial(ms[m], s);
        for (int a = 0; a < dim; ++a) rhs(row, a) = u.coeffs[dof * dim + a];
        ++row;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() < n_mono) {
        std::ostringstream os;
        os << "jet: degenerate patch around (" << x0.transpose() << "); rank " << qr.rank()
           << " < " << n_mono;
        throw std::runtime_error(os.str());
    }
    const Eigen::MatrixXd coeff = qr.solve(rhs);  // n_mono x dim

    LocalJet jet;
    jet.dim = dim;
    const double r = patch_radius;
    const int i000 = find_monomial(ms, 0, 0, 0);
    for (int a = 0; a < dim; ++a) jet.value[a] = coeff(i000, a);
    for (int j = 0; j < dim; ++j) {
        std::array<int, 3> e{0, 0, 0};
        e[j] = 1;
        const int idx = find_monomial(ms, e[0], e[1], e[2]);
        for (int a = 0; a < dim; ++a) jet.grad(a, j) = coeff(idx, a) / r;
    }
    for (int j = 0; j < dim; ++j)
        for (int k = j; k < dim; ++k) {
            std::array<int, 3> e{0, 0, 0};
            ++e[j];
            ++e[k];
            const int idx = find_monomial(ms, e[0], e[1], e[2]);
            const double scale = (j == k ? 2.0 : 1.0) / (r * r);
            for (int a = 0; a < dim; ++a) {
                jet.hess[a](j, k) = coeff(idx, a) * scale;
                jet.hess[a](k, j) = jet.hess[a](j, k);
            }
        }
    return jet;
}

int FieldEvaluator::locate_or_throw(const Eigen::Vector3d& x, Eigen::Vector4d& bary) const {
    const int cell = locator_->locate(x, bary);
    if (cell < 0) {
        std::ostringstream os;
        os << "field evaluation outside the mesh at (" << x.transpose() << ")";
        throw std::runtime_error(os.str());
    }
    return cell;
}

Eigen::Vector3d FieldEvaluator::value(const Eigen::Vector3d& x) const {
    Eigen::Vector4d bary;
    const int cell = locate_or_throw(x, bary);
    return u_->value(cell, bary);
}

Eigen::Matrix3d FieldEvaluator::gradient(const Eigen::Vector3d& x) const {
    Eigen::Vector4d bary;
    const int cell = locate_or_throw(x, bary);
    return u_->gradient(cell, bary);
}

bool FieldEvaluator::inside(const Eigen::Vector3d& x) const {
    Eigen::Vector4d bary;
    return locator_->locate(x, bary) >= 0;
}

}  // namespace topoderiv
