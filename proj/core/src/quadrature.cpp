#include "topoderiv/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace topoderiv {

QuadratureRule gauss_segment(int n) {
    if (n < 1) throw std::invalid_argument("gauss_segment: need at least one point");
    // Golub-Welsch: eigenvalues of the symmetric Jacobi matrix for Legendre
    // polynomials give the nodes on [-1, 1], the squared first eigenvector
    // components (times the total weight 2) give the weights.
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = k / std::sqrt(4.0 * k * k - 1.0);
        J(k - 1, k) = b;
        J(k, k - 1) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
    QuadratureRule rule;
    rule.degree = 2 * n - 1;
    rule.points.resize(n, 3);
    rule.points.setZero();
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        rule.points(i, 0) = 0.5 * (eig.eigenvalues()[i] + 1.0);  // map to [0, 1]
        const double v0 = eig.eigenvectors()(0, i);
        rule.weights[i] = 2.0 * v0 * v0 * 0.5;
    }
    return rule;
}

namespace {

// Triangle via x = u, y = v(1-u); Jacobian (1-u). A monomial x^i y^j pulls
// back to degree i+j+1 in u and j in v, so n_u = ceil((degree+2)/2) and
// n_v = ceil((degree+1)/2) Gauss points are exact.
QuadratureRule triangle_rule(int degree) {
    const int nu = (degree + 3) / 2;
    const int nv = (degree + 2) / 2;
    const QuadratureRule gu = gauss_segment(nu);
    const QuadratureRule gv = gauss_segment(nv);
    QuadratureRule rule;
    rule.degree = degree;
    rule.points.resize(nu * nv, 3);
    rule.points.setZero();
    rule.weights.resize(nu * nv);
    int k = 0;
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j, ++k) {
            const double u = gu.points(i, 0), v = gv.points(j, 0);
            rule.points(k, 0) = u;
            rule.points(k, 1) = v * (1.0 - u);
            rule.weights[k] = gu.weights[i] * gv.weights[j] * (1.0 - u);
        }
    return rule;
}

// Tetrahedron via x = u, y = v(1-u), z = w(1-u)(1-v); Jacobian (1-u)^2(1-v).
QuadratureRule tetrahedron_rule(int degree) {
    const int nu = (degree + 4) / 2;  // u-degree up to degree+2 from the Jacobian
    const int nv = (degree + 3) / 2;
    const int nw = (degree + 2) / 2;
    const QuadratureRule gu = gauss_segment(nu);
    const QuadratureRule gv = gauss_segment(nv);
    const QuadratureRule gw = gauss_segment(nw);
    QuadratureRule rule;
    rule.degree = degree;
    rule.points.resize(nu * nv * nw, 3);
    rule.weights.resize(nu * nv * nw);
    int k = 0;
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j)
            for (int l = 0; l < nw; ++l, ++k) {
                const double u = gu.points(i, 0), v = gv.points(j, 0), w = gw.points(l, 0);
                rule.points(k, 0) = u;
                rule.points(k, 1) = v * (1.0 - u);
                rule.points(k, 2) = w * (1.0 - u) * (1.0 - v);
                rule.weights[k] =
                    gu.weights[i] * gv.weights[j] * gw.weights[l] * (1.0 - u) * (1.0 - u) * (1.0 - v);
            }
    return rule;
}

}  // namespace

const QuadratureRule& simplex_rule(int dim, int degree) {
    static std::map<std::pair<int, int>, QuadratureRule> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find({dim, degree});
    if (it != cache.end()) return it->second;
    QuadratureRule rule;
    switch (dim) {
        case 1: rule = gauss_segment((degree + 2) / 2); break;
        case 2: rule = triangle_rule(degree); break;
        case 3: rule = tetrahedron_rule(degree); break;
        default: throw std::invalid_argument("simplex_rule: dim must be 1, 2, or 3");
    }
    return cache.emplace(std::make_pair(dim, degree), std::move(rule)).first->second;
}

}  // namespace topoderiv
