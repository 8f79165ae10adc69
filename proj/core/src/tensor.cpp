#include "topoderiv/tensor.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

namespace topoderiv {

namespace {
constexpr double kSqrtHalf = 0.70710678118654752440;
}

ElasticTensor::ElasticTensor(int dim, Eigen::MatrixXd rep) : dim_(dim), rep_(std::move(rep)) {
    if (dim_ != 2 && dim_ != 3)
        throw std::invalid_argument("ElasticTensor: dimension must be 2 or 3");
    if (rep_.rows() != dim_ * dim_ || rep_.cols() != dim_ * dim_)
        throw std::invalid_argument("ElasticTensor: representation must be (d*d) x (d*d)");
    build_sym();
}

Eigen::MatrixXd ElasticTensor::apply(const Eigen::MatrixXd& E) const {
    if (E.rows() != dim_ || E.cols() != dim_)
        throw std::invalid_argument("ElasticTensor::apply: dimension mismatch");
    Eigen::VectorXd v(dim_ * dim_);
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) v[i * dim_ + j] = E(i, j);
    Eigen::VectorXd w = rep_ * v;
    Eigen::MatrixXd R(dim_, dim_);
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) R(i, j) = w[i * dim_ + j];
    return R;
}

ElasticTensor ElasticTensor::transposed() const {
    return ElasticTensor(dim_, rep_.transpose());
}

void ElasticTensor::build_sym() {
    const int nv = voigt_size(dim_);
    sym_.resize(nv, nv);
    for (int J = 0; J < nv; ++J) {
        Eigen::VectorXd ej = Eigen::VectorXd::Zero(nv);
        ej[J] = 1.0;
        Eigen::MatrixXd EJ = unvoigt(dim_, ej);
        Eigen::MatrixXd CEJ = apply(EJ);
        sym_.col(J) = voigt(dim_, CEJ);
    }
}

double ElasticTensor::min_symmetric_eigenvalue() const {
    Eigen::MatrixXd S = 0.5 * (sym_ + sym_.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    return es.eigenvalues().minCoeff();
}

void ElasticTensor::validate() const {
    const double lam = min_symmetric_eigenvalue();
    if (!(lam > 0.0)) {
        std::ostringstream os;
        os << "ElasticTensor: bilinear form not positive definite on symmetric matrices"
           << " (min eigenvalue " << lam << ")";
        throw std::invalid_argument(os.str());
    }
}

bool ElasticTensor::is_zero(double tol) const {
    return rep_.cwiseAbs().maxCoeff() <= tol;
}

ElasticTensor ElasticTensor::operator-(const ElasticTensor& other) const {
    if (other.dim_ != dim_) throw std::invalid_argument("ElasticTensor: dimension mismatch");
    return ElasticTensor(dim_, rep_ - other.rep_);
}

ElasticTensor ElasticTensor::operator*(double s) const {
    return ElasticTensor(dim_, rep_ * s);
}

Eigen::VectorXd ElasticTensor::voigt(int dim, const Eigen::MatrixXd& E) {
    const int nv = voigt_size(dim);
    Eigen::VectorXd v(nv);
    for (int i = 0; i < dim; ++i) v[i] = 0.5 * (E(i, i) + E(i, i));
    int k = dim;
    for (int i = 0; i < dim; ++i)
        for (int j = i + 1; j < dim; ++j) v[k++] = kSqrtHalf * (E(i, j) + E(j, i));
    return v;
}

Eigen::MatrixXd ElasticTensor::unvoigt(int dim, const Eigen::VectorXd& v) {
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) E(i, i) = v[i];
    int k = dim;
    for (int i = 0; i < dim; ++i)
        for (int j = i + 1; j < dim; ++j) {
            E(i, j) = E(j, i) = kSqrtHalf * v[k++];
        }
    return E;
}

ElasticTensor isotropic_tensor(double lambda, double mu, int dim) {
    if (!(mu > 0.0) || !(dim * lambda + 2.0 * mu > 0.0)) {
        // Report the eigenvalue that fails: the symmetric restriction of the
        // Lame law has eigenvalues 2*mu (shear/deviatoric) and d*lambda + 2*mu
        // (volumetric).
        const double bad = std::min(2.0 * mu, dim * lambda + 2.0 * mu);
        std::ostringstream os;
        os << "isotropic_tensor: ellipticity violated, min eigenvalue " << bad;
        throw std::invalid_argument(os.str());
    }
    const int n = dim * dim;
    Eigen::MatrixXd rep = Eigen::MatrixXd::Zero(n, n);
    auto idx = [dim](int i, int j) { return i * dim + j; };
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
            // row (i,j) of C E = mu (E_ij + E_ji) + lambda delta_ij tr(E)
            rep(idx(i, j), idx(i, j)) += mu;
            rep(idx(i, j), idx(j, i)) += mu;
            if (i == j)
                for (int k = 0; k < dim; ++k) rep(idx(i, i), idx(k, k)) += lambda;
        }
    return ElasticTensor(dim, rep);
}

Eigen::MatrixXd apply_tensor(const ElasticTensor& C, const Eigen::MatrixXd& E) {
    return C.apply(E);
}

}  // namespace topoderiv
