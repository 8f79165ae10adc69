#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace topoderiv {

/// Linear map on d x d matrices, stored as a dense (d*d) x (d*d) matrix acting
/// on row-major vectorized arguments.  This is general enough for fully
/// anisotropic material laws; the isotropic Lame law is provided as a
/// convenience constructor.
///
/// Only the action on symmetric matrices enters the elastic bilinear form, so
/// assembly works with the symmetric restriction in an orthonormal basis of
/// symmetric matrices ("voigt" below, with sqrt(2)-scaled shear entries).
class ElasticTensor {
public:
    ElasticTensor() = default;
    ElasticTensor(int dim, Eigen::MatrixXd rep);

    int dim() const { return dim_; }

    /// Apply the map to a d x d matrix.
    Eigen::MatrixXd apply(const Eigen::MatrixXd& E) const;

    /// Adjoint map C^T defined by C^T A : B = A : C B.
    ElasticTensor transposed() const;

    /// Restriction to symmetric matrices in the orthonormal basis
    /// {e_ii} u {(e_ij + e_ji)/sqrt(2)}; size nv x nv with nv = d(d+1)/2.
    /// For symmetric E, F:  C E : F = voigt(F)^T * sym_matrix() * voigt(E).
    const Eigen::MatrixXd& sym_matrix() const { return sym_; }

    /// Smallest eigenvalue of the symmetrized restriction; the bilinear form
    /// E -> C E : E is uniformly positive definite iff this is > 0.
    double min_symmetric_eigenvalue() const;

    /// Throws std::invalid_argument with the failing eigenvalue if the
    /// positivity invariant is violated.
    void validate() const;

    const Eigen::MatrixXd& rep() const { return rep_; }

    bool is_zero(double tol = 0.0) const;

    ElasticTensor operator-(const ElasticTensor& other) const;
    ElasticTensor operator*(double s) const;

    /// Orthonormal symmetric-basis coordinates of sym(E).
    static Eigen::VectorXd voigt(int dim, const Eigen::MatrixXd& E);
    /// Inverse of voigt(): symmetric matrix from orthonormal coordinates.
    static Eigen::MatrixXd unvoigt(int dim, const Eigen::VectorXd& v);
    static int voigt_size(int dim) { return dim * (dim + 1) / 2; }

private:
    void build_sym();

    int dim_ = 0;
    Eigen::MatrixXd rep_;  // (d*d) x (d*d)
    Eigen::MatrixXd sym_;  // nv x nv
};

/// Isotropic law C E = 2 mu sym(E) + lambda tr(E) I.
/// Requires mu > 0 and d*lambda + 2*mu > 0 (and lambda + 2 mu > 0), which is
/// exactly positivity of the symmetric restriction; violations throw.
ElasticTensor isotropic_tensor(double lambda, double mu, int dim);

/// C E for a d x d matrix E (free-function form used throughout assembly).
Eigen::MatrixXd apply_tensor(const ElasticTensor& C, const Eigen::MatrixXd& E);

}  // namespace topoderiv
