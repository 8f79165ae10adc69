#include "topoderiv/polarisation.hpp"

#include <stdexcept>

namespace topoderiv {

namespace {

Eigen::Matrix3d apply_padded(const ElasticTensor& C, const Eigen::Matrix3d& E) {
    const int d = C.dim();
    Eigen::Matrix3d out = Eigen::Matrix3d::Zero();
    out.topLeftCorner(d, d) = C.apply(E.topLeftCorner(d, d));
    return out;
}

}  // namespace

const char* polarisation_kind_name(PolarisationKind kind) {
    return kind == PolarisationKind::strain ? "strain" : "gradient_coupled";
}

Eigen::Matrix3d PolarisationTensor::apply(const Eigen::Matrix3d& zeta) const {
    if (dim != 2 && dim != 3) throw std::invalid_argument("PolarisationTensor: not built");
    const Eigen::VectorXd image = matrix * ElasticTensor::voigt(dim, zeta.topLeftCorner(dim, dim));
    Eigen::Matrix3d out = Eigen::Matrix3d::Zero();
    out.topLeftCorner(dim, dim) = ElasticTensor::unvoigt(dim, image);
    return out;
}

PolarisationTensor polarisation_tensor(const ExteriorWorkspace& ws, PolarisationKind kind,
                                       double gamma_g) {
    const int d = ws.dim();
    const int v = ElasticTensor::voigt_size(d);
    const ElasticTensor jump = ws.C_out() - ws.C_in();
    const ElasticTensor jump_t = jump.transposed();

    PolarisationTensor P;
    P.kind = kind;
    P.dim = d;
    P.matrix = Eigen::MatrixXd::Zero(v, v);
    if (kind == PolarisationKind::gradient_coupled && gamma_g == 0.0) return P;

    for (int j = 0; j < v; ++j) {
        Eigen::Matrix3d zeta = Eigen::Matrix3d::Zero();
        zeta.topLeftCorner(d, d) = ElasticTensor::unvoigt(d, Eigen::VectorXd::Unit(v, j));

        CorrectorSolution column;
        if (kind == PolarisationKind::strain) {
            CorrectorDrive drive;
            drive.strain_const = apply_padded(jump_t, zeta);
            column = ws.solve_corrector(CorrectorKind::Q1hat, drive);
        } else {
            CorrectorDrive state_drive;
            state_drive.strain_const = apply_padded(jump, zeta);
            const CorrectorSolution state = ws.solve_corrector(CorrectorKind::U1, state_drive);
            CorrectorDrive drive;
            drive.gradient_sources.emplace_back(&state, -gamma_g);
            column = ws.solve_corrector(CorrectorKind::Q1tilde, drive);
        }
        P.matrix.col(j) =
            ElasticTensor::voigt(d, column.strain_average.topLeftCorner(d, d));
    }
    return P;
}

PolarisationTensor polarisation_tensor(const ElasticTensor& C1, const ElasticTensor& C2,
                                       const InclusionShape& omega, int dim,
                                       PolarisationKind kind, double gamma_g, double R,
                                       double h_inner) {
    const ExteriorWorkspace ws(omega, dim, C1, C2, R, h_inner, 0.05, 2);
    return polarisation_tensor(ws, kind, gamma_g);
}

}  // namespace topoderiv
