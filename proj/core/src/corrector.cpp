#include "topoderiv/corrector.hpp"

#include <cmath>
#include <stdexcept>

#include "topoderiv/cache.hpp"

namespace topoderiv {
namespace {

bool has_major_symmetry(const ElasticTensor& C) {
    const Eigen::MatrixXd& D = C.sym_matrix();
    return (D - D.transpose()).norm() <= 1e-12 * (1.0 + D.norm());
}

Eigen::Matrix3d apply_padded(const ElasticTensor& C, const Eigen::Matrix3d& M) {
    const int d = C.dim();
    Eigen::Matrix3d out = Eigen::Matrix3d::Zero();
    out.topLeftCorner(d, d) = C.apply(M.topLeftCorner(d, d));
    return out;
}

/// Componentwise strain derivative matrices E_k = d eps / d x_k at the jet
/// point, via the directional derivative along the unit vectors.
std::array<Eigen::Matrix3d, 3> strain_derivatives(const LocalJet& jet) {
    std::array<Eigen::Matrix3d, 3> E;
    for (int k = 0; k < 3; ++k) E[k] = jet.strain_gradient_along(Eigen::Vector3d::Unit(k));
    return E;
}

double richardson(double v1, double v2, int order) {
    const double factor = std::pow(2.0, order) - 1.0;
    return v2 + (v2 - v1) / factor;
}

Eigen::Vector3d richardson(const Eigen::Vector3d& v1, const Eigen::Vector3d& v2, int order) {
    const double factor = std::pow(2.0, order) - 1.0;
    return v2 + (v2 - v1) / factor;
}

Eigen::Matrix3d richardson(const Eigen::Matrix3d& v1, const Eigen::Matrix3d& v2, int order) {
    const double factor = std::pow(2.0, order) - 1.0;
    return v2 + (v2 - v1) / factor;
}

}  // namespace

const char* corrector_kind_name(CorrectorKind kind) {
    switch (kind) {
        case CorrectorKind::U1: return "U1";
        case CorrectorKind::U2hat: return "U2hat";
        case CorrectorKind::U2tilde: return "U2tilde";
        case CorrectorKind::P1: return "P1";
        case CorrectorKind::P2hat: return "P2hat";
        case CorrectorKind::P2tilde: return "P2tilde";
        case CorrectorKind::Q1hat: return "Q1hat";
        case CorrectorKind::Q1tilde: return "Q1tilde";
        case CorrectorKind::Q2hat: return "Q2hat";
        case CorrectorKind::Q2tilde: return "Q2tilde";
    }
    throw std::invalid_argument("corrector_kind_name: unknown kind");
}

bool corrector_uses_adjoint_tensor(CorrectorKind kind) {
    switch (kind) {
        case CorrectorKind::U1:
        case CorrectorKind::U2hat:
        case CorrectorKind::U2tilde:
            return false;
        default:
            return true;
    }
}

static bool is_first_order(CorrectorKind kind) {
    switch (kind) {
        case CorrectorKind::U1:
        case CorrectorKind::P1:
        case CorrectorKind::Q1hat:
        case CorrectorKind::Q1tilde:
            return true;
        default:
            return false;
    }
}

double corrector_predicted_exponent(CorrectorKind kind, int dim) {
    if (is_first_order(kind)) return 1.0 - dim;
    // Second-order kinds: bounded-plus-logarithmic in 2D, 1/|x| in 3D.
    return dim == 2 ? 0.0 : -1.0;
}

bool corrector_has_log(CorrectorKind kind, int dim) {
    if (dim != 2) {
        // In 3D only Q2hat may pick up a ln(|x|)/|x| profile; the plain 1/|x|
        // model has no log column, so the allowance is handled by tolerance.
        return false;
    }
    return !is_first_order(kind);
}

bool CorrectorDrive::trivial(double tol) const {
    if (!gradient_sources.empty()) return false;
    double mag = strain_const.cwiseAbs().maxCoeff();
    for (const auto& M : strain_linear) mag = std::max(mag, M.cwiseAbs().maxCoeff());
    mag = std::max(mag, volume_const.cwiseAbs().maxCoeff());
    return mag <= tol;
}

CorrectorDrive corrector_drive(CorrectorKind kind, const CorrectorInputs& in) {
    const int dim = in.C2.dim();
    const ElasticTensor jump = in.C2 - in.C1;
    const ElasticTensor jump_t = jump.transposed();

    CorrectorDrive drive;
    switch (kind) {
        case CorrectorKind::U1:
            drive.strain_const = apply_padded(jump, in.u0.strain());
            break;
        case CorrectorKind::U2hat: {
            const auto E = strain_derivatives(in.u0);
            for (int k = 0; k < dim; ++k) drive.strain_linear[k] = apply_padded(jump, E[k]);
            break;
        }
        case CorrectorKind::U2tilde:
            drive.volume_const = in.f1 - in.f2;
            break;
        case CorrectorKind::P1:
            drive.strain_const = apply_padded(jump_t, in.p0.strain());
            break;
        case CorrectorKind::P2hat: {
            const auto E = strain_derivatives(in.p0);
            for (int k = 0; k < dim; ++k) drive.strain_linear[k] = apply_padded(jump_t, E[k]);
            break;
        }
        case CorrectorKind::P2tilde:
            drive.volume_const = in.weights.gamma_f * (in.f2 - in.f1);
            break;
        case CorrectorKind::Q1hat:
            drive.strain_const = apply_padded(jump_t, in.q0.strain());
            break;
        case CorrectorKind::Q1tilde:
            // Drive is -gamma_g integral grad(U1) : grad(phi); the U1 source
            // is attached by the caller.
            break;
        case CorrectorKind::Q2hat: {
            const auto E = strain_derivatives(in.q0);
            for (int k = 0; k < dim; ++k) drive.strain_linear[k] = apply_padded(jump_t, E[k]);
            // plus -gamma_g integral grad(U2hat + U2tilde) : grad(phi), attached
            // by the caller.
            break;
        }
        case CorrectorKind::Q2tilde:
            drive.volume_const = in.weights.gamma_f * (in.f2 - in.f1);
            break;
    }
    return drive;
}

void add_constant(FemField& u, const Eigen::Vector3d& shift) {
    const int d = u.space->dim();
    for (int s = 0; s < u.space->num_scalar_dofs(); ++s)
        for (int c = 0; c < d; ++c) u.coeffs(s * d + c) += shift(c);
}

Eigen::Vector3d fix_gauge(FemField& u) {
    const Eigen::Vector3d mean = region_mean_value(u, 1);
    add_constant(u, -mean);
    return mean;
}

ExteriorWorkspace::ExteriorWorkspace(const InclusionShape& omega, int dim,
                                     const ElasticTensor& C1, const ElasticTensor& C2, double R,
                                     double h_inner, double grading, int order,
                                     const DirectionFan* fan)
    : shape_(omega),
      dim_(dim),
      order_(order),
      radius_(R),
      h_inner_(h_inner),
      grading_(grading),
      C1_(C1),
      C2_(C2) {
    if (dim != 2 && dim != 3)
        throw std::invalid_argument("exterior workspace: dimension must be 2 or 3");
    if (C1.dim() != dim || C2.dim() != dim)
        throw std::invalid_argument("exterior workspace: tensor dimension mismatch");
    shape_.validate(dim);

    if (fan != nullptr) {
        if (fan->dim != dim) throw std::invalid_argument("exterior workspace: fan dimension mismatch");
        fan_ = *fan;
    } else {
        const double rho = shape_.max_radius(dim);
        const int segments = dim == 2
                                 ? std::max(64, static_cast<int>(std::ceil(2.0 * M_PI * rho / h_inner)))
                                 : std::max(4, static_cast<int>(std::ceil(rho / h_inner)));
        fan_ = make_uniform_fan(dim, segments);
    }

    const bool share_adjoint = has_major_symmetry(C1) && has_major_symmetry(C2);
    for (int l = 0; l < 2; ++l) {
        Level& level = levels_[static_cast<std::size_t>(l)];
        level.radius = (l == 0 ? 1.0 : 2.0) * R;
        level.mesh = build_exterior_mesh(shape_, dim, level.radius, h_inner, grading, fan_);
        level.space = std::make_unique<FemSpace>(level.mesh, order);
        level.system = std::make_unique<FemSystem>(*level.space, C1, C2, std::vector<int>{1});
        if (!share_adjoint) {
            level.adjoint_system_ = std::make_unique<FemSystem>(*level.space, C1.transposed(),
                                                                C2.transposed(),
                                                                std::vector<int>{1});
        }
        level.locator = std::make_unique<CellLocator>(level.mesh);
    }
}

CorrectorSolution ExteriorWorkspace::solve_corrector(CorrectorKind kind,
                                                     const CorrectorDrive& drive) const {
    std::uint64_t cache_key = 0;
    if (cache_) {
        cache_key = cache_->key(*this, kind, drive);
        CorrectorSolution cached;
        if (cache_key != 0 && cache_->load(cache_key, *this, cached)) return cached;
    }

    CorrectorSolution sol;
    sol.kind = kind;
    sol.dim = dim_;

    const double predicted = corrector_predicted_exponent(kind, dim_);
    const bool with_log = corrector_has_log(kind, dim_);
    const double strain_mag = drive.strain_const.cwiseAbs().maxCoeff() +
                              drive.strain_linear[0].cwiseAbs().maxCoeff() +
                              drive.strain_linear[1].cwiseAbs().maxCoeff() +
                              drive.strain_linear[2].cwiseAbs().maxCoeff();

    for (int l = 0; l < 2; ++l) {
        const Level& level = levels_[static_cast<std::size_t>(l)];
        RhsSpec rhs;
        if (strain_mag > 0.0) {
            const Eigen::Matrix3d S0 = drive.strain_const;
            const std::array<Eigen::Matrix3d, 3> S1 = drive.strain_linear;
            rhs.strain.push_back({1, [S0, S1](const Eigen::Vector3d& x) {
                                      Eigen::Matrix3d M = S0;
                                      for (int k = 0; k < 3; ++k) M += x(k) * S1[k];
                                      return M;
                                  }});
        }
        if (drive.volume_const.cwiseAbs().maxCoeff() > 0.0) {
            const Eigen::Vector3d f = drive.volume_const;
            rhs.volume.push_back({1, [f](const Eigen::Vector3d&) { return f; }});
        }
        for (const auto& [source, coeff] : drive.gradient_sources) {
            if (source == nullptr)
                throw std::invalid_argument("solve_corrector: null gradient source");
            if (source->field[static_cast<std::size_t>(l)].space != level.space.get())
                throw std::invalid_argument(
                    "solve_corrector: gradient source lives on a different workspace level");
            rhs.gradient.push_back({&source->field[static_cast<std::size_t>(l)], coeff});
        }

        const FemSystem& system =
            corrector_uses_adjoint_tensor(kind) ? level.adjoint_system() : *level.system;
        FemField raw = system.solve(rhs);

        sol.strain_avg_level[static_cast<std::size_t>(l)] = region_mean_strain(raw, 1);
        sol.strain_moment_level[static_cast<std::size_t>(l)] = region_strain_moments(raw, 1);
        sol.fit_level[static_cast<std::size_t>(l)] =
            fit_farfield(raw, *level.locator, level.radius / 4.0, 3.0 * level.radius / 4.0,
                         predicted, with_log);
        sol.gauge_shift[static_cast<std::size_t>(l)] = fix_gauge(raw);
        sol.field[static_cast<std::size_t>(l)] = std::move(raw);
    }

    const int order = average_order();
    sol.strain_average = richardson(sol.strain_avg_level[0], sol.strain_avg_level[1], order);
    for (int k = 0; k < 3; ++k)
        sol.strain_moment[static_cast<std::size_t>(k)] =
            richardson(sol.strain_moment_level[0][static_cast<std::size_t>(k)],
                       sol.strain_moment_level[1][static_cast<std::size_t>(k)], order);
    sol.value_average = richardson(sol.gauge_shift[0], sol.gauge_shift[1], order);
    const double scale =
        std::max(sol.strain_avg_level[0].norm(), sol.strain_avg_level[1].norm());
    sol.richardson_change =
        scale > 0.0 ? (sol.strain_avg_level[1] - sol.strain_avg_level[0]).norm() / scale : 0.0;

    if (cache_ && cache_key != 0) {
        sol.cache_key = cache_key;
        cache_->store(cache_key, sol);
    }
    return sol;
}

Eigen::Vector3d ExteriorWorkspace::omega_centroid() const {
    const Mesh& mesh = levels_[0].mesh;
    double measure = 0.0;
    Eigen::Vector3d moment = Eigen::Vector3d::Zero();
    for (int c = 0; c < mesh.num_cells(); ++c) {
        if (mesh.cell_region[c] != 1) continue;
        const double m = mesh.cell_measure(c);
        measure += m;
        moment += m * mesh.cell_centroid(c);
    }
    if (measure <= 0.0)
        throw std::runtime_error("omega_centroid: workspace mesh has no inclusion cells");
    return moment / measure;
}

RichardsonValue ExteriorWorkspace::gradient_pairing(const CorrectorSolution& a,
                                                    const CorrectorSolution& b,
                                                    int richardson_order) const {
    RichardsonValue out;
    for (int l = 0; l < 2; ++l) {
        const auto& ua = a.field[static_cast<std::size_t>(l)];
        const auto& ub = b.field[static_cast<std::size_t>(l)];
        if (ua.space != levels_[static_cast<std::size_t>(l)].space.get() ||
            ub.space != levels_[static_cast<std::size_t>(l)].space.get())
            throw std::invalid_argument("gradient_pairing: fields from a different workspace");
        out.levels[static_cast<std::size_t>(l)] = gradient_product(ua, ub, 0);
    }
    out.value = richardson(out.levels[0], out.levels[1], richardson_order);
    const double scale = std::max(std::abs(out.levels[0]), std::abs(out.levels[1]));
    out.change = scale > 0.0 ? std::abs(out.levels[1] - out.levels[0]) / scale : 0.0;
    return out;
}

}  // namespace topoderiv
