#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "topoderiv/farfield.hpp"
#include "topoderiv/jet.hpp"
#include "topoderiv/mesh_build.hpp"
#include "topoderiv/problem.hpp"

namespace topoderiv {

class CorrectorCache;

/// The exterior boundary-layer problems. U-kinds correct the state, P-kinds
/// the fixed-linearization adjoint, Q-kinds the averaged adjoint; hats carry
/// the strain-jet drives, tildes the load-jump and gradient-coupling drives.
enum class CorrectorKind { U1, U2hat, U2tilde, P1, P2hat, P2tilde, Q1hat, Q1tilde, Q2hat, Q2tilde };

const char* corrector_kind_name(CorrectorKind kind);

/// Leading far-field exponent of the kind: first-order kinds decay like
/// |x|^(1-d); second-order kinds are logarithmic in 2D (exponent 0 with a
/// ln|x| term) and like |x|^(-1) in 3D.
double corrector_predicted_exponent(CorrectorKind kind, int dim);
/// Whether the kind's far-field model carries a ln|x| column.
bool corrector_has_log(CorrectorKind kind, int dim);
/// P- and Q-kinds solve against the transposed material law.
bool corrector_uses_adjoint_tensor(CorrectorKind kind);

struct CorrectorSolution;

/// Right-hand side of an exterior solve:
///   integral_omega (strain_const + sum_k x_k strain_linear[k]) : eps(phi)
/// + integral_omega volume_const . phi
/// + sum_s coeff_s integral_ball grad(source_s) : grad(phi),
/// where gradient sources are previously solved correctors on the same
/// workspace (their per-level fields are used level by level).
struct CorrectorDrive {
    Eigen::Matrix3d strain_const = Eigen::Matrix3d::Zero();
    std::array<Eigen::Matrix3d, 3> strain_linear = {Eigen::Matrix3d::Zero(),
                                                    Eigen::Matrix3d::Zero(),
                                                    Eigen::Matrix3d::Zero()};
    Eigen::Vector3d volume_const = Eigen::Vector3d::Zero();
    std::vector<std::pair<const CorrectorSolution*, double>> gradient_sources;

    bool trivial(double tol = 0.0) const;
};

/// Pointwise data the standard drives are built from: jets of the state and
/// adjoints at x0, load values and gradients at x0, material tensors, and the
/// effective cost weights.
struct CorrectorInputs {
    ElasticTensor C1;
    ElasticTensor C2;
    LocalJet u0;
    LocalJet p0;
    LocalJet q0;
    Eigen::Vector3d f1 = Eigen::Vector3d::Zero();
    Eigen::Vector3d f2 = Eigen::Vector3d::Zero();
    Eigen::Matrix3d grad_f1 = Eigen::Matrix3d::Zero();  // (i, j) = d f_i / d x_j
    Eigen::Matrix3d grad_f2 = Eigen::Matrix3d::Zero();
    CostWeights weights;
};

/// The drive of a kind per the expansion of its defining equation. Gradient
/// couplings (Q1tilde needs U1, Q2hat needs U2hat + U2tilde) must be attached
/// by the caller, since they reference solved fields.
CorrectorDrive corrector_drive(CorrectorKind kind, const CorrectorInputs& in);

/// Two-level Richardson record: the quantity at truncation radii R and 2R,
/// the extrapolated value, and the relative change between levels.
struct RichardsonValue {
    std::array<double, 2> levels{0.0, 0.0};
    double value = 0.0;
    double change = 0.0;
};

/// A solved exterior corrector. Fields are stored in the mean-zero gauge over
/// omega; gauge_shift holds the omega-mean of the raw zero-Dirichlet solve,
/// so field + gauge_shift recovers the representative that decays at
/// infinity. Strain averages are gauge invariant; value_average reports the
/// decaying representative (meaningful for the first-order kinds, whose
/// far field vanishes at infinity) Richardson-extrapolated over (R, 2R).
struct CorrectorSolution {
    CorrectorKind kind = CorrectorKind::U1;
    int dim = 0;
    std::array<FemField, 2> field;                 // level 0: radius R, level 1: 2R
    std::array<Eigen::Vector3d, 2> gauge_shift = {Eigen::Vector3d::Zero(),
                                                  Eigen::Vector3d::Zero()};
    std::array<Eigen::Matrix3d, 2> strain_avg_level = {Eigen::Matrix3d::Zero(),
                                                       Eigen::Matrix3d::Zero()};
    std::array<std::array<Eigen::Matrix3d, 3>, 2> strain_moment_level = {
        std::array<Eigen::Matrix3d, 3>{Eigen::Matrix3d::Zero(), Eigen::Matrix3d::Zero(),
                                       Eigen::Matrix3d::Zero()},
        std::array<Eigen::Matrix3d, 3>{Eigen::Matrix3d::Zero(), Eigen::Matrix3d::Zero(),
                                       Eigen::Matrix3d::Zero()}};
    std::array<FarFieldFit, 2> fit_level;

    Eigen::Matrix3d strain_average = Eigen::Matrix3d::Zero();
    /// Means of x_k eps(.) over omega (the linear strain-jet terms of the
    /// second-order formulas pair against these); gauge invariant.
    std::array<Eigen::Matrix3d, 3> strain_moment = {Eigen::Matrix3d::Zero(),
                                                    Eigen::Matrix3d::Zero(),
                                                    Eigen::Matrix3d::Zero()};
    Eigen::Vector3d value_average = Eigen::Vector3d::Zero();
    double richardson_change = 0.0;  // strain average, relative, R -> 2R

    /// Nonzero when the solve went through a CorrectorCache; gradient-source
    /// hashing uses it to key dependent solves.
    std::uint64_t cache_key = 0;

    const FarFieldFit& fit() const { return fit_level[1]; }
};

/// Adds a constant vector to every node of a field (gauge experiments).
void add_constant(FemField& u, const Eigen::Vector3d& shift);
/// Subtracts the omega-mean, restoring the canonical gauge; returns the mean
/// that was removed.
Eigen::Vector3d fix_gauge(FemField& u);

/// Truncated exterior domains at radii R and 2R sharing one direction fan
/// (and hence literally the same discrete inclusion boundary), with assembled
/// and factorized transmission operators. All corrector solves of a problem
/// run on one workspace; solves are independent given the shared immutable
/// meshes.
class ExteriorWorkspace {
public:
    ExteriorWorkspace(const InclusionShape& omega, int dim, const ElasticTensor& C1,
                      const ElasticTensor& C2, double R, double h_inner, double grading,
                      int order, const DirectionFan* fan = nullptr);

    ExteriorWorkspace(const ExteriorWorkspace&) = delete;
    ExteriorWorkspace& operator=(const ExteriorWorkspace&) = delete;

    int dim() const { return dim_; }
    int order() const { return order_; }
    double radius() const { return radius_; }
    double h_inner() const { return h_inner_; }
    double grading() const { return grading_; }
    const InclusionShape& shape() const { return shape_; }
    const ElasticTensor& C_in() const { return C1_; }
    const ElasticTensor& C_out() const { return C2_; }
    const DirectionFan& fan() const { return fan_; }

    struct Level {
        double radius = 0.0;
        Mesh mesh;
        std::unique_ptr<FemSpace> space;
        std::unique_ptr<FemSystem> system;           // C1 inside omega, C2 outside
        std::unique_ptr<FemSystem> adjoint_system_;  // null when the law has major symmetry
        std::unique_ptr<CellLocator> locator;

        const FemSystem& adjoint_system() const {
            return adjoint_system_ ? *adjoint_system_ : *system;
        }
    };
    const Level& level(int i) const { return levels_[static_cast<std::size_t>(i)]; }

    /// Solves the kind on both levels with zero Dirichlet data on the
    /// truncation sphere, fits the far field on each level over the band
    /// [R/4, 3R/4] of that level, fixes the gauge, and Richardson-extrapolates
    /// the omega averages.
    CorrectorSolution solve_corrector(CorrectorKind kind, const CorrectorDrive& drive) const;

    /// integral over the truncated ball of grad(a) : grad(b), per level and
    /// extrapolated at the given Richardson order (in powers of 1/R).
    RichardsonValue gradient_pairing(const CorrectorSolution& a, const CorrectorSolution& b,
                                     int richardson_order) const;

    /// Richardson order used for the omega averages: the truncation error of
    /// a zero-Dirichlet cutoff enters like R^(1-d).
    int average_order() const { return dim_ - 1; }

    /// Mean of x over the discrete inclusion (exact: simplex centroids).
    /// Both levels share the inclusion triangulation, so one answer serves.
    Eigen::Vector3d omega_centroid() const;

    /// Attaches a non-owning cache; solve_corrector then consults and fills
    /// it. A cached hit restores the stored bits exactly.
    void set_cache(CorrectorCache* cache) { cache_ = cache; }

private:
    CorrectorCache* cache_ = nullptr;
    InclusionShape shape_;
    int dim_;
    int order_;
    double radius_;
    double h_inner_;
    double grading_;
    ElasticTensor C1_, C2_;
    DirectionFan fan_;
    std::array<Level, 2> levels_;
};

}  // namespace topoderiv
