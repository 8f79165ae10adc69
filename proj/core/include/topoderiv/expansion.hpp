#pragma once

#include <string>
#include <utility>
#include <vector>

#include "topoderiv/corrector.hpp"
#include "topoderiv/lagrangian.hpp"

namespace topoderiv {

/// The three derivation routes. They provably give the same derivatives; the
/// artifact computes all of them and reports the spread.
enum class Method { amstutz, averaged, delfour };

constexpr int kNumMethods = 3;
const char* method_name(Method m);

/// Omega-summary of a first-order exterior corrector: the averages the
/// closed-form derivative terms consume. Strain data are gauge invariant;
/// the value average refers to the representative that decays at infinity.
struct CorrectorSummary {
    Eigen::Matrix3d strain_average = Eigen::Matrix3d::Zero();
    std::array<Eigen::Matrix3d, 3> strain_moment = {Eigen::Matrix3d::Zero(),
                                                    Eigen::Matrix3d::Zero(),
                                                    Eigen::Matrix3d::Zero()};
    Eigen::Vector3d value_average = Eigen::Vector3d::Zero();
    double richardson_change = 0.0;
};

CorrectorSummary summarize(const CorrectorSolution& sol);
CorrectorSummary combine(const CorrectorSummary& a, const CorrectorSummary& b);

/// Everything the closed-form first- and second-order derivatives need:
/// pointwise jets at the expansion point, load jets, cost weights, the
/// inclusion geometry (measure and centroid of the discrete omega), the
/// omega-summaries of the first-order correctors, strain averages of the
/// second-order ones, and the two corrector energy integrals.
struct ExpansionInputs {
    int dim = 0;
    ElasticTensor C1, C2;
    LocalJet u0, p0, q0;
    Eigen::Vector3d f1 = Eigen::Vector3d::Zero(), f2 = Eigen::Vector3d::Zero();
    Eigen::Matrix3d grad_f1 = Eigen::Matrix3d::Zero(), grad_f2 = Eigen::Matrix3d::Zero();
    CostWeights weights;  // effective weights (2D restriction applied)
    double omega_measure = 0.0;
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();  // mean of x over omega

    bool has_state_correctors = false;     // U family (delfour)
    bool has_amstutz_correctors = false;   // P family
    bool has_averaged_correctors = false;  // Q family

    CorrectorSummary U1, P1, Q1;
    Eigen::Matrix3d strain_avg_U2 = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d strain_avg_P2 = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d strain_avg_Q2 = Eigen::Matrix3d::Zero();

    double grad_U1_sq = 0.0;  // integral over R^d of |grad U1|^2, extrapolated
    double grad_U1_U2 = 0.0;  // integral of grad U1 : grad U2, extrapolated
    double grad_U1_sq_change = 0.0;  // Richardson diagnostics of the above
    double grad_U1_U2_change = 0.0;

    /// Throws std::invalid_argument when a required entry is not finite.
    void validate() const;
};

/// First-order topological derivative of the chosen method. All methods
/// share the pointwise block
///   (C1-C2) eps(u0):eps(p0) + gamma_f (f1-f2).u0 - (f1-f2).p0  at x0
/// and differ in the corrector term: amstutz pairs eps(u0)(x0) with the
/// averaged strain of P1 (plus the gamma_g energy of U1), averaged pairs it
/// with Q1, delfour pairs the averaged strain of U1 with eps(p0)(x0) (plus
/// the same energy term).
double first_order_td(Method method, const ExpansionInputs& in);

/// Second-order topological derivative. On top of jet-moment terms over
/// omega, each method adds its second-order corrector strain average, the
/// first moments of its first-order corrector, and that corrector's value
/// average paired with the load jump.
double second_order_td(Method method, const ExpansionInputs& in);

/// Named additive pieces of the derivatives; the *_td functions return their
/// sums. Exposed so the conventions stay auditable, in particular the load
/// value terms: the state-corrector route (delfour) carries the load jump
/// weighted by gamma_f, the adjoint-corrector routes carry it unweighted,
/// because the jump enters once through the cost and once through the state
/// equation.
std::vector<std::pair<std::string, double>> first_order_terms(Method method,
                                                              const ExpansionInputs& in);
std::vector<std::pair<std::string, double>> second_order_terms(Method method,
                                                               const ExpansionInputs& in);

/// Resolution knobs of the end-to-end pipeline.
struct ExpansionParams {
    double h = 0.05;         // interior mesh size on D
    int order = 2;           // finite element order
    double R = 20.0;         // exterior truncation radius (second level 2R)
    double h_inner = 0.1;    // exterior mesh size near omega
    double grading = 0.05;   // exterior mesh grading
    double jet_patch = 0.0;  // jet recovery patch radius; 0 = 4h
};

/// Jets of the unperturbed state and adjoint at x0 (recovered over a patch
/// of the given radius) together with the load data there: the pointwise
/// package every corrector drive is built from.
CorrectorInputs corrector_inputs_at(MeshContext& ctx, const Eigen::Vector3d& x0,
                                    double jet_patch);

/// Fit and extrapolation diagnostics collected while assembling inputs.
struct AssemblyDiagnostics {
    std::vector<std::pair<std::string, double>> details;
    std::vector<std::string> warnings;
};

/// Solves u0 and the adjoint on the context, recovers jets at x0, runs all
/// required exterior correctors on the workspace (sharing solutions between
/// the P and Q families where their equations coincide), and packs the
/// inputs. The averaged family reuses P solves whenever gamma_g = 0, since
/// q0 = p0 makes the drives identical then.
ExpansionInputs assemble_expansion_inputs(MeshContext& ctx, const PerturbationSpec& pert,
                                          const ExteriorWorkspace& ws, double jet_patch,
                                          AssemblyDiagnostics* diag = nullptr);

/// Full per-method result with diagnostics. Derivative arrays are indexed by
/// static_cast<int>(Method).
struct ExpansionReport {
    int dim = 0;
    double j0 = 0.0;
    double omega_measure = 0.0;
    ExpansionInputs inputs;

    std::array<double, kNumMethods> dJ{0.0, 0.0, 0.0};
    std::array<double, kNumMethods> d2J{0.0, 0.0, 0.0};
    double dJ_spread = 0.0;   // max pairwise |diff| / max |value|
    double d2J_spread = 0.0;

    std::vector<std::pair<std::string, double>> details;  // provenance values
    std::vector<std::string> warnings;

    double ell1(double eps) const;  // |omega_eps| = eps^dim * |omega|
    double ell2(double eps) const;  // eps * ell1(eps)
    double dj(Method m) const { return dJ[static_cast<std::size_t>(m)]; }
    double d2j(Method m) const { return d2J[static_cast<std::size_t>(m)]; }
};

/// End-to-end pipeline on freshly built meshes: unperturbed solves on D,
/// corrector solves on the exterior workspace, closed-form assembly for all
/// three methods, cross-method spread, and provenance details. Pass the fan
/// of a companion oracle sweep so both sides discretize the same inclusion
/// polygon; by default a box fan at the sweep's floor resolution is built.
/// A cache, when given, serves the corrector solves.
ExpansionReport expansion_report(const ProblemSpec& problem, const PerturbationSpec& pert,
                                 const ExpansionParams& params = {},
                                 const DirectionFan* fan = nullptr,
                                 CorrectorCache* cache = nullptr);

}  // namespace topoderiv
