#include "topoderiv/regular_corrector.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace topoderiv {

namespace {

bool adjoint_kind(RegularKind kind) {
    return kind == RegularKind::p1 || kind == RegularKind::p2 || kind == RegularKind::q1 ||
           kind == RegularKind::q2U || kind == RegularKind::q2Q;
}

double model_scale(const FarFieldModel& m) {
    double s = 0.0;
    if (m.power_coef.size() > 0) s = m.power_coef.cwiseAbs().maxCoeff();
    if (m.log_coef.size() > 0) s = std::max(s, m.log_coef.cwiseAbs().maxCoeff());
    return s;
}

/// coeff * integral_tag (C eps(R)(x - x0)) n . phi for every Neumann tag.
void add_traction_terms(RhsSpec& rhs, const ProblemSpec& problem, const ElasticTensor& C,
                        const FarFieldModel& model, const Eigen::Vector3d& x0, double coeff) {
    const int d = problem.dim;
    auto traction = [&C, model, x0, d](const Eigen::Vector3d& x, const Eigen::Vector3d& n) {
        const Eigen::MatrixXd strain = model.strain(x - x0).topLeftCorner(d, d);
        Eigen::Vector3d t = Eigen::Vector3d::Zero();
        t.head(d) = C.apply(strain) * n.head(d);
        return t;
    };
    for (BoundaryTag tag : {BoundaryTag::Neumann, BoundaryTag::NeumannMeasured})
        if (problem.has_tag(tag))
            rhs.boundary.push_back({static_cast<int>(tag), traction, coeff});
}

/// coeff * integral_tag (grad R)(x - x0) n . phi for every Neumann tag.
void add_gradient_flux_terms(RhsSpec& rhs, const ProblemSpec& problem,
                             const FarFieldModel& model, const Eigen::Vector3d& x0,
                             double coeff) {
    auto flux = [model, x0](const Eigen::Vector3d& x, const Eigen::Vector3d& n) {
        return Eigen::Vector3d(model.gradient(x - x0) * n);
    };
    for (BoundaryTag tag : {BoundaryTag::Neumann, BoundaryTag::NeumannMeasured})
        if (problem.has_tag(tag))
            rhs.boundary.push_back({static_cast<int>(tag), flux, coeff});
}

void check_model(const char* who, const FarFieldModel& model, int dim) {
    if (model.dim != dim)
        throw std::invalid_argument(std::string(who) + ": far-field model is " +
                                    std::to_string(model.dim) + "D but the problem is " +
                                    std::to_string(dim) + "D");
    if (model.monomials.empty() && !model.zero(0.0))
        throw std::invalid_argument(std::string(who) +
                                    ": far-field model carries no angular profile, cannot "
                                    "differentiate it for traction data");
}

}  // namespace

const char* regular_kind_name(RegularKind kind) {
    switch (kind) {
        case RegularKind::u1: return "u1";
        case RegularKind::u2: return "u2";
        case RegularKind::p1: return "p1";
        case RegularKind::p2: return "p2";
        case RegularKind::q1: return "q1";
        case RegularKind::q2U: return "q2U";
        case RegularKind::q2Q: return "q2Q";
    }
    return "?";
}

RegularCorrector solve_regular_corrector(MeshContext& ctx, RegularKind kind,
                                         const FarFieldModel& farfield,
                                         const Eigen::Vector3d& x0) {
    if (kind == RegularKind::q2U)
        throw std::invalid_argument(
            "solve_regular_corrector: q2U takes coupling data, use the dedicated overload");
    const ProblemSpec& problem = ctx.problem();
    check_model("solve_regular_corrector", farfield, problem.dim);

    const bool adjoint = adjoint_kind(kind);
    const FemSystem& system = adjoint ? ctx.adjoint_system(false) : ctx.system(false);
    const ElasticTensor C = adjoint ? problem.C2.transposed() : problem.C2;

    RhsSpec rhs;
    add_traction_terms(rhs, problem, C, farfield, x0, -1.0);

    auto trace = [farfield, x0](const Eigen::Vector3d& x) {
        return Eigen::Vector3d(-farfield.value(x - x0));
    };

    RegularCorrector out;
    out.kind = kind;
    out.data_scale = model_scale(farfield);
    out.field = system.solve(rhs, trace);
    return out;
}

RegularCorrector solve_regular_corrector_q2U(MeshContext& ctx, const RegularCouplings& c,
                                             const Eigen::Vector3d& x0) {
    const ProblemSpec& problem = ctx.problem();
    const CostWeights w = problem.effective_weights();

    RegularCorrector out;
    out.kind = RegularKind::q2U;

    RhsSpec rhs;
    const int tag_m = static_cast<int>(BoundaryTag::NeumannMeasured);
    for (const FarFieldModel* model : {c.R1, c.R2}) {
        if (model == nullptr) {
            if (w.gamma_m != 0.0 || w.gamma_g != 0.0)
                throw std::invalid_argument(
                    "solve_regular_corrector_q2U: far-field models required when gamma_m or "
                    "gamma_g is active");
            continue;
        }
        check_model("solve_regular_corrector_q2U", *model, problem.dim);
        out.data_scale = std::max(out.data_scale, model_scale(*model));
        if (w.gamma_m != 0.0 && problem.has_tag(BoundaryTag::NeumannMeasured)) {
            const FarFieldModel m = *model;
            rhs.boundary.push_back(
                {tag_m,
                 [m, x0](const Eigen::Vector3d& x, const Eigen::Vector3d&) {
                     return m.value(x - x0);
                 },
                 -w.gamma_m});
        }
        if (w.gamma_g != 0.0) add_gradient_flux_terms(rhs, problem, *model, x0, -w.gamma_g);
    }
    for (const FemField* u : {c.u1, c.u2}) {
        if (u == nullptr) {
            if (w.gamma_m != 0.0 || w.gamma_g != 0.0)
                throw std::invalid_argument(
                    "solve_regular_corrector_q2U: state compensations required when gamma_m "
                    "or gamma_g is active");
            continue;
        }
        if (w.gamma_m != 0.0 && problem.has_tag(BoundaryTag::NeumannMeasured))
            rhs.field_boundary.push_back({tag_m, u, -w.gamma_m});
        if (w.gamma_g != 0.0) rhs.gradient.push_back({u, -w.gamma_g});
    }

    out.field = ctx.adjoint_system(false).solve(rhs);
    return out;
}

}  // namespace topoderiv
