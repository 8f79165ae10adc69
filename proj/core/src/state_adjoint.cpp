#include "topoderiv/state_adjoint.hpp"

#include <utility>

namespace topoderiv {

namespace {

bool has_major_symmetry(const ElasticTensor& C) {
    const Eigen::MatrixXd& D = C.sym_matrix();
    return (D - D.transpose()).norm() <= 1e-12 * (1.0 + D.norm());
}

std::function<Eigen::Vector3d(const Eigen::Vector3d&)> closure(const VectorExpression& e) {
    return [&e](const Eigen::Vector3d& x) { return e.eval(x); };
}

}  // namespace

MeshContext::MeshContext(const ProblemSpec& problem, Mesh mesh, int order)
    : problem_(&problem), mesh_(std::move(mesh)), order_(order) {
    space_ = std::make_unique<FemSpace>(mesh_, order);
    needs_transpose_ = !(has_major_symmetry(problem.C1) && has_major_symmetry(problem.C2));
}

const FemSystem& MeshContext::system(bool perturbed) {
    auto& slot = sys_[perturbed ? 1 : 0];
    if (!slot) {
        const ElasticTensor& C_in = perturbed ? problem_->C1 : problem_->C2;
        slot = std::make_unique<FemSystem>(*space_, C_in, problem_->C2,
                                           std::vector<int>{static_cast<int>(BoundaryTag::Dirichlet)});
    }
    return *slot;
}

const FemSystem& MeshContext::adjoint_system(bool perturbed) {
    if (!needs_transpose_) return system(perturbed);
    auto& slot = adj_sys_[perturbed ? 1 : 0];
    if (!slot) {
        const ElasticTensor C_in = (perturbed ? problem_->C1 : problem_->C2).transposed();
        const ElasticTensor C_out = problem_->C2.transposed();
        slot = std::make_unique<FemSystem>(*space_, C_in, C_out,
                                           std::vector<int>{static_cast<int>(BoundaryTag::Dirichlet)});
    }
    return *slot;
}

RhsSpec MeshContext::state_rhs(bool perturbed) const {
    const ProblemSpec& p = *problem_;
    RhsSpec rhs;
    if (perturbed) {
        if (!p.f1.is_zero()) rhs.volume.push_back({1, closure(p.f1), 1.0});
        if (!p.f2.is_zero()) rhs.volume.push_back({2, closure(p.f2), 1.0});
    } else if (!p.f2.is_zero()) {
        rhs.volume.push_back({0, closure(p.f2), 1.0});
    }
    if (!p.neumann_datum.is_zero()) {
        auto traction = [&p](const Eigen::Vector3d& x, const Eigen::Vector3d&) {
            return p.neumann_datum.eval(x);
        };
        for (int tag : {static_cast<int>(BoundaryTag::Neumann),
                        static_cast<int>(BoundaryTag::NeumannMeasured)})
            if (p.has_tag(static_cast<BoundaryTag>(tag))) rhs.boundary.push_back({tag, traction, 1.0});
    }
    return rhs;
}

const Eigen::VectorXd& MeshContext::load(bool perturbed) {
    auto& slot = load_[perturbed ? 1 : 0];
    if (!slot) slot = system(perturbed).assemble_rhs(state_rhs(perturbed));
    return *slot;
}

std::function<Eigen::Vector3d(const Eigen::Vector3d&)> MeshContext::dirichlet_closure() const {
    const ProblemSpec& p = *problem_;
    if (p.dirichlet_datum.is_zero()) return {};
    return closure(p.dirichlet_datum);
}

const FemField& MeshContext::state(bool perturbed) {
    auto& slot = state_[perturbed ? 1 : 0];
    if (!slot) slot = system(perturbed).solve(load(perturbed), dirichlet_closure());
    return *slot;
}

void MeshContext::add_cost_gradient(RhsSpec& rhs, const FemField& u, double weight) {
    const ProblemSpec& p = *problem_;
    const CostWeights w = p.effective_weights();
    if (w.gamma_m != 0.0) {
        const int tag = static_cast<int>(BoundaryTag::NeumannMeasured);
        rhs.field_boundary.push_back({tag, &u, -weight * w.gamma_m});
        if (!p.measurement_target.is_zero()) {
            auto target = [&p](const Eigen::Vector3d& x, const Eigen::Vector3d&) {
                return p.measurement_target.eval(x);
            };
            rhs.boundary.push_back({tag, target, weight * w.gamma_m});
        }
    }
    if (w.gamma_g != 0.0) {
        rhs.gradient.push_back({&u, -weight * w.gamma_g});
        if (!p.gradient_target.is_zero())
            rhs.gradient_closure.push_back(
                {[&p](const Eigen::Vector3d& x) { return p.gradient_target.gradient(x); },
                 weight * w.gamma_g});
    }
}

RhsSpec MeshContext::adjoint_rhs_zero() {
    const ProblemSpec& p = *problem_;
    const CostWeights w = p.effective_weights();
    RhsSpec rhs;
    if (w.gamma_f != 0.0 && !p.f2.is_zero()) rhs.volume.push_back({0, closure(p.f2), -w.gamma_f});
    add_cost_gradient(rhs, state(false), 2.0);
    return rhs;
}

RhsSpec MeshContext::adjoint_rhs_amstutz() {
    const ProblemSpec& p = *problem_;
    const CostWeights w = p.effective_weights();
    RhsSpec rhs;
    if (w.gamma_f != 0.0) {
        if (!p.f1.is_zero()) rhs.volume.push_back({1, closure(p.f1), -w.gamma_f});
        if (!p.f2.is_zero()) rhs.volume.push_back({2, closure(p.f2), -w.gamma_f});
    }
    add_cost_gradient(rhs, state(false), 2.0);
    return rhs;
}

RhsSpec MeshContext::adjoint_rhs_averaged() {
    const ProblemSpec& p = *problem_;
    const CostWeights w = p.effective_weights();
    RhsSpec rhs;
    if (w.gamma_f != 0.0) {
        if (!p.f1.is_zero()) rhs.volume.push_back({1, closure(p.f1), -w.gamma_f});
        if (!p.f2.is_zero()) rhs.volume.push_back({2, closure(p.f2), -w.gamma_f});
    }
    add_cost_gradient(rhs, state(false), 1.0);
    add_cost_gradient(rhs, state(true), 1.0);
    return rhs;
}

const FemField& MeshContext::adjoint_zero() {
    if (!adjoint_zero_) adjoint_zero_ = adjoint_system(false).solve(adjoint_rhs_zero());
    return *adjoint_zero_;
}

const FemField& MeshContext::adjoint_amstutz() {
    if (!adjoint_amstutz_) adjoint_amstutz_ = adjoint_system(true).solve(adjoint_rhs_amstutz());
    return *adjoint_amstutz_;
}

const FemField& MeshContext::adjoint_averaged() {
    if (!adjoint_averaged_) adjoint_averaged_ = adjoint_system(true).solve(adjoint_rhs_averaged());
    return *adjoint_averaged_;
}

}  // namespace topoderiv
