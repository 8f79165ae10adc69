#pragma once

#include <memory>
#include <optional>

#include "topoderiv/fem.hpp"
#include "topoderiv/problem.hpp"

namespace topoderiv {

/// One mesh of the computational domain together with everything the
/// expansion pipeline asks of it: the discrete two-phase operator, the state
/// for the perturbed (region 1 = inclusion) and unperturbed coefficient
/// layouts, and the three adjoints. All solves share the cached
/// factorizations; perturbed and unperturbed operators differ, so at most two
/// factorizations exist per mesh (plus transposed ones for material laws
/// without major symmetry).
class MeshContext {
public:
    MeshContext(const ProblemSpec& problem, Mesh mesh, int order);

    const ProblemSpec& problem() const { return *problem_; }
    const Mesh& mesh() const { return mesh_; }
    const FemSpace& space() const { return *space_; }
    int order() const { return order_; }

    /// Operator with C1 on region 1 when perturbed, C2 everywhere otherwise.
    const FemSystem& system(bool perturbed);
    /// Operator for adjoint problems; equal to system() when the material law
    /// has major symmetry, the transposed-tensor operator otherwise.
    const FemSystem& adjoint_system(bool perturbed);

    /// Assembled load vector: volume sources (f1 on region 1 when perturbed)
    /// plus Neumann tractions. Pairing load(perturbed) with a test field
    /// evaluates the linear functional of the variational problem.
    const Eigen::VectorXd& load(bool perturbed);

    /// State solution: elasticity with the Dirichlet datum.
    const FemField& state(bool perturbed);

    /// Adjoint at the unperturbed configuration (the two adjoint notions
    /// coincide at eps = 0).
    const FemField& adjoint_zero();
    /// Adjoint with the perturbed operator but cost gradient at the
    /// unperturbed state.
    const FemField& adjoint_amstutz();
    /// Adjoint with the perturbed operator and cost gradient averaged between
    /// the unperturbed and perturbed states.
    const FemField& adjoint_averaged();

    /// Right-hand sides of the adjoint problems, exposed so tests can audit
    /// the sign and weight conventions.
    RhsSpec adjoint_rhs_zero();
    RhsSpec adjoint_rhs_amstutz();
    RhsSpec adjoint_rhs_averaged();

    std::function<Eigen::Vector3d(const Eigen::Vector3d&)> dirichlet_closure() const;

private:
    RhsSpec state_rhs(bool perturbed) const;
    /// Cost-gradient RHS at u evaluated against test functions, scaled so
    /// that `weight` = 1 gives the full derivative of the quadratic terms.
    void add_cost_gradient(RhsSpec& rhs, const FemField& u, double weight);

    const ProblemSpec* problem_;
    Mesh mesh_;
    int order_;
    std::unique_ptr<FemSpace> space_;
    std::unique_ptr<FemSystem> sys_[2];          // [perturbed]
    std::unique_ptr<FemSystem> adj_sys_[2];      // transposed laws only
    std::optional<Eigen::VectorXd> load_[2];
    std::optional<FemField> state_[2];
    std::optional<FemField> adjoint_zero_, adjoint_amstutz_, adjoint_averaged_;
    bool needs_transpose_;
};

}  // namespace topoderiv
