#include "topoderiv/lagrangian.hpp"

namespace topoderiv {

namespace {

const int kMeasuredTag = static_cast<int>(BoundaryTag::NeumannMeasured);

std::function<Eigen::Vector3d(const Eigen::Vector3d&)> closure(const VectorExpression& e) {
    return [&e](const Eigen::Vector3d& x) { return e.eval(x); };
}

/// integral over the inclusion of (f1 - f2) . v
double load_contrast_pairing(const ProblemSpec& p, const FemField& v) {
    if (p.f1.is_zero() && p.f2.is_zero()) return 0.0;
    return volume_pairing(v, 1, [&p](const Eigen::Vector3d& x) {
        return (p.f1.eval(x) - p.f2.eval(x)).eval();
    });
}

/// integral over the inclusion of (C1 - C2) eps(u) : eps(v)
double contrast_energy_pairing(const ProblemSpec& p, const FemField& u, const FemField& v) {
    const ElasticTensor dC = p.C1 - p.C2;
    if (dC.is_zero(1e-300)) return 0.0;
    const ElasticTensor zero = p.C2 * 0.0;
    return energy_product(u, v, dC, zero);
}

}  // namespace

CostBreakdown cost_evaluate(const ProblemSpec& problem, const FemField& u, bool perturbed) {
    const CostWeights w = problem.effective_weights();
    CostBreakdown out;
    if (w.gamma_f != 0.0) {
        double load = 0;
        if (perturbed) {
            if (!problem.f1.is_zero()) load += volume_pairing(u, 1, closure(problem.f1));
            if (!problem.f2.is_zero()) load += volume_pairing(u, 2, closure(problem.f2));
        } else if (!problem.f2.is_zero()) {
            load += volume_pairing(u, 0, closure(problem.f2));
        }
        out.load_term = w.gamma_f * load;
    }
    if (w.gamma_g != 0.0) {
        const bool has_target = !problem.gradient_target.is_zero();
        out.gradient_term =
            w.gamma_g * field_integral(u, 0,
                                       [&](const Eigen::Vector3d& x, const Eigen::Vector3d&,
                                           const Eigen::Matrix3d& g) {
                                           Eigen::Matrix3d d = g;
                                           if (has_target) d -= problem.gradient_target.gradient(x);
                                           return d.squaredNorm();
                                       });
    }
    if (w.gamma_m != 0.0) {
        const bool has_target = !problem.measurement_target.is_zero();
        out.boundary_term =
            w.gamma_m * field_boundary_integral(
                            u, kMeasuredTag,
                            [&](const Eigen::Vector3d& x, const Eigen::Vector3d&,
                                const Eigen::Vector3d& v) {
                                Eigen::Vector3d d = v;
                                if (has_target) d -= problem.measurement_target.eval(x);
                                return d.squaredNorm();
                            });
    }
    out.total = out.load_term + out.gradient_term + out.boundary_term;
    return out;
}

double cost_difference(const ProblemSpec& problem, const FemField& u_new, const FemField& u_old,
                       bool perturbed) {
    if (u_new.space != u_old.space)
        throw std::invalid_argument("cost_difference arguments live on different spaces");
    const CostWeights cw = problem.effective_weights();
    FemField w(*u_new.space), mid(*u_new.space);
    w.coeffs = u_new.coeffs - u_old.coeffs;
    mid.coeffs = 0.5 * (u_new.coeffs + u_old.coeffs);

    double out = 0;
    if (cw.gamma_f != 0.0) {
        double load = 0;
        if (perturbed) {
            if (!problem.f1.is_zero()) load += volume_pairing(w, 1, closure(problem.f1));
            if (!problem.f2.is_zero()) load += volume_pairing(w, 2, closure(problem.f2));
        } else if (!problem.f2.is_zero()) {
            load += volume_pairing(w, 0, closure(problem.f2));
        }
        out += cw.gamma_f * load;
    }
    if (cw.gamma_g != 0.0) {
        double term = gradient_product(mid, w);
        if (!problem.gradient_target.is_zero())
            term -= gradient_closure_pairing(w, 0, [&](const Eigen::Vector3d& x) {
                return problem.gradient_target.gradient(x);
            });
        out += 2.0 * cw.gamma_g * term;
    }
    if (cw.gamma_m != 0.0) {
        double term = boundary_pairing(mid, w, kMeasuredTag);
        if (!problem.measurement_target.is_zero())
            term -= boundary_closure_pairing(w, kMeasuredTag, closure(problem.measurement_target));
        out += 2.0 * cw.gamma_m * term;
    }
    return out;
}

double lagrangian_value(MeshContext& ctx, const FemField& u, const FemField& v, bool perturbed) {
    return cost_evaluate(ctx.problem(), u, perturbed).total +
           ctx.system(perturbed).energy(v, u) - ctx.load(perturbed).dot(v.coeffs);
}

DifferenceSamples difference_samples(MeshContext& ctx, double eps) {
    const ProblemSpec& p = ctx.problem();
    const CostWeights cw = p.effective_weights();
    DifferenceSamples s;
    s.eps = eps;
    s.ell1 = ctx.mesh().region_measure(1);
    s.ell2 = eps * s.ell1;

    const FemField& u_eps = ctx.state(true);
    const FemField& u0 = ctx.state(false);
    const FemField& p_eps = ctx.adjoint_amstutz();
    const FemField& q_eps = ctx.adjoint_averaged();
    const FemField& p0 = ctx.adjoint_zero();

    FemField w(ctx.space()), dq(ctx.space());
    w.coeffs = u_eps.coeffs - u0.coeffs;
    dq.coeffs = q_eps.coeffs - p0.coeffs;

    s.j_eps = cost_evaluate(p, u_eps, true).total;
    s.j0 = cost_evaluate(p, u0, false).total;

    // j(eps) - j(0) = [J_eps(u_eps) - J_eps(u0)] + gamma_f int_omega (f1-f2).u0
    const double load_shift = cw.gamma_f * load_contrast_pairing(p, u0);
    s.j_diff = cost_difference(p, u_eps, u0, true) + load_shift;

    // local inclusion integrals against the three adjoints
    auto dilute = [&](const FemField& adjoint) {
        return load_shift + contrast_energy_pairing(p, u0, adjoint) -
               load_contrast_pairing(p, adjoint);
    };
    s.am_dl = dilute(p_eps);
    s.df_dl = dilute(p0);
    s.av_dl = s.df_dl;

    // remainders; energy(a, b) applies the tensor to b
    s.am_R = cost_difference(p, u_eps, u0, true) + ctx.system(true).energy(p_eps, w);
    s.av_R = ctx.system(true).energy(dq, u0) - ctx.load(true).dot(dq.coeffs);
    s.df_R1 = 0;
    if (cw.gamma_g != 0.0) s.df_R1 += cw.gamma_g * gradient_product(w, w);
    if (cw.gamma_m != 0.0) {
        const double bn = boundary_l2_norm(w, kMeasuredTag);
        s.df_R1 += cw.gamma_m * bn * bn;
    }
    s.df_R2 = cw.gamma_f * load_contrast_pairing(p, w) + contrast_energy_pairing(p, w, p0);
    return s;
}

}  // namespace topoderiv
