#include "topoderiv/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace topoderiv {

namespace {

Eigen::Matrix3d apply_padded(const ElasticTensor& C, const Eigen::Matrix3d& E, int dim) {
    Eigen::Matrix3d out = Eigen::Matrix3d::Zero();
    out.topLeftCorner(dim, dim) = C.apply(E.topLeftCorner(dim, dim));
    return out;
}

double frob(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
    return a.cwiseProduct(b).sum();
}

void require(bool ok, const char* message) {
    if (!ok) throw std::invalid_argument(message);
}

void require_finite(const ExpansionInputs& in) {
    bool ok = std::isfinite(in.omega_measure) && in.omega_measure > 0.0 &&
              in.centroid.allFinite() && in.f1.allFinite() && in.f2.allFinite() &&
              in.grad_f1.allFinite() && in.grad_f2.allFinite() &&
              std::isfinite(in.grad_U1_sq) && std::isfinite(in.grad_U1_U2);
    for (const LocalJet* jet : {&in.u0, &in.p0, &in.q0}) {
        ok = ok && jet->value.allFinite() && jet->grad.allFinite();
        for (const auto& h : jet->hess) ok = ok && h.allFinite();
    }
    for (const CorrectorSummary* s : {&in.U1, &in.P1, &in.Q1}) {
        ok = ok && s->strain_average.allFinite() && s->value_average.allFinite();
        for (const auto& m : s->strain_moment) ok = ok && m.allFinite();
    }
    ok = ok && in.strain_avg_U2.allFinite() && in.strain_avg_P2.allFinite() &&
         in.strain_avg_Q2.allFinite();
    require(ok, "expansion inputs contain non-finite entries");
}

using Terms = std::vector<std::pair<std::string, double>>;

double sum_terms(const Terms& terms) {
    double v = 0.0;
    for (const auto& [name, value] : terms) v += value;
    return v;
}

double spread(const std::array<double, kNumMethods>& v) {
    double lo = *std::min_element(v.begin(), v.end());
    double hi = *std::max_element(v.begin(), v.end());
    double scale = std::max(std::abs(lo), std::abs(hi));
    if (scale < 1e-300) return 0.0;
    return (hi - lo) / scale;
}

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

}  // namespace

const char* method_name(Method m) {
    switch (m) {
        case Method::amstutz: return "amstutz";
        case Method::averaged: return "averaged";
        case Method::delfour: return "delfour";
    }
    throw std::invalid_argument("unknown method");
}

CorrectorSummary summarize(const CorrectorSolution& sol) {
    CorrectorSummary s;
    s.strain_average = sol.strain_average;
    s.strain_moment = sol.strain_moment;
    s.value_average = sol.value_average;
    s.richardson_change = sol.richardson_change;
    return s;
}

CorrectorSummary combine(const CorrectorSummary& a, const CorrectorSummary& b) {
    CorrectorSummary s;
    s.strain_average = a.strain_average + b.strain_average;
    for (int k = 0; k < 3; ++k) s.strain_moment[k] = a.strain_moment[k] + b.strain_moment[k];
    s.value_average = a.value_average + b.value_average;
    s.richardson_change = std::max(a.richardson_change, b.richardson_change);
    return s;
}

void ExpansionInputs::validate() const {
    require(dim == 2 || dim == 3, "expansion inputs: dim must be 2 or 3");
    require(u0.dim == dim && p0.dim == dim && q0.dim == dim,
            "expansion inputs: jet dimension does not match");
    require_finite(*this);
}

Terms first_order_terms(Method method, const ExpansionInputs& in) {
    in.validate();
    const ElasticTensor jump = in.C1 - in.C2;
    const Eigen::Vector3d df = in.f1 - in.f2;
    const CostWeights& w = in.weights;
    const Eigen::Matrix3d jump_eu = apply_padded(jump, in.u0.strain(), in.dim);
    const Eigen::Matrix3d ep = in.p0.strain();

    const bool needs_energy = w.gamma_g != 0.0;
    Terms t;
    switch (method) {
        case Method::amstutz:
            require(in.has_amstutz_correctors, "first_order_td(amstutz): P correctors missing");
            require(!needs_energy || in.has_state_correctors,
                    "first_order_td(amstutz): U1 energy required when gamma_g is active");
            t.emplace_back("corrector_strain", frob(jump_eu, in.P1.strain_average));
            t.emplace_back("pointwise_strain", frob(jump_eu, ep));
            t.emplace_back("load_state", w.gamma_f * df.dot(in.u0.value));
            t.emplace_back("load_adjoint", -df.dot(in.p0.value));
            t.emplace_back("gradient_energy", w.gamma_g / in.omega_measure * in.grad_U1_sq);
            return t;
        case Method::averaged:
            require(in.has_averaged_correctors, "first_order_td(averaged): Q correctors missing");
            t.emplace_back("corrector_strain", frob(jump_eu, in.Q1.strain_average));
            t.emplace_back("pointwise_strain", frob(jump_eu, in.q0.strain()));
            t.emplace_back("load_state", w.gamma_f * df.dot(in.u0.value));
            t.emplace_back("load_adjoint", -df.dot(in.q0.value));
            return t;
        case Method::delfour:
            require(in.has_state_correctors, "first_order_td(delfour): U correctors missing");
            t.emplace_back("corrector_strain",
                           frob(apply_padded(jump, in.U1.strain_average, in.dim), ep));
            t.emplace_back("pointwise_strain", frob(jump_eu, ep));
            t.emplace_back("load_state", w.gamma_f * df.dot(in.u0.value));
            t.emplace_back("load_adjoint", -df.dot(in.p0.value));
            t.emplace_back("gradient_energy", w.gamma_g / in.omega_measure * in.grad_U1_sq);
            return t;
    }
    throw std::invalid_argument("unknown method");
}

Terms second_order_terms(Method method, const ExpansionInputs& in) {
    in.validate();
    const ElasticTensor jump = in.C1 - in.C2;
    const Eigen::Vector3d df = in.f1 - in.f2;
    const Eigen::Vector3d c = in.centroid;
    const Eigen::Vector3d df_c = (in.grad_f1 - in.grad_f2) * c;  // grad(f1 - f2)(x0) . centroid
    const CostWeights& w = in.weights;
    const Eigen::Matrix3d jump_eu = apply_padded(jump, in.u0.strain(), in.dim);
    const Eigen::Matrix3d jump_eu_c = apply_padded(jump, in.u0.strain_gradient_along(c), in.dim);
    const Eigen::Matrix3d ep = in.p0.strain();

    // The load gradient enters the state side weighted by gamma_f and the
    // adjoint side unweighted, mirroring the first-order load terms.
    const double load_state = w.gamma_f * (df_c.dot(in.u0.value) + df.dot(in.u0.gradient_along(c)));

    Terms t;
    switch (method) {
        case Method::amstutz: {
            require(in.has_amstutz_correctors, "second_order_td(amstutz): P correctors missing");
            require(w.gamma_g == 0.0 || in.has_state_correctors,
                    "second_order_td(amstutz): U energies required when gamma_g is active");
            t.emplace_back("load_gradient_state", load_state);
            t.emplace_back("load_gradient_adjoint",
                           -df_c.dot(in.p0.value) - df.dot(in.p0.gradient_along(c)));
            t.emplace_back("strain_cross", frob(jump_eu, in.p0.strain_gradient_along(c)) +
                                               frob(jump_eu_c, ep));
            t.emplace_back("corrector_strain", frob(jump_eu, in.strain_avg_P2));
            double moment = 0.0;
            for (int k = 0; k < in.dim; ++k) {
                const Eigen::Matrix3d Ek = in.u0.strain_gradient_along(Eigen::Vector3d::Unit(k));
                moment += frob(apply_padded(jump, Ek, in.dim), in.P1.strain_moment[k]);
            }
            t.emplace_back("corrector_moment", moment);
            t.emplace_back("corrector_value", -df.dot(in.P1.value_average));
            t.emplace_back("gradient_energy",
                           2.0 * w.gamma_g / in.omega_measure * in.grad_U1_U2);
            return t;
        }
        case Method::averaged: {
            require(in.has_averaged_correctors, "second_order_td(averaged): Q correctors missing");
            t.emplace_back("load_gradient_state", load_state);
            t.emplace_back("load_gradient_adjoint",
                           -df_c.dot(in.q0.value) - df.dot(in.q0.gradient_along(c)));
            t.emplace_back("strain_cross", frob(jump_eu, in.q0.strain_gradient_along(c)) +
                                               frob(jump_eu_c, in.q0.strain()));
            t.emplace_back("corrector_strain", frob(jump_eu, in.strain_avg_Q2));
            double moment = 0.0;
            for (int k = 0; k < in.dim; ++k) {
                const Eigen::Matrix3d Ek = in.u0.strain_gradient_along(Eigen::Vector3d::Unit(k));
                moment += frob(apply_padded(jump, Ek, in.dim), in.Q1.strain_moment[k]);
            }
            t.emplace_back("corrector_moment", moment);
            t.emplace_back("corrector_value", -df.dot(in.Q1.value_average));
            return t;
        }
        case Method::delfour: {
            require(in.has_state_correctors, "second_order_td(delfour): U correctors missing");
            t.emplace_back("load_gradient_state", load_state);
            t.emplace_back("load_gradient_adjoint",
                           -df_c.dot(in.p0.value) - df.dot(in.p0.gradient_along(c)));
            t.emplace_back("strain_cross", frob(jump_eu, in.p0.strain_gradient_along(c)) +
                                               frob(jump_eu_c, ep));
            t.emplace_back("corrector_strain",
                           frob(apply_padded(jump, in.strain_avg_U2, in.dim), ep));
            double moment = 0.0;
            for (int k = 0; k < in.dim; ++k) {
                const Eigen::Matrix3d Pk = in.p0.strain_gradient_along(Eigen::Vector3d::Unit(k));
                moment += frob(apply_padded(jump, in.U1.strain_moment[k], in.dim), Pk);
            }
            t.emplace_back("corrector_moment", moment);
            t.emplace_back("corrector_value", w.gamma_f * df.dot(in.U1.value_average));
            t.emplace_back("gradient_energy",
                           2.0 * w.gamma_g / in.omega_measure * in.grad_U1_U2);
            return t;
        }
    }
    throw std::invalid_argument("unknown method");
}

double first_order_td(Method method, const ExpansionInputs& in) {
    return sum_terms(first_order_terms(method, in));
}

double second_order_td(Method method, const ExpansionInputs& in) {
    return sum_terms(second_order_terms(method, in));
}

CorrectorInputs corrector_inputs_at(MeshContext& ctx, const Eigen::Vector3d& x0,
                                    double jet_patch) {
    if (!(jet_patch > 0.0))
        throw std::invalid_argument("corrector_inputs_at: jet_patch must be positive");
    const ProblemSpec& problem = ctx.problem();

    CorrectorInputs ci;
    ci.C1 = problem.C1;
    ci.C2 = problem.C2;
    const CellLocator locator(ctx.mesh());
    ci.u0 = recover_jet(ctx.state(false), locator, x0, jet_patch);
    ci.p0 = recover_jet(ctx.adjoint_zero(), locator, x0, jet_patch);
    ci.q0 = ci.p0;  // the two adjoint notions coincide at eps = 0
    ci.f1 = problem.f1.eval(x0);
    ci.f2 = problem.f2.eval(x0);
    ci.grad_f1 = problem.f1.gradient(x0);
    ci.grad_f2 = problem.f2.gradient(x0);
    ci.weights = problem.effective_weights();
    return ci;
}

ExpansionInputs assemble_expansion_inputs(MeshContext& ctx, const PerturbationSpec& pert,
                                          const ExteriorWorkspace& ws, double jet_patch,
                                          AssemblyDiagnostics* diag) {
    const ProblemSpec& problem = ctx.problem();
    if (ws.dim() != problem.dim)
        throw std::invalid_argument("assemble_expansion_inputs: workspace dimension mismatch");

    const CorrectorInputs ci = corrector_inputs_at(ctx, pert.x0, jet_patch);

    ExpansionInputs in;
    in.dim = problem.dim;
    in.C1 = problem.C1;
    in.C2 = problem.C2;
    in.weights = ci.weights;
    in.omega_measure = pert.shape.measure(problem.dim);
    in.centroid = ws.omega_centroid();
    in.u0 = ci.u0;
    in.p0 = ci.p0;
    in.q0 = ci.q0;
    in.f1 = ci.f1;
    in.f2 = ci.f2;
    in.grad_f1 = ci.grad_f1;
    in.grad_f2 = ci.grad_f2;

    auto solve = [&](CorrectorKind kind, CorrectorDrive drive) {
        CorrectorSolution sol = ws.solve_corrector(kind, drive);
        if (diag) {
            const std::string name = corrector_kind_name(kind);
            diag->details.emplace_back("fit_exponent_" + name, sol.fit().exponent);
            diag->details.emplace_back("fit_residual_" + name, sol.fit().residual);
            diag->details.emplace_back("richardson_change_" + name, sol.richardson_change);
            if (corrector_has_log(kind, ws.dim()) && sol.fit().residual > 0.05)
                diag->warnings.push_back("far-field log model misfit above 5% for " + name +
                                         " (residual " + format_number(sol.fit().residual) + ")");
        }
        return sol;
    };

    const CorrectorSolution U1 = solve(CorrectorKind::U1, corrector_drive(CorrectorKind::U1, ci));
    const CorrectorSolution U2hat =
        solve(CorrectorKind::U2hat, corrector_drive(CorrectorKind::U2hat, ci));
    const CorrectorSolution U2tilde =
        solve(CorrectorKind::U2tilde, corrector_drive(CorrectorKind::U2tilde, ci));
    const CorrectorSolution P1 = solve(CorrectorKind::P1, corrector_drive(CorrectorKind::P1, ci));
    const CorrectorSolution P2hat =
        solve(CorrectorKind::P2hat, corrector_drive(CorrectorKind::P2hat, ci));
    const CorrectorSolution P2tilde =
        solve(CorrectorKind::P2tilde, corrector_drive(CorrectorKind::P2tilde, ci));

    in.U1 = summarize(U1);
    in.strain_avg_U2 = U2hat.strain_average + U2tilde.strain_average;
    in.P1 = summarize(P1);
    in.strain_avg_P2 = P2hat.strain_average + P2tilde.strain_average;

    // q0 = p0 makes Q1hat coincide with P1 and Q2tilde with P2tilde; with
    // gamma_g = 0 the remaining gradient couplings vanish too and the whole
    // Q family reuses the P solves.
    if (in.weights.gamma_g != 0.0) {
        CorrectorDrive dq1 = corrector_drive(CorrectorKind::Q1tilde, ci);
        dq1.gradient_sources.emplace_back(&U1, -in.weights.gamma_g);
        const CorrectorSolution Q1tilde = solve(CorrectorKind::Q1tilde, dq1);
        in.Q1 = combine(in.P1, summarize(Q1tilde));

        CorrectorDrive dq2 = corrector_drive(CorrectorKind::Q2hat, ci);
        dq2.gradient_sources.emplace_back(&U2hat, -in.weights.gamma_g);
        dq2.gradient_sources.emplace_back(&U2tilde, -in.weights.gamma_g);
        const CorrectorSolution Q2hat = solve(CorrectorKind::Q2hat, dq2);
        in.strain_avg_Q2 = Q2hat.strain_average + P2tilde.strain_average;
    } else {
        in.Q1 = in.P1;
        in.strain_avg_Q2 = in.strain_avg_P2;
    }

    const RichardsonValue e11 = ws.gradient_pairing(U1, U1, 2 * (in.dim - 1));
    const RichardsonValue e12h = ws.gradient_pairing(U1, U2hat, in.dim - 1);
    const RichardsonValue e12t = ws.gradient_pairing(U1, U2tilde, in.dim - 1);
    in.grad_U1_sq = e11.value;
    in.grad_U1_sq_change = e11.change;
    in.grad_U1_U2 = e12h.value + e12t.value;
    in.grad_U1_U2_change = std::max(e12h.change, e12t.change);

    in.has_state_correctors = true;
    in.has_amstutz_correctors = true;
    in.has_averaged_correctors = true;
    in.validate();
    return in;
}

double ExpansionReport::ell1(double eps) const {
    return std::pow(eps, dim) * omega_measure;
}

double ExpansionReport::ell2(double eps) const { return eps * ell1(eps); }

ExpansionReport expansion_report(const ProblemSpec& problem, const PerturbationSpec& pert,
                                 const ExpansionParams& params, const DirectionFan* fan_in,
                                 CorrectorCache* cache) {
    problem.validate();
    pert.validate(problem);

    ExpansionReport rep;
    rep.dim = problem.dim;
    rep.omega_measure = pert.shape.measure(problem.dim);

    MeshContext ctx(problem, build_uniform_mesh(problem, params.h), params.order);
    // Default to the fan an oracle sweep of this problem would start from, so
    // the discrete inclusion polygon agrees between the corrector averages
    // and the fitted-mesh solves that validate them.
    DirectionFan fan_own;
    if (!fan_in) {
        const int segments = std::max(64, fan_segments(problem, pert.x0, params.h));
        fan_own = make_box_fan(problem, pert.x0, segments);
    }
    const DirectionFan& fan = fan_in ? *fan_in : fan_own;
    ExteriorWorkspace ws(pert.shape, problem.dim, problem.C1, problem.C2, params.R,
                         params.h_inner, params.grading, params.order, &fan);
    ws.set_cache(cache);

    const double patch = params.jet_patch > 0.0 ? params.jet_patch : 4.0 * params.h;
    AssemblyDiagnostics diag;
    rep.inputs = assemble_expansion_inputs(ctx, pert, ws, patch, &diag);
    rep.j0 = cost_evaluate(problem, ctx.state(false), false).total;

    for (Method m : {Method::amstutz, Method::averaged, Method::delfour}) {
        const auto i = static_cast<std::size_t>(m);
        rep.dJ[i] = first_order_td(m, rep.inputs);
        rep.d2J[i] = second_order_td(m, rep.inputs);
    }
    rep.dJ_spread = spread(rep.dJ);
    rep.d2J_spread = spread(rep.d2J);

    rep.details.emplace_back("interior_h", params.h);
    rep.details.emplace_back("interior_order", static_cast<double>(params.order));
    rep.details.emplace_back("interior_scalar_dofs",
                             static_cast<double>(ctx.space().num_scalar_dofs()));
    rep.details.emplace_back("jet_patch", patch);
    rep.details.emplace_back("exterior_R", params.R);
    rep.details.emplace_back("exterior_h_inner", params.h_inner);
    rep.details.emplace_back("j0", rep.j0);
    for (auto& d : diag.details) rep.details.push_back(std::move(d));
    rep.warnings = std::move(diag.warnings);

    const CostWeights w = problem.effective_weights();
    if (problem.dim == 3 && w.gamma_g != 0.0)
        rep.warnings.push_back(
            "3D gradient-cost corrector ingredients converge slowly in the truncation "
            "radius; treat second-order averaged values as low-accuracy");
    auto flag_change = [&rep](const char* what, double change) {
        if (change > 0.01)
            rep.warnings.push_back(std::string(what) +
                                   " changed by more than 1% between truncation radii (" +
                                   format_number(change) + ")");
    };
    flag_change("U1 strain average", rep.inputs.U1.richardson_change);
    flag_change("P1 strain average", rep.inputs.P1.richardson_change);
    flag_change("Q1 strain average", rep.inputs.Q1.richardson_change);
    if (w.gamma_g != 0.0) {
        // The gradient pairings only enter the formulas scaled by gamma_g.
        flag_change("grad U1 energy", rep.inputs.grad_U1_sq_change);
        flag_change("grad U1:U2 pairing", rep.inputs.grad_U1_U2_change);
    }

    return rep;
}

}  // namespace topoderiv
