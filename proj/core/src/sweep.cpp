#include "topoderiv/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace topoderiv {

namespace {

/// Relative residual of K u = rhs on the non-Dirichlet rows.
double free_dof_residual(const FemSystem& system, const FemField& u, const Eigen::VectorXd& rhs) {
    const Eigen::VectorXd r = system.stiffness() * u.coeffs - rhs;
    const int d = system.space().dim();
    std::vector<char> fixed(static_cast<std::size_t>(u.coeffs.size()), 0);
    for (int s : system.dirichlet_dofs())
        for (int c = 0; c < d; ++c) fixed[static_cast<std::size_t>(s * d + c)] = 1;
    double rr = 0.0, bb = 0.0;
    for (int i = 0; i < r.size(); ++i)
        if (!fixed[static_cast<std::size_t>(i)]) {
            rr += r(i) * r(i);
            bb += rhs(i) * rhs(i);
        }
    return std::sqrt(rr) / std::max(std::sqrt(bb), 1e-300);
}

}  // namespace

DirectionFan sweep_fan(const ProblemSpec& problem, const PerturbationSpec& pert,
                       const SweepParams& params) {
    const double eps_max = pert.max_eps();
    int segments = std::max(params.min_segments, fan_segments(problem, pert.x0, params.h));
    DirectionFan fan = make_box_fan(problem, pert.x0, segments);
    for (int attempt = 0;; ++attempt) {
        const Mesh probe = build_fitted_mesh(problem, pert, eps_max, params.h, fan);
        if (probe.max_diameter(1) <= 0.25 * eps_max) return fan;
        if (attempt == 4)
            throw std::runtime_error(
                "sweep_fan: could not satisfy the inclusion-zone width bound eps/4");
        segments = static_cast<int>(std::ceil(segments * 1.3));
        fan = make_box_fan(problem, pert.x0, segments);
    }
}

SweepCurve brute_force_sweep(const ProblemSpec& problem, const PerturbationSpec& pert,
                             const SweepParams& params, const DirectionFan* fan_in) {
    problem.validate();
    pert.validate(problem);
    if (pert.epsilons.size() < 2)
        throw std::invalid_argument("brute_force_sweep: need at least 2 epsilons");

    std::vector<double> eps = pert.epsilons;
    std::sort(eps.rbegin(), eps.rend());
    for (std::size_t i = 1; i < eps.size(); ++i)
        if (eps[i] == eps[i - 1])
            throw std::invalid_argument("brute_force_sweep: duplicate epsilon in grid");

    const DirectionFan fan = fan_in ? *fan_in : sweep_fan(problem, pert, params);
    if (fan_in) {
        const Mesh probe = build_fitted_mesh(problem, pert, eps.front(), params.h, fan);
        if (probe.max_diameter(1) > 0.25 * eps.front())
            throw std::invalid_argument(
                "brute_force_sweep: supplied fan violates the inclusion-zone width bound eps/4");
    }

    auto run_point = [&](double e, double h) {
        Mesh mesh = build_fitted_mesh(problem, pert, e, h, fan);
        const double h_inc = mesh.max_diameter(1);
        MeshContext ctx(problem, std::move(mesh), params.order);
        SweepPoint pt;
        pt.eps = e;
        pt.h = h;
        pt.h_inclusion = h_inc;
        pt.scalar_dofs = ctx.space().num_scalar_dofs();
        pt.samples = difference_samples(ctx, e);
        pt.residual = free_dof_residual(ctx.system(true), ctx.state(true), ctx.load(true));
        return pt;
    };

    SweepCurve curve;
    curve.points.resize(eps.size());
    const int jobs = std::max(1, std::min<int>(params.jobs, static_cast<int>(eps.size())));
    if (jobs == 1) {
        for (std::size_t i = 0; i < eps.size(); ++i) curve.points[i] = run_point(eps[i], params.h);
    } else {
        // Points are independent; slots are written by index, so the merged
        // curve does not depend on scheduling.
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        std::mutex error_mutex;
        std::string first_error;
        for (int t = 0; t < jobs; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < eps.size(); i = next.fetch_add(1)) {
                    try {
                        curve.points[i] = run_point(eps[i], params.h);
                    } catch (const std::exception& ex) {
                        const std::lock_guard<std::mutex> lock(error_mutex);
                        if (first_error.empty()) first_error = ex.what();
                    }
                }
            });
        for (std::thread& th : pool) th.join();
        if (!first_error.empty()) throw std::runtime_error(first_error);
    }

    if (params.check_refinement) {
        const SweepPoint& last = curve.points.back();
        const SweepPoint refined = run_point(last.eps, params.h / 2.0);
        curve.refine_change = std::abs(refined.samples.j_diff - last.samples.j_diff);
        curve.refine_budget = params.budget_factor * last.samples.ell2;
        if (curve.refine_change > curve.refine_budget) {
            // The increment error of an order-k element scales like h^(2k).
            const double exponent = 1.0 / (2.0 * params.order);
            const double h_needed =
                params.h * std::pow(curve.refine_budget / curve.refine_change, exponent);
            char msg[200];
            std::snprintf(msg, sizeof msg,
                          "brute_force_sweep: discretization error %.3e exceeds the budget %.3e "
                          "at eps = %g; retry with h <= %.4g",
                          curve.refine_change, curve.refine_budget, last.eps, h_needed);
            throw std::runtime_error(msg);
        }
        if (curve.refine_change > 0.5 * curve.refine_budget) {
            char msg[160];
            std::snprintf(msg, sizeof msg,
                          "smallest-eps increment moved by %.3e under refinement "
                          "(budget %.3e); mesh convergence is marginal",
                          curve.refine_change, curve.refine_budget);
            curve.warnings.push_back(msg);
        }
    }
    return curve;
}

std::vector<RateReport> expansion_residuals(const SweepCurve& curve, double j_scale, double dj,
                                            double d2j, const std::string& label) {
    if (curve.points.size() < 3)
        throw std::invalid_argument("expansion_residuals: curve too short for slope fitting");

    std::vector<double> eps, q1, q2;
    for (const SweepPoint& pt : curve.points) {
        const DifferenceSamples& s = pt.samples;
        const double r1 = s.j_diff - s.ell1 * dj;
        const double r2 = r1 - s.ell2 * d2j;
        eps.push_back(pt.eps);
        q1.push_back(r1 / s.ell1);
        q2.push_back(r2 / s.ell2);
    }
    // Solver-noise floor for identically-vanishing residuals (no contrast).
    const double noise = 1e-11 * std::max(j_scale, 1.0);
    const double floor1 = noise / curve.points.back().samples.ell1;
    const double floor2 = noise / curve.points.back().samples.ell2;

    std::vector<RateReport> out;
    out.push_back(rate_at_least(label + " first-order residual / ell1", eps, q1, 0.7, floor1));
    out.push_back(rate_at_least(label + " second-order residual / ell2", eps, q2, 0.5, floor2));
    return out;
}

std::vector<RateReport> expansion_residuals(const SweepCurve& curve,
                                            const ExpansionReport& report) {
    double j_scale = 0.0;
    for (const SweepPoint& pt : curve.points)
        j_scale = std::max({j_scale, std::abs(pt.samples.j_eps), std::abs(pt.samples.j0)});

    std::vector<RateReport> out;
    for (Method m : {Method::amstutz, Method::averaged, Method::delfour}) {
        auto reports = expansion_residuals(curve, j_scale, report.dj(m), report.d2j(m),
                                           method_name(m));
        for (auto& r : reports) out.push_back(std::move(r));
    }
    return out;
}

}  // namespace topoderiv
