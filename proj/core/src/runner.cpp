#include "topoderiv/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <vector>

#include "topoderiv/cache.hpp"
#include "topoderiv/config.hpp"
#include "topoderiv/expansion.hpp"
#include "topoderiv/limits.hpp"
#include "topoderiv/polarisation.hpp"
#include "topoderiv/sweep.hpp"
#include "topoderiv/table_io.hpp"

namespace topoderiv {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

/// Collects INFO/PASS/FAIL lines plus a trailing WARN block and renders
/// report.txt. The exit code of the tool is derived from all_pass.
struct Report {
    std::vector<std::string> lines;
    std::vector<std::string> warnings;
    bool all_pass = true;

    void info(const std::string& name, const std::string& value) {
        lines.push_back("INFO  " + name + " = " + value);
    }
    void info(const std::string& name, double value) { info(name, num(value)); }
    void check(const std::string& name, bool pass, const std::string& detail) {
        lines.push_back(std::string(pass ? "PASS  " : "FAIL  ") + name +
                        (detail.empty() ? "" : "  [" + detail + "]"));
        all_pass = all_pass && pass;
    }
    void warn(const std::string& message) { warnings.push_back(message); }
    void absorb(const std::vector<std::string>& more) {
        warnings.insert(warnings.end(), more.begin(), more.end());
    }

    std::string render(const RunOptions& opts) const {
        std::string text = "topoderiv " + opts.command + "\n";
        text += "config: " + opts.config_path + "\n\n";
        for (const std::string& line : lines) text += line + "\n";
        if (!warnings.empty()) {
            text += "\nWARN:\n";
            for (const std::string& w : warnings) text += "  - " + w + "\n";
        }
        text += std::string("\nresult: ") + (all_pass ? "PASS" : "FAIL") + "\n";
        return text;
    }
};

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("short write: " + path);
}

ExpansionParams expansion_params(const RunSetup& setup) {
    ExpansionParams p;
    p.h = setup.numerics.h;
    p.order = setup.numerics.order;
    p.R = setup.numerics.exterior_radius;
    p.h_inner = setup.numerics.exterior_h;
    p.grading = setup.numerics.exterior_grading;
    return p;
}

SweepParams sweep_params(const RunSetup& setup, int jobs) {
    SweepParams p;
    p.h = setup.numerics.h;
    p.order = setup.numerics.order;
    p.jobs = jobs;
    return p;
}

std::vector<Method> selected_methods(const RunSetup& setup) {
    std::vector<Method> out;
    for (const std::string& name : setup.numerics.methods) {
        if (name == "amstutz") out.push_back(Method::amstutz);
        if (name == "averaged") out.push_back(Method::averaged);
        if (name == "delfour") out.push_back(Method::delfour);
    }
    if (out.empty()) throw std::invalid_argument("config selects no methods");
    return out;
}

std::string rate_detail(const RateReport& r) {
    std::string detail = "slope " + num(r.slope);
    if (r.rule == RateReport::Rule::slope_at_least)
        detail += ", needs >= " + num(r.predicted);
    else
        detail += ", predicted " + num(r.predicted) + " +- " + num(r.tolerance);
    if (r.degenerate) detail += ", values below the zero floor";
    return detail;
}

void add_expansion_checks(Report& rep, const ExpansionReport& er,
                          const std::vector<Method>& methods) {
    rep.info("dim", static_cast<double>(er.dim));
    rep.info("j0", er.j0);
    rep.info("omega measure", er.omega_measure);
    for (Method m : methods) {
        rep.info(std::string("dJ ") + method_name(m), er.dj(m));
        rep.info(std::string("d2J ") + method_name(m), er.d2j(m));
    }
    rep.check("cross-method first-order agreement", er.dJ_spread <= 0.01,
              "relative spread " + num(er.dJ_spread) + ", allowed 0.01");
    rep.check("cross-method second-order agreement", er.d2J_spread <= 0.05,
              "relative spread " + num(er.d2J_spread) + ", allowed 0.05");
    rep.absorb(er.warnings);
}

void write_expansion_tables(const std::string& out_dir, const ExpansionReport& er,
                            const std::vector<Method>& methods) {
    std::string table = "method,dJ,d2J\n";
    for (Method m : methods)
        table += std::string(method_name(m)) + "," + csv_number(er.dj(m)) + "," +
                 csv_number(er.d2j(m)) + "\n";
    write_text(out_dir + "/expansion.csv", table);

    std::string terms = "method,order,term,value\n";
    for (Method m : methods) {
        for (const auto& [name, value] : first_order_terms(m, er.inputs))
            terms += std::string(method_name(m)) + ",1," + name + "," + csv_number(value) + "\n";
        for (const auto& [name, value] : second_order_terms(m, er.inputs))
            terms += std::string(method_name(m)) + ",2," + name + "," + csv_number(value) + "\n";
    }
    write_text(out_dir + "/expansion_terms.csv", terms);
}

/// Shared body of `sweep` and `verify`: oracle curve, residual rates, and
/// limit estimates against the closed-form values.
void run_sweep_checks(Report& rep, const RunSetup& setup, const RunOptions& opts,
                      const ExpansionReport& er, const DirectionFan& fan) {
    const std::vector<Method> methods = selected_methods(setup);
    const SweepCurve curve = brute_force_sweep(setup.problem, setup.perturbation,
                                               sweep_params(setup, opts.jobs), &fan);
    rep.absorb(curve.warnings);

    write_sweep_csv(opts.out_dir + "/sweep.csv", curve);
    write_sweep_baseline_csv(opts.out_dir + "/sweep_baseline.csv", curve);

    for (const SweepPoint& pt : curve.points)
        rep.info("sweep eps " + num(pt.eps),
                 "j " + num(pt.samples.j_eps) + ", dofs " + num(pt.scalar_dofs) +
                     ", inclusion width " + num(pt.h_inclusion) + ", residual " +
                     num(pt.residual));
    rep.check("oracle mesh refinement budget", curve.refine_change <= curve.refine_budget,
              "smallest-eps increment moved " + num(curve.refine_change) + ", budget " +
                  num(curve.refine_budget));

    double j_scale = 0.0;
    std::vector<double> eps, raw_quotient;
    for (const SweepPoint& pt : curve.points) {
        j_scale = std::max({j_scale, std::abs(pt.samples.j_eps), std::abs(pt.samples.j0)});
        eps.push_back(pt.eps);
        raw_quotient.push_back(pt.samples.j_diff / pt.samples.ell1);
    }

    std::vector<PlotSeries> plot;
    for (Method m : methods) {
        const std::string name = method_name(m);
        const std::vector<RateReport> rates =
            expansion_residuals(curve, j_scale, er.dj(m), er.d2j(m), name);
        write_rate_csv(opts.out_dir + "/rate_" + name + "_first_order.csv", rates[0]);
        write_rate_csv(opts.out_dir + "/rate_" + name + "_second_order.csv", rates[1]);
        rep.check("first-order residual decay (" + name + ")", rates[0].pass,
                  rate_detail(rates[0]));
        rep.check("second-order residual decay (" + name + ")", rates[1].pass,
                  rate_detail(rates[1]));
        if (m == methods.front()) {
            plot.push_back({"increment / ell1", eps, raw_quotient});
            plot.push_back({"first-order residual / ell1 (" + name + ")", rates[0].eps,
                            rates[0].values});
            plot.push_back({"second-order residual / ell2 (" + name + ")", rates[1].eps,
                            rates[1].values});
        }
    }
    write_loglog_svg(opts.out_dir + "/residuals.svg", "expansion residuals", plot);

    if (eps.size() < 3) {
        rep.warn("fewer than 3 eps points: limit extrapolation skipped");
        return;
    }

    // Extrapolated defining quotient against the closed forms.
    const SequenceLimit raw = estimate_limit(eps, raw_quotient);
    rep.info("extrapolated increment quotient", raw.limit);
    if (!raw.reliable)
        rep.warn("increment quotient extrapolation is unreliable (oscillating or "
                 "stalling increments); treat the limit as indicative");

    std::string limits_table = "method,first_order,second_order\n";
    for (Method m : methods) {
        const std::string name = method_name(m);
        std::vector<QuotientSample> samples;
        for (const SweepPoint& pt : curve.points) samples.push_back(quotient_sample(m, pt.samples));
        const LimitEstimates est = lagrangian_limits(m, samples);
        limits_table += name + "," + csv_number(est.first_order()) + "," +
                        csv_number(est.second_order()) + "\n";
        rep.info("limit estimate first order (" + name + ")", est.first_order());
        rep.info("limit estimate second order (" + name + ")", est.second_order());

        const double dj = er.dj(m);
        const double dj_floor = std::max(std::abs(dj), 1e-9 * std::max(j_scale, 1.0));
        rep.check("extrapolated quotient matches dJ (" + name + ")",
                  std::abs(raw.limit - dj) <= 0.02 * dj_floor,
                  "quotient " + num(raw.limit) + ", dJ " + num(dj));
        rep.check("limit estimate matches dJ (" + name + ")",
                  std::abs(est.first_order() - dj) <= 0.02 * dj_floor,
                  "estimate " + num(est.first_order()) + ", dJ " + num(dj));

        // A centered symmetric inclusion drives the true second-order
        // coefficient to zero, so the comparison floor is tied to the
        // first-order scale instead of a vanishing |d2J|.
        const double d2 = er.d2j(m);
        const double d2_floor = std::max(std::abs(d2), std::max(std::abs(dj), 1e-9));
        rep.check("limit estimate matches d2J (" + name + ")",
                  std::abs(est.second_order() - d2) <= 0.05 * d2_floor,
                  "estimate " + num(est.second_order()) + ", d2J " + num(d2));
    }
    write_text(opts.out_dir + "/limits.csv", limits_table);
}

int cmd_expand(const RunSetup& setup, const RunOptions& opts, CorrectorCache* cache) {
    Report rep;
    const std::vector<Method> methods = selected_methods(setup);
    const DirectionFan fan = sweep_fan(setup.problem, setup.perturbation,
                                       sweep_params(setup, opts.jobs));
    const ExpansionReport er =
        expansion_report(setup.problem, setup.perturbation, expansion_params(setup), &fan, cache);
    add_expansion_checks(rep, er, methods);
    for (const auto& [name, value] : er.details) rep.info(name, value);
    write_expansion_tables(opts.out_dir, er, methods);
    const std::string text = rep.render(opts);
    write_text(opts.out_dir + "/report.txt", text);
    std::cout << text;
    return rep.all_pass ? 0 : 1;
}

int cmd_sweep(const RunSetup& setup, const RunOptions& opts, CorrectorCache* cache,
              bool with_expansion_checks) {
    Report rep;
    const std::vector<Method> methods = selected_methods(setup);
    const DirectionFan fan = sweep_fan(setup.problem, setup.perturbation,
                                       sweep_params(setup, opts.jobs));
    const ExpansionReport er =
        expansion_report(setup.problem, setup.perturbation, expansion_params(setup), &fan, cache);
    if (with_expansion_checks) {
        add_expansion_checks(rep, er, methods);
    } else {
        for (Method m : methods) {
            rep.info(std::string("dJ ") + method_name(m), er.dj(m));
            rep.info(std::string("d2J ") + method_name(m), er.d2j(m));
        }
        rep.absorb(er.warnings);
    }
    write_expansion_tables(opts.out_dir, er, methods);
    run_sweep_checks(rep, setup, opts, er, fan);
    const std::string text = rep.render(opts);
    write_text(opts.out_dir + "/report.txt", text);
    std::cout << text;
    return rep.all_pass ? 0 : 1;
}

int cmd_correctors(const RunSetup& setup, const RunOptions& opts, CorrectorCache* cache) {
    Report rep;
    const ProblemSpec& problem = setup.problem;
    const PerturbationSpec& pert = setup.perturbation;
    const ExpansionParams params = expansion_params(setup);

    MeshContext ctx(problem, build_uniform_mesh(problem, params.h), params.order);
    const double patch = params.jet_patch > 0.0 ? params.jet_patch : 4.0 * params.h;
    const CorrectorInputs ci = corrector_inputs_at(ctx, pert.x0, patch);

    const DirectionFan fan = sweep_fan(problem, pert, sweep_params(setup, opts.jobs));
    ExteriorWorkspace ws(pert.shape, problem.dim, problem.C1, problem.C2, params.R,
                         params.h_inner, params.grading, params.order, &fan);
    ws.set_cache(cache);

    std::vector<CorrectorSolution> sols;
    sols.reserve(8);  // gradient drives hold pointers into this vector
    auto solve = [&](CorrectorKind kind, CorrectorDrive drive) -> const CorrectorSolution& {
        sols.push_back(ws.solve_corrector(kind, drive));
        return sols.back();
    };
    // Mirror of the expansion assembly: the same kinds in the same order.
    solve(CorrectorKind::U1, corrector_drive(CorrectorKind::U1, ci));
    solve(CorrectorKind::U2hat, corrector_drive(CorrectorKind::U2hat, ci));
    solve(CorrectorKind::U2tilde, corrector_drive(CorrectorKind::U2tilde, ci));
    solve(CorrectorKind::P1, corrector_drive(CorrectorKind::P1, ci));
    solve(CorrectorKind::P2hat, corrector_drive(CorrectorKind::P2hat, ci));
    solve(CorrectorKind::P2tilde, corrector_drive(CorrectorKind::P2tilde, ci));
    if (ci.weights.gamma_g != 0.0) {
        CorrectorDrive dq1 = corrector_drive(CorrectorKind::Q1tilde, ci);
        dq1.gradient_sources.emplace_back(&sols[0], -ci.weights.gamma_g);
        solve(CorrectorKind::Q1tilde, dq1);
        CorrectorDrive dq2 = corrector_drive(CorrectorKind::Q2hat, ci);
        dq2.gradient_sources.emplace_back(&sols[1], -ci.weights.gamma_g);
        dq2.gradient_sources.emplace_back(&sols[2], -ci.weights.gamma_g);
        solve(CorrectorKind::Q2hat, dq2);
    }

    // Reference scale for the Richardson stability of kinds whose averages
    // vanish by symmetry (their relative change is noise over noise).
    double family_scale = 0.0;
    for (const CorrectorSolution& s : sols)
        family_scale = std::max(family_scale, s.strain_avg_level[1].norm());

    std::string table =
        "kind,predicted_exponent,free_exponent,model_residual,log_coefficient,"
        "average_change,average_norm\n";
    std::vector<PlotSeries> decay;
    const double r1 = ws.level(1).radius;
    std::vector<double> radii;
    for (int i = 0; i < 14; ++i)
        radii.push_back(0.25 * r1 * std::pow(3.0, i / 13.0));  // up to 0.75 r1

    for (const CorrectorSolution& s : sols) {
        const std::string name = corrector_kind_name(s.kind);
        const double predicted = corrector_predicted_exponent(s.kind, problem.dim);
        const FarFieldFit& fit = s.fit();
        table += name + "," + csv_number(predicted) + "," + csv_number(fit.exponent) + "," +
                 csv_number(fit.residual) + "," + csv_number(fit.log_coefficient) + "," +
                 csv_number(s.richardson_change) + "," +
                 csv_number(s.strain_average.norm()) + "\n";

        rep.info("far-field free exponent " + name,
                 num(fit.exponent) + " (predicted " + num(predicted) + ", model residual " +
                     num(fit.residual) + ")");
        const bool first_family = s.kind == CorrectorKind::U1 || s.kind == CorrectorKind::P1 ||
                                  s.kind == CorrectorKind::Q1hat;
        if (first_family)
            rep.check("far-field exponent (" + name + ")",
                      std::abs(fit.exponent - predicted) <= 0.15,
                      "free exponent " + num(fit.exponent) + ", predicted " + num(predicted));

        const double own_scale = std::max(s.strain_avg_level[0].norm(),
                                          s.strain_avg_level[1].norm());
        const bool negligible = own_scale <= 1e-3 * family_scale;
        rep.check("average stable under radius doubling (" + name + ")",
                  s.richardson_change <= 0.01 || negligible,
                  negligible ? "average is negligible at scale " + num(own_scale)
                             : "relative change " + num(s.richardson_change) + ", allowed 0.01");

        const FarFieldSamples samples = sample_farfield(s.field[1], *ws.level(1).locator, radii,
                                                        problem.dim == 2 ? 64 : 20);
        PlotSeries series{name, {}, {}};
        for (std::size_t l = 0; l < samples.radii.size(); ++l) {
            series.x.push_back(samples.radii[l]);
            series.y.push_back(samples.radius_amplitude(static_cast<int>(l)));
        }
        decay.push_back(std::move(series));
    }
    write_text(opts.out_dir + "/correctors.csv", table);
    write_loglog_svg(opts.out_dir + "/decay.svg", "corrector far-field decay", decay);

    // Individual second-order kinds with no net load (the strain-jet drives)
    // decay faster than the family prediction, so the predicted-rate fit is
    // only meaningful for the combined field that the expansion consumes.
    auto combined_fit = [&](const char* label, const CorrectorSolution& a,
                            const CorrectorSolution& b) {
        FemField sum(*ws.level(1).space);
        sum.coeffs = a.field[1].coeffs + b.field[1].coeffs;
        const double predicted = corrector_predicted_exponent(a.kind, problem.dim);
        const bool with_log = corrector_has_log(a.kind, problem.dim);
        const FarFieldFit fit = fit_farfield(sum, *ws.level(1).locator, 0.25 * r1, 0.75 * r1,
                                             predicted, with_log);
        rep.check(std::string("far-field exponent (combined ") + label + ")",
                  std::abs(fit.exponent - predicted) <= 0.15,
                  "free exponent " + num(fit.exponent) + ", predicted " + num(predicted) +
                      ", model residual " + num(fit.residual));
        return fit;
    };
    std::string combined = "family,predicted_exponent,free_exponent,model_residual,"
                           "log_coefficient\n";
    auto combined_row = [&](const char* label, const FarFieldFit& fit, double predicted) {
        combined += std::string(label) + "," + csv_number(predicted) + "," +
                    csv_number(fit.exponent) + "," + csv_number(fit.residual) + "," +
                    csv_number(fit.log_coefficient) + "\n";
    };
    const double pred2 = corrector_predicted_exponent(CorrectorKind::U2tilde, problem.dim);
    combined_row("U2", combined_fit("U2", sols[1], sols[2]), pred2);
    combined_row("P2", combined_fit("P2", sols[4], sols[5]), pred2);
    if (ci.weights.gamma_g != 0.0)
        combined_row("Q2", combined_fit("Q2", sols[7], sols[5]), pred2);
    write_text(opts.out_dir + "/farfield_combined.csv", combined);

    if (cache) rep.info("cache", num(cache->hits()) + " hits, " + num(cache->misses()) + " misses");

    const std::string text = rep.render(opts);
    write_text(opts.out_dir + "/report.txt", text);
    std::cout << text;
    return rep.all_pass ? 0 : 1;
}

int cmd_polarisation(const RunSetup& setup, const RunOptions& opts, CorrectorCache* cache) {
    Report rep;
    const ProblemSpec& problem = setup.problem;
    const PerturbationSpec& pert = setup.perturbation;
    const ExpansionParams params = expansion_params(setup);
    const CostWeights w = problem.effective_weights();

    MeshContext ctx(problem, build_uniform_mesh(problem, params.h), params.order);
    const double patch = params.jet_patch > 0.0 ? params.jet_patch : 4.0 * params.h;
    const CorrectorInputs ci = corrector_inputs_at(ctx, pert.x0, patch);

    const DirectionFan fan = sweep_fan(problem, pert, sweep_params(setup, opts.jobs));
    ExteriorWorkspace ws(pert.shape, problem.dim, problem.C1, problem.C2, params.R,
                         params.h_inner, params.grading, params.order, &fan);
    ws.set_cache(cache);

    const PolarisationTensor P = polarisation_tensor(ws, PolarisationKind::strain, w.gamma_g);
    std::string table = "row,col,value\n";
    for (Eigen::Index i = 0; i < P.matrix.rows(); ++i)
        for (Eigen::Index j = 0; j < P.matrix.cols(); ++j)
            table += num(static_cast<double>(i)) + "," + num(static_cast<double>(j)) + "," +
                     csv_number(P.matrix(i, j)) + "\n";
    write_text(opts.out_dir + "/polarisation.csv", table);

    rep.info("matrix dimension", static_cast<double>(P.matrix.rows()));
    const double asym = (P.matrix - P.matrix.transpose()).norm() /
                        std::max(P.matrix.norm(), 1e-300);
    rep.info("relative asymmetry", asym);

    // The map must condense the adjoint corrector: solving P1 directly and
    // applying the map to the same probe strain are the same linear algebra.
    const CorrectorSolution P1 = ws.solve_corrector(
        CorrectorKind::P1, corrector_drive(CorrectorKind::P1, ci));
    const Eigen::Matrix3d via_map = P.apply(ci.p0.strain());
    const double scale = std::max(P1.strain_average.norm(), 1e-300);
    const double agree = (via_map - P1.strain_average).norm() / scale;
    rep.check("condensed map matches the direct corrector average", agree <= 1e-8,
              "relative difference " + num(agree));

    const ElasticTensor jump = problem.C1 - problem.C2;
    Eigen::MatrixXd eu = jump.apply(ci.u0.strain().topLeftCorner(problem.dim, problem.dim));
    Eigen::Matrix3d jump_eu = Eigen::Matrix3d::Zero();
    jump_eu.topLeftCorner(problem.dim, problem.dim) = eu;
    rep.info("condensed first-order corrector term",
             (jump_eu.transpose() * via_map).trace());

    if (cache) rep.info("cache", num(cache->hits()) + " hits, " + num(cache->misses()) + " misses");

    const std::string text = rep.render(opts);
    write_text(opts.out_dir + "/report.txt", text);
    std::cout << text;
    return rep.all_pass ? 0 : 1;
}

}  // namespace

int run_command(const RunOptions& opts) {
    try {
        if (opts.config_path.empty()) throw std::invalid_argument("missing --config");
        if (opts.jobs < 1) throw std::invalid_argument("--jobs must be at least 1");
        const RunSetup setup = parse_config_file(opts.config_path);
        std::filesystem::create_directories(opts.out_dir);

        std::optional<CorrectorCache> cache;
        if (!opts.cache_dir.empty()) cache.emplace(opts.cache_dir);
        CorrectorCache* cache_ptr = cache ? &*cache : nullptr;

        if (opts.command == "expand") return cmd_expand(setup, opts, cache_ptr);
        if (opts.command == "sweep") return cmd_sweep(setup, opts, cache_ptr, false);
        if (opts.command == "verify") return cmd_sweep(setup, opts, cache_ptr, true);
        if (opts.command == "correctors") return cmd_correctors(setup, opts, cache_ptr);
        if (opts.command == "polarisation") return cmd_polarisation(setup, opts, cache_ptr);
        throw std::invalid_argument("unknown command '" + opts.command + "'");
    } catch (const std::exception& ex) {
        std::cerr << "topoderiv " << opts.command << ": " << ex.what() << "\n";
        return 2;
    }
}

}  // namespace topoderiv
