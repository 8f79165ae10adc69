#include "topoderiv/limits.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace topoderiv {

QuotientSample quotient_sample(Method method, const DifferenceSamples& s) {
    QuotientSample q;
    q.eps = s.eps;
    q.ell1 = s.ell1;
    q.ell2 = s.ell2;
    switch (method) {
        case Method::amstutz:
            q.dl = s.am_dl;
            q.r1 = s.am_R;
            break;
        case Method::averaged:
            q.dl = s.av_dl;
            q.r1 = s.av_R;
            break;
        case Method::delfour:
            q.dl = s.df_dl;
            q.r1 = s.df_R1;
            q.r2 = s.df_R2;
            break;
    }
    return q;
}

SequenceLimit estimate_limit(const std::vector<double>& eps, const std::vector<double>& values) {
    if (eps.size() != values.size())
        throw std::invalid_argument("estimate_limit: eps/value length mismatch");
    const std::size_t n = eps.size();
    if (n < 3) throw std::invalid_argument("estimate_limit: need at least 3 samples");
    for (std::size_t i = 1; i < n; ++i)
        if (!(eps[i] < eps[i - 1]))
            throw std::invalid_argument("estimate_limit: eps must strictly decrease");

    SequenceLimit out;
    out.values = values;

    double scale = 1.0;
    for (double v : values) scale = std::max(scale, std::abs(v));
    const double roundoff = 1e-13 * scale;

    std::vector<double> inc(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) inc[i] = values[i + 1] - values[i];

    double inc_max = 0.0;
    for (double d : inc) inc_max = std::max(inc_max, std::abs(d));
    if (inc_max <= roundoff) {
        out.limit = values.back();
        out.converged = true;
        return out;
    }

    // Increment-decay orders from consecutive increment pairs: for
    // q = L + C eps^p on a decreasing grid, |inc_i / inc_{i+1}| =
    // (eps_{i+1} / eps_{i+2})^p.
    std::vector<double> orders;
    for (std::size_t i = 0; i + 1 < inc.size(); ++i) {
        if (std::abs(inc[i]) <= roundoff || std::abs(inc[i + 1]) <= roundoff) continue;
        orders.push_back(std::log(std::abs(inc[i] / inc[i + 1])) /
                         std::log(eps[i + 1] / eps[i + 2]));
    }
    if (orders.empty()) {
        // A single step above roundoff: no order information, take the last
        // value and flag it.
        out.limit = values.back();
        out.reliable = false;
        return out;
    }
    std::sort(orders.begin(), orders.end());
    out.observed_order = orders[orders.size() / 2];

    const double d_last = inc.back();
    const double d_prev = inc[inc.size() - 2];
    const bool oscillating = std::abs(d_last) > roundoff && std::abs(d_prev) > roundoff &&
                             d_last * d_prev < 0.0;
    const bool stalling = out.observed_order < 0.05;
    out.reliable = !oscillating && !stalling;

    const double p = std::clamp(out.observed_order, 0.05, 6.0);
    auto extrapolate = [&](std::size_t i) {
        // Limit from the pair (values[i-1], values[i]) assuming order p.
        const double rho = eps[i - 1] / eps[i];
        return values[i] - (values[i] - values[i - 1]) / (1.0 - std::pow(rho, p));
    };
    out.limit = extrapolate(n - 1);
    const double other = extrapolate(n - 2);
    out.residual = std::abs(out.limit - other) / std::max(std::abs(out.limit), roundoff);
    return out;
}

LimitEstimates lagrangian_limits(Method method, std::vector<QuotientSample> samples) {
    if (samples.size() < 3)
        throw std::invalid_argument("lagrangian_limits: need at least 3 samples");
    std::sort(samples.begin(), samples.end(),
              [](const QuotientSample& a, const QuotientSample& b) { return a.eps > b.eps; });

    LimitEstimates est;
    est.method = method;
    std::vector<double> dl1, r11, r21;
    for (const QuotientSample& s : samples) {
        if (!(s.ell1 > 0.0) || !(s.ell2 > 0.0))
            throw std::invalid_argument("lagrangian_limits: nonpositive ell1/ell2 sample");
        est.eps.push_back(s.eps);
        dl1.push_back(s.dl / s.ell1);
        r11.push_back(s.r1 / s.ell1);
        r21.push_back(s.r2 / s.ell1);
    }
    est.first_dl = estimate_limit(est.eps, dl1);
    est.first_r1 = estimate_limit(est.eps, r11);
    est.first_r2 = estimate_limit(est.eps, r21);

    std::vector<double> dl2, r12, r22;
    for (const QuotientSample& s : samples) {
        dl2.push_back((s.dl - s.ell1 * est.first_dl.limit) / s.ell2);
        r12.push_back((s.r1 - s.ell1 * est.first_r1.limit) / s.ell2);
        r22.push_back((s.r2 - s.ell1 * est.first_r2.limit) / s.ell2);
    }
    est.second_dl = estimate_limit(est.eps, dl2);
    est.second_r1 = estimate_limit(est.eps, r12);
    est.second_r2 = estimate_limit(est.eps, r22);
    return est;
}

}  // namespace topoderiv
