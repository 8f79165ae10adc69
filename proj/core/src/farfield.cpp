#include "topoderiv/farfield.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace topoderiv {
namespace {

std::string point_text(const Eigen::Vector3d& x, int dim) {
    std::ostringstream out;
    out << "(" << x(0);
    for (int i = 1; i < dim; ++i) out << ", " << x(i);
    out << ")";
    return out.str();
}

std::vector<std::array<int, 3>> angular_monomials(int dim, int degree) {
    std::vector<std::array<int, 3>> monos;
    for (int total = 0; total <= degree; ++total) {
        for (int a = total; a >= 0; --a) {
            if (dim == 2) {
                monos.push_back({a, total - a, 0});
            } else {
                for (int b = total - a; b >= 0; --b) monos.push_back({a, b, total - a - b});
            }
        }
    }
    return monos;
}

double eval_monomial(const std::array<int, 3>& m, const Eigen::Vector3d& u) {
    double v = 1.0;
    for (int i = 0; i < 3; ++i) {
        for (int k = 0; k < m[i]; ++k) v *= u(i);
    }
    return v;
}

Eigen::Vector3d monomial_gradient(const std::array<int, 3>& m, const Eigen::Vector3d& x) {
    Eigen::Vector3d g = Eigen::Vector3d::Zero();
    for (int i = 0; i < 3; ++i) {
        if (m[i] == 0) continue;
        std::array<int, 3> reduced = m;
        reduced[i] -= 1;
        g(i) = m[i] * eval_monomial(reduced, x);
    }
    return g;
}

int default_degree(int dim) { return dim == 2 ? 4 : 2; }

/// Nuisance basis absorbing the truncation image: a zero-Dirichlet cutoff
/// replaces the exterior field by the exterior field minus an interior
/// regular elastostatic correction, and interior regular solutions are
/// displacement polynomials, so low-degree monomials in the physical point
/// soak up the cutoff error on the sampling band. Degree 0 is excluded; the
/// constant column is handled separately.
std::vector<std::array<int, 3>> mirror_monomials(int dim, int degree) {
    auto all = angular_monomials(dim, degree);
    std::vector<std::array<int, 3>> monos;
    for (const auto& m : all)
        if (m[0] + m[1] + m[2] >= 1) monos.push_back(m);
    return monos;
}

/// Weighted least-squares fit at a fixed exponent. Columns: the angular
/// monomials times r^p, then optionally ln r, then optionally a constant,
/// then the mirror polynomials. Mirror radii are scaled by the outermost
/// sampling radius to keep the columns of comparable size.
struct LinearFit {
    Eigen::MatrixXd coef;  // dim x columns
    double residual = 0.0;  // relative to the weighted data norm
};

LinearFit fit_at_exponent(const FarFieldSamples& s, const std::vector<std::array<int, 3>>& monos,
                          const std::vector<std::array<int, 3>>& mirror, double p, bool log_col,
                          bool const_col, const std::vector<double>& weights) {
    const int n_radii = static_cast<int>(s.radii.size());
    const int n_dirs = static_cast<int>(s.directions.size());
    const int n_mono = static_cast<int>(monos.size());
    const int n_mirror = static_cast<int>(mirror.size());
    const int cols = n_mono + (log_col ? 1 : 0) + (const_col ? 1 : 0) + n_mirror;
    const int rows = n_radii * n_dirs;
    const double r_scale = s.radii.back();

    Eigen::MatrixXd A(rows, cols);
    Eigen::MatrixXd B(rows, s.dim);
    for (int l = 0; l < n_radii; ++l) {
        const double r = s.radii[l];
        const double w = weights[l];
        const double rp = std::pow(r, p);
        for (int k = 0; k < n_dirs; ++k) {
            const int row = l * n_dirs + k;
            const Eigen::Vector3d scaled = (r / r_scale) * s.directions[k];
            for (int j = 0; j < n_mono; ++j)
                A(row, j) = w * rp * eval_monomial(monos[j], s.directions[k]);
            int extra = n_mono;
            if (log_col) A(row, extra++) = w * std::log(r);
            if (const_col) A(row, extra++) = w;
            for (int j = 0; j < n_mirror; ++j)
                A(row, extra + j) = w * eval_monomial(mirror[j], scaled);
            for (int i = 0; i < s.dim; ++i) B(row, i) = w * s.values[l](i, k);
        }
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    Eigen::MatrixXd X = qr.solve(B);
    const double data_norm = B.norm();
    LinearFit fit;
    fit.coef = X.transpose();
    fit.residual = data_norm > 0.0 ? (A * X - B).norm() / data_norm : 0.0;
    return fit;
}

}  // namespace

std::vector<Eigen::Vector3d> farfield_directions(int dim, int count) {
    if (count < dim + 1) throw std::invalid_argument("farfield_directions: count too small");
    std::vector<Eigen::Vector3d> dirs(count, Eigen::Vector3d::Zero());
    if (dim == 2) {
        for (int k = 0; k < count; ++k) {
            // half-step offset keeps samples off the coordinate axes
            const double theta = 2.0 * M_PI * (k + 0.5) / count;
            dirs[k] = Eigen::Vector3d(std::cos(theta), std::sin(theta), 0.0);
        }
    } else if (dim == 3) {
        const double golden = M_PI * (3.0 - std::sqrt(5.0));
        for (int k = 0; k < count; ++k) {
            const double z = 1.0 - 2.0 * (k + 0.5) / count;
            const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double phi = golden * k;
            dirs[k] = Eigen::Vector3d(rho * std::cos(phi), rho * std::sin(phi), z);
        }
    } else {
        throw std::invalid_argument("farfield_directions: dimension must be 2 or 3");
    }
    return dirs;
}

std::vector<double> sampling_radii(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("sampling_radii: need 0 < lo < hi");
    if (count < 2) throw std::invalid_argument("sampling_radii: need at least two radii");
    std::vector<double> radii(count);
    const double ratio = std::log(hi / lo) / (count - 1);
    for (int i = 0; i < count; ++i) radii[i] = lo * std::exp(ratio * i);
    radii.back() = hi;
    return radii;
}

double FarFieldSamples::amplitude() const {
    double sum = 0.0;
    long n = 0;
    for (const auto& block : values) {
        sum += block.squaredNorm();
        n += block.cols();
    }
    return n > 0 ? std::sqrt(sum / static_cast<double>(n)) : 0.0;
}

double FarFieldSamples::radius_amplitude(int l) const {
    const auto& block = values[static_cast<std::size_t>(l)];
    return block.cols() > 0 ? std::sqrt(block.squaredNorm() / static_cast<double>(block.cols()))
                            : 0.0;
}

FarFieldSamples sample_farfield(const std::function<Eigen::Vector3d(const Eigen::Vector3d&)>& field,
                                int dim, const std::vector<double>& radii,
                                int directions_per_radius) {
    FarFieldSamples s;
    s.dim = dim;
    s.radii = radii;
    s.directions = farfield_directions(dim, directions_per_radius);
    s.values.reserve(radii.size());
    for (double r : radii) {
        Eigen::MatrixXd block(dim, directions_per_radius);
        for (int k = 0; k < directions_per_radius; ++k) {
            const Eigen::Vector3d v = field(r * s.directions[k]);
            for (int i = 0; i < dim; ++i) block(i, k) = v(i);
        }
        s.values.push_back(std::move(block));
    }
    return s;
}

FarFieldSamples sample_farfield(const FemField& field, const CellLocator& locator,
                                const std::vector<double>& radii, int directions_per_radius) {
    if (field.space == nullptr) throw std::invalid_argument("sample_farfield: field has no space");
    const int dim = field.space->dim();
    FarFieldSamples s;
    s.dim = dim;
    s.radii = radii;
    s.directions = farfield_directions(dim, directions_per_radius);
    s.values.reserve(radii.size());
    Eigen::Vector4d bary;
    for (double r : radii) {
        Eigen::MatrixXd block(dim, directions_per_radius);
        for (int k = 0; k < directions_per_radius; ++k) {
            const Eigen::Vector3d x = r * s.directions[k];
            const int cell = locator.locate(x, bary);
            if (cell < 0) {
                throw std::runtime_error("sample_farfield: point " + point_text(x, dim) +
                                         " at radius " + std::to_string(r) +
                                         " lies outside the mesh");
            }
            const Eigen::Vector3d v = field.value(cell, bary);
            for (int i = 0; i < dim; ++i) block(i, k) = v(i);
        }
        s.values.push_back(std::move(block));
    }
    return s;
}

Eigen::Vector3d FarFieldModel::value(const Eigen::Vector3d& x) const {
    const double r = x.norm();
    if (!(r > 0.0)) throw std::invalid_argument("far-field model evaluated at the origin");
    const Eigen::Vector3d u = x / r;
    Eigen::Vector3d v = Eigen::Vector3d::Zero();
    const double rp = std::pow(r, exponent);
    for (std::size_t j = 0; j < monomials.size(); ++j) {
        const double m = eval_monomial(monomials[j], u);
        for (int i = 0; i < dim; ++i) v(i) += power_coef(i, static_cast<int>(j)) * rp * m;
    }
    if (log_coef.size() == dim) {
        const double lr = std::log(r);
        for (int i = 0; i < dim; ++i) v(i) += log_coef(i) * lr;
    }
    return v;
}

Eigen::Matrix3d FarFieldModel::gradient(const Eigen::Vector3d& x) const {
    const double r = x.norm();
    if (!(r > 0.0)) throw std::invalid_argument("far-field model evaluated at the origin");
    Eigen::Matrix3d g = Eigen::Matrix3d::Zero();
    // Each angular monomial of degree q extends to m(x) r^(p-q), homogeneous
    // of degree p, so the gradient is exact at any radius.
    for (std::size_t j = 0; j < monomials.size(); ++j) {
        const auto& m = monomials[j];
        const int q = m[0] + m[1] + m[2];
        const double s = exponent - q;
        const double rs = std::pow(r, s);
        const double mval = eval_monomial(m, x);
        const Eigen::Vector3d mgrad = monomial_gradient(m, x);
        for (int i = 0; i < dim; ++i) {
            const double c = power_coef(i, static_cast<int>(j));
            for (int k = 0; k < dim; ++k)
                g(i, k) += c * (rs * mgrad(k) + s * rs / (r * r) * mval * x(k));
        }
    }
    if (log_coef.size() == dim) {
        for (int i = 0; i < dim; ++i)
            for (int k = 0; k < dim; ++k) g(i, k) += log_coef(i) * x(k) / (r * r);
    }
    return g;
}

Eigen::Matrix3d FarFieldModel::strain(const Eigen::Vector3d& x) const {
    const Eigen::Matrix3d g = gradient(x);
    return 0.5 * (g + g.transpose());
}

bool FarFieldModel::zero(double tol) const {
    const double power = power_coef.size() > 0 ? power_coef.cwiseAbs().maxCoeff() : 0.0;
    const double logc = log_coef.size() > 0 ? log_coef.cwiseAbs().maxCoeff() : 0.0;
    return power <= tol && logc <= tol;
}

FarFieldFit fit_farfield(const FarFieldSamples& samples, double predicted_exponent, bool with_log,
                         int angular_degree) {
    if (samples.radii.size() < 3)
        throw std::invalid_argument("fit_farfield: need at least three sampling radii");
    if (samples.dim != 2 && samples.dim != 3)
        throw std::invalid_argument("fit_farfield: samples carry no dimension");
    const int degree = angular_degree >= 0 ? angular_degree : default_degree(samples.dim);
    const auto monos = angular_monomials(samples.dim, degree);
    const auto mirror = mirror_monomials(samples.dim, samples.dim == 2 ? 3 : 2);
    if (static_cast<int>(samples.radii.size() * samples.directions.size()) <
        static_cast<int>(monos.size() + mirror.size()) + 2)
        throw std::invalid_argument("fit_farfield: too few samples for the angular degree");

    FarFieldFit fit;
    fit.predicted_exponent = predicted_exponent;
    fit.with_log = with_log;
    fit.amplitude = samples.amplitude();

    FarFieldModel& model = fit.model;
    model.dim = samples.dim;
    model.exponent = predicted_exponent;
    model.angular_degree = degree;
    model.monomials = monos;
    model.power_coef = Eigen::MatrixXd::Zero(samples.dim, static_cast<int>(monos.size()));
    model.log_coef = Eigen::VectorXd::Zero(samples.dim);

    if (fit.amplitude <= 0.0) {
        fit.exponent = predicted_exponent;
        return fit;
    }

    // Equalize the radius blocks so the exponent scan is not dominated by
    // whichever end of the band has the largest magnitudes.
    std::vector<double> weights(samples.radii.size());
    for (std::size_t l = 0; l < samples.radii.size(); ++l) {
        const double a = samples.radius_amplitude(static_cast<int>(l));
        weights[l] = 1.0 / std::max(a, 1e-8 * fit.amplitude);
    }

    // Free exponent: deterministic coarse scan, then golden-section
    // refinement. The basis here is angular + constant without the log
    // column, so logarithmic fields are classified by an exponent near zero.
    const auto scan_residual = [&](double p) {
        return fit_at_exponent(samples, monos, mirror, p, false, true, weights).residual;
    };
    double best_p = predicted_exponent;
    double best_r = scan_residual(best_p);
    const double half_width = 1.25;
    const int coarse = 50;
    for (int i = 0; i <= coarse; ++i) {
        const double p = predicted_exponent - half_width + 2.0 * half_width * i / coarse;
        const double r = scan_residual(p);
        if (r < best_r) {
            best_r = r;
            best_p = p;
        }
    }
    {
        const double gold = (std::sqrt(5.0) - 1.0) / 2.0;
        double a = best_p - 2.0 * half_width / coarse;
        double b = best_p + 2.0 * half_width / coarse;
        double c = b - gold * (b - a);
        double d = a + gold * (b - a);
        double fc = scan_residual(c);
        double fd = scan_residual(d);
        for (int it = 0; it < 80 && (b - a) > 1e-13; ++it) {
            if (fc < fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - gold * (b - a);
                fc = scan_residual(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + gold * (b - a);
                fd = scan_residual(d);
            }
        }
        const double p = 0.5 * (a + b);
        const double r = scan_residual(p);
        if (r <= best_r) {
            best_r = r;
            best_p = p;
        }
    }
    fit.exponent = best_p;
    fit.free_residual = best_r;

    // Snapped model at the predicted exponent. A constant nuisance column
    // absorbs gauge shifts of decaying kinds; for bounded kinds the degree-0
    // angular monomial already plays that role.
    const bool const_col = predicted_exponent < -0.25;
    const LinearFit snapped =
        fit_at_exponent(samples, monos, mirror, predicted_exponent, with_log, const_col, weights);
    fit.residual = snapped.residual;
    model.power_coef = snapped.coef.leftCols(static_cast<int>(monos.size()));
    int extra = static_cast<int>(monos.size());
    if (with_log) {
        model.log_coef = snapped.coef.col(extra++);
        fit.log_coefficient = model.log_coef.norm();
    }
    if (const_col) {
        for (int i = 0; i < samples.dim; ++i) fit.constant_shift(i) = snapped.coef(i, extra);
    }
    return fit;
}

FarFieldFit fit_farfield(const FemField& field, const CellLocator& locator, double r_lo,
                         double r_hi, double predicted_exponent, bool with_log,
                         int angular_degree) {
    const int dim = field.space->dim();
    const int n_dirs = dim == 2 ? 64 : 192;
    const FarFieldSamples samples =
        sample_farfield(field, locator, sampling_radii(r_lo, r_hi, 8), n_dirs);
    return fit_farfield(samples, predicted_exponent, with_log, angular_degree);
}

FarFieldModel add_models(const FarFieldModel& a, const FarFieldModel& b) {
    if (a.dim != b.dim) throw std::invalid_argument("add_models: dimension mismatch");
    if (std::abs(a.exponent - b.exponent) > 1e-9)
        throw std::invalid_argument("add_models: exponent mismatch");
    if (a.monomials != b.monomials)
        throw std::invalid_argument("add_models: angular bases differ");
    FarFieldModel sum = a;
    sum.power_coef += b.power_coef;
    sum.log_coef += b.log_coef;
    return sum;
}

}  // namespace topoderiv
