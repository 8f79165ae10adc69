#include "topoderiv/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace topoderiv {

namespace {

double polygon_area(const std::vector<Eigen::Vector2d>& poly) {
    double a = 0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = poly[i];
        const auto& q = poly[(i + 1) % n];
        a += p.x() * q.y() - q.x() * p.y();
    }
    return 0.5 * a;
}

}  // namespace

double InclusionShape::measure(int dim) const {
    switch (kind) {
        case Kind::Ball:
            return dim == 2 ? M_PI : 4.0 * M_PI / 3.0;
        case Kind::Ellipse: {
            double m = dim == 2 ? M_PI : 4.0 * M_PI / 3.0;
            for (int i = 0; i < dim; ++i) m *= semi_axes[i];
            return m;
        }
        case Kind::Polygon:
            return polygon_area(polygon);
    }
    return 0;
}

double InclusionShape::max_radius(int dim) const {
    switch (kind) {
        case Kind::Ball:
            return 1.0;
        case Kind::Ellipse: {
            double r = 0;
            for (int i = 0; i < dim; ++i) r = std::max(r, semi_axes[i]);
            return r;
        }
        case Kind::Polygon: {
            double r = 0;
            for (const auto& v : polygon) r = std::max(r, v.norm());
            return r;
        }
    }
    return 0;
}

double InclusionShape::boundary_radius(const Eigen::Vector3d& dir, int dim) const {
    switch (kind) {
        case Kind::Ball:
            return 1.0;
        case Kind::Ellipse: {
            double s = 0;
            for (int i = 0; i < dim; ++i) {
                const double t = dir[i] / semi_axes[i];
                s += t * t;
            }
            return 1.0 / std::sqrt(s);
        }
        case Kind::Polygon: {
            // ray from the origin against each edge; star shape gives one hit
            const Eigen::Vector2d d(dir.x(), dir.y());
            const std::size_t n = polygon.size();
            for (std::size_t i = 0; i < n; ++i) {
                const Eigen::Vector2d& a = polygon[i];
                const Eigen::Vector2d& b = polygon[(i + 1) % n];
                const Eigen::Vector2d e = b - a;
                const double det = d.x() * (-e.y()) - d.y() * (-e.x());
                if (std::abs(det) < 1e-14) continue;
                const double t = (a.x() * (-e.y()) - a.y() * (-e.x())) / det;
                const double s = (d.x() * a.y() - d.y() * a.x()) / det;
                if (t > 0 && s >= -1e-12 && s <= 1.0 + 1e-12) return t;
            }
            throw std::runtime_error("inclusion polygon: ray cast found no boundary edge");
        }
    }
    return 0;
}

bool InclusionShape::contains(const Eigen::Vector3d& x, int dim) const {
    const double r = x.head(dim).norm();
    if (r == 0.0) return true;
    Eigen::Vector3d dir = Eigen::Vector3d::Zero();
    dir.head(dim) = x.head(dim) / r;
    return r <= boundary_radius(dir, dim);
}

void InclusionShape::validate(int dim) const {
    switch (kind) {
        case Kind::Ball:
            return;
        case Kind::Ellipse:
            for (int i = 0; i < dim; ++i)
                if (!(semi_axes[i] > 0))
                    throw std::invalid_argument("inclusion ellipse: semi axes must be positive");
            return;
        case Kind::Polygon: {
            if (dim != 2) throw std::invalid_argument("inclusion polygon: only supported in 2D");
            if (polygon.size() < 3)
                throw std::invalid_argument("inclusion polygon: needs at least 3 vertices");
            if (polygon_area(polygon) <= 0)
                throw std::invalid_argument(
                    "inclusion polygon: vertices must be counter clockwise with positive area");
            // star shape around 0: polar angles strictly increasing once around
            const std::size_t n = polygon.size();
            for (std::size_t i = 0; i < n; ++i) {
                const Eigen::Vector2d& a = polygon[i];
                const Eigen::Vector2d& b = polygon[(i + 1) % n];
                if (a.norm() < 1e-12)
                    throw std::invalid_argument("inclusion polygon: vertex at the origin");
                const double cross = a.x() * b.y() - a.y() * b.x();
                if (cross <= 0)
                    throw std::invalid_argument(
                        "inclusion polygon: not star shaped around the origin (edge " +
                        std::to_string(i) + " subtends a nonpositive angle)");
            }
            return;
        }
    }
}

std::string InclusionShape::describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind) {
        case Kind::Ball:
            os << "ball";
            break;
        case Kind::Ellipse:
            os << "ellipse " << semi_axes.x() << " " << semi_axes.y() << " " << semi_axes.z();
            break;
        case Kind::Polygon:
            os << "polygon";
            for (const auto& v : polygon) os << " " << v.x() << " " << v.y();
            break;
    }
    return os.str();
}

void ProblemSpec::validate() const {
    if (dim != 2 && dim != 3) throw std::invalid_argument("problem: dim must be 2 or 3");
    for (int i = 0; i < dim; ++i)
        if (!(hi[i] > lo[i]))
            throw std::invalid_argument("problem: box corners must satisfy lo < hi componentwise");
    if (!has_tag(BoundaryTag::Dirichlet))
        throw std::invalid_argument(
            "problem: at least one side must be Dirichlet (the state equation needs a "
            "positive-measure Dirichlet boundary)");
    C1.validate();
    C2.validate();
    if (C1.dim() != dim || C2.dim() != dim)
        throw std::invalid_argument("problem: elastic tensor dimension does not match the domain");
    for (const VectorExpression* e :
         {&f1, &f2, &dirichlet_datum, &neumann_datum, &measurement_target, &gradient_target})
        if (e->dim() != 0 && e->dim() != dim)  // unset closures count as zero
            throw std::invalid_argument("problem: a data closure has the wrong component count");
    if (dim == 2 && !allow_full_cost_2d && (weights.gamma_g != 0 || weights.gamma_m != 0))
        throw std::invalid_argument(
            "problem: gamma_g and gamma_m must vanish in 2D; set allow_full_cost_2d = true to "
            "override for oracle-only experiments");
    if (weights.gamma_m != 0 && !has_tag(BoundaryTag::NeumannMeasured) &&
        !measurement_target.is_zero()) {
        // harmless (term integrates over an empty set) but almost surely a
        // config mistake, so refuse early
        throw std::invalid_argument(
            "problem: gamma_m is nonzero with a measurement target but no side is tagged as "
            "measured");
    }
}

const ElasticTensor& ProblemSpec::tensor(int region) const {
    if (region == 1) return C1;
    if (region == 2) return C2;
    throw std::invalid_argument("problem: unknown region tag " + std::to_string(region));
}

const VectorExpression& ProblemSpec::load(int region) const {
    if (region == 1) return f1;
    if (region == 2) return f2;
    throw std::invalid_argument("problem: unknown region tag " + std::to_string(region));
}

bool ProblemSpec::has_tag(BoundaryTag t) const {
    for (int s = 0; s < 2 * dim; ++s)
        if (side_tags[s] == t) return true;
    return false;
}

double ProblemSpec::boundary_distance(const Eigen::Vector3d& p) const {
    double d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < dim; ++i) d = std::min({d, p[i] - lo[i], hi[i] - p[i]});
    return d;
}

CostWeights ProblemSpec::effective_weights() const {
    CostWeights w = weights;
    if (dim == 2 && !allow_full_cost_2d) {
        w.gamma_g = 0;
        w.gamma_m = 0;
    }
    return w;
}

bool ProblemSpec::no_contrast() const {
    return (C1 - C2).is_zero(1e-14) && f1.text() == f2.text();
}

void PerturbationSpec::validate(const ProblemSpec& problem) const {
    shape.validate(problem.dim);
    if (!shape.contains(Eigen::Vector3d::Zero(), problem.dim))
        throw std::invalid_argument("perturbation: omega must contain the origin");
    for (int i = 0; i < problem.dim; ++i)
        if (!(x0[i] > problem.lo[i] && x0[i] < problem.hi[i]))
            throw std::invalid_argument("perturbation: x0 must lie inside D");
    if (epsilons.empty()) throw std::invalid_argument("perturbation: empty epsilon grid");
    const double dist = problem.boundary_distance(x0);
    const double rmax = shape.max_radius(problem.dim);
    for (double eps : epsilons) {
        if (!(eps > 0)) throw std::invalid_argument("perturbation: epsilon must be positive");
        if (dist <= eps * rmax) {
            std::ostringstream os;
            os << "perturbation: omega_eps leaves D for eps = " << eps << " (dist(x0, boundary) = "
               << dist << " <= eps * max|omega| = " << eps * rmax << ")";
            throw std::invalid_argument(os.str());
        }
    }
}

double PerturbationSpec::ell1(double eps, int dim) const {
    return std::pow(eps, dim) * shape.measure(dim);
}

double PerturbationSpec::ell2(double eps, int dim) const { return eps * ell1(eps, dim); }

double PerturbationSpec::max_eps() const {
    return *std::max_element(epsilons.begin(), epsilons.end());
}

std::vector<double> geometric_eps_grid(double eps_max, double ratio, int count) {
    if (!(eps_max > 0) || !(ratio > 1) || count < 1)
        throw std::invalid_argument("geometric_eps_grid: need eps_max > 0, ratio > 1, count >= 1");
    std::vector<double> g(count);
    double e = eps_max;
    for (int i = 0; i < count; ++i, e /= ratio) g[i] = e;
    return g;
}

const char* boundary_tag_name(BoundaryTag t) {
    switch (t) {
        case BoundaryTag::Dirichlet: return "dirichlet";
        case BoundaryTag::Neumann: return "neumann";
        case BoundaryTag::NeumannMeasured: return "neumann_measured";
    }
    return "?";
}

}  // namespace topoderiv
