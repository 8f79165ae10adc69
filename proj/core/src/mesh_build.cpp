#include "topoderiv/mesh_build.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace topoderiv {

namespace {

constexpr double kPi = 3.14159265358979323846;

[[noreturn]] void refuse(const std::string& msg) { throw std::invalid_argument("mesh: " + msg); }

double ray_box_exit(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
                    const Eigen::Vector3d& x0, const Eigen::Vector3d& dir, int dim) {
    double t = std::numeric_limits<double>::infinity();
    for (int a = 0; a < dim; ++a) {
        if (dir[a] > 1e-14) t = std::min(t, (hi[a] - x0[a]) / dir[a]);
        if (dir[a] < -1e-14) t = std::min(t, (lo[a] - x0[a]) / dir[a]);
    }
    return t;
}

void snap_to_box(Eigen::Vector3d& p, const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
                 int dim) {
    for (int a = 0; a < dim; ++a) {
        const double tol = 1e-12 * (hi[a] - lo[a]);
        if (std::abs(p[a] - lo[a]) < tol) p[a] = lo[a];
        if (std::abs(p[a] - hi[a]) < tol) p[a] = hi[a];
    }
}

int classify_box_side(const ProblemSpec& prob, const Eigen::Vector3d& c) {
    for (int a = 0; a < prob.dim; ++a) {
        const double tol = 1e-9 * (prob.hi[a] - prob.lo[a]);
        if (std::abs(c[a] - prob.lo[a]) < tol) return 2 * a;
        if (std::abs(c[a] - prob.hi[a]) < tol) return 2 * a + 1;
    }
    std::ostringstream os;
    os << "boundary face centroid (" << c.transpose() << ") lies on no box side";
    refuse(os.str());
}

/// Finds all cell faces owned by exactly one cell and records them as tagged
/// boundary facets. `tag_of` maps a facet centroid to its boundary tag.
void attach_boundary_facets(Mesh& mesh, const std::function<int(const Eigen::Vector3d&)>& tag_of) {
    std::map<std::array<int, 3>, std::pair<int, int>> faces;  // key -> (count, owning cell)
    for (int c = 0; c < mesh.num_cells(); ++c) {
        for (int skip = 0; skip <= mesh.dim; ++skip) {
            std::array<int, 3> f{-1, -1, -1};
            int k = 0;
            for (int i = 0; i <= mesh.dim; ++i)
                if (i != skip) f[k++] = mesh.cells[c][i];
            std::sort(f.begin(), f.end());
            auto& e = faces[f];
            ++e.first;
            e.second = c;
        }
    }
    for (const auto& [key, e] : faces) {
        if (e.first != 1) continue;
        Mesh::Facet facet;
        facet.nodes = key;
        if (mesh.dim == 2) {
            // drop the -1 padding that sorting moved to the front
            facet.nodes = {key[1], key[2], -1};
        }
        facet.cell = e.second;
        Eigen::Vector3d c = Eigen::Vector3d::Zero();
        for (int i = 0; i < mesh.dim; ++i) c += mesh.nodes[facet.nodes[i]];
        facet.tag = tag_of(c / mesh.dim);
        mesh.boundary_facets.push_back(facet);
    }
}

// Splits the prism (v0,v1,v2 | v3,v4,v5), with v(i+3) radially above v(i) and
// the bottom triangle oriented toward the top, into three positively oriented
// tetrahedra. Every quad face is cut by the diagonal through its smallest
// global node index, so adjacent prisms make matching choices and the mesh
// stays conforming.
void split_prism(const std::array<int, 6>& v, std::vector<std::array<int, 4>>& out) {
    static const std::array<std::array<int, 6>, 6> relabel = {{
        {0, 1, 2, 3, 4, 5},
        {1, 2, 0, 4, 5, 3},
        {2, 0, 1, 5, 3, 4},
        {3, 5, 4, 0, 2, 1},
        {5, 4, 3, 2, 1, 0},
        {4, 3, 5, 1, 0, 2},
    }};
    int min_pos = 0;
    for (int i = 1; i < 6; ++i)
        if (v[i] < v[min_pos]) min_pos = i;
    const std::array<int, 6>* perm = nullptr;
    for (const auto& p : relabel)
        if (p[0] == min_pos) {
            perm = &p;
            break;
        }
    std::array<int, 6> w;
    for (int i = 0; i < 6; ++i) w[i] = v[(*perm)[i]];
    // w[0] is now the smallest index; both quads containing w0 are cut through
    // it. The remaining quad (w1,w2,w5,w4) is cut through its own minimum.
    const int m = std::min(std::min(w[1], w[2]), std::min(w[4], w[5]));
    if (m == w[1] || m == w[5]) {
        out.push_back({w[0], w[1], w[2], w[5]});
        out.push_back({w[0], w[1], w[5], w[4]});
        out.push_back({w[0], w[4], w[5], w[3]});
    } else {
        out.push_back({w[0], w[1], w[2], w[4]});
        out.push_back({w[0], w[4], w[2], w[5]});
        out.push_back({w[0], w[4], w[5], w[3]});
    }
}

/// Layered radial mesh around a center: rings k = 1..n_in subdivide the
/// inclusion radially; rings n_in..n_in+n_out grow geometrically from the
/// inclusion boundary to the outer radius. Region 1 inside the inclusion.
struct RadialSpec {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    const DirectionFan* fan = nullptr;
    std::vector<double> r_inner;  // per direction, > 0
    std::vector<double> r_outer;  // per direction, > r_inner
    int n_in = 4;
    int n_out = 8;
    bool snap_outer_to_box = false;
    Eigen::Vector3d box_lo, box_hi;
};

Mesh build_radial(const RadialSpec& spec) {
    const DirectionFan& fan = *spec.fan;
    const int M = fan.size();
    const int K = spec.n_in + spec.n_out;
    Mesh mesh;
    mesh.dim = fan.dim;

    auto radius = [&](int k, int j) -> double {
        if (k <= spec.n_in) return spec.r_inner[j] * (static_cast<double>(k) / spec.n_in);
        if (k == K) return spec.r_outer[j];
        const double t = static_cast<double>(k - spec.n_in) / spec.n_out;
        return spec.r_inner[j] * std::pow(spec.r_outer[j] / spec.r_inner[j], t);
    };
    auto node_id = [&](int k, int j) -> int { return 1 + (k - 1) * M + j; };

    mesh.nodes.reserve(1 + static_cast<std::size_t>(K) * M);
    mesh.nodes.push_back(spec.center);
    for (int k = 1; k <= K; ++k)
        for (int j = 0; j < M; ++j) {
            Eigen::Vector3d p = spec.center + radius(k, j) * fan.directions[j];
            if (k == K && spec.snap_outer_to_box) snap_to_box(p, spec.box_lo, spec.box_hi, fan.dim);
            mesh.nodes.push_back(p);
        }

    if (fan.dim == 2) {
        for (int j = 0; j < M; ++j) {
            const int jn = (j + 1) % M;
            mesh.cells.push_back({0, node_id(1, j), node_id(1, jn), -1});
            mesh.cell_region.push_back(1);
        }
        for (int k = 1; k < K; ++k)
            for (int j = 0; j < M; ++j) {
                const int jn = (j + 1) % M;
                const int a = node_id(k, j), b = node_id(k, jn);
                const int c = node_id(k + 1, jn), d = node_id(k + 1, j);
                const double diag_ac = (mesh.nodes[a] - mesh.nodes[c]).squaredNorm();
                const double diag_bd = (mesh.nodes[b] - mesh.nodes[d]).squaredNorm();
                bool use_ac;
                if (std::abs(diag_ac - diag_bd) <= 1e-12 * (diag_ac + diag_bd))
                    use_ac = std::min(a, c) < std::min(b, d);
                else
                    use_ac = diag_ac < diag_bd;
                if (use_ac) {
                    mesh.cells.push_back({a, b, c, -1});
                    mesh.cells.push_back({a, c, d, -1});
                } else {
                    mesh.cells.push_back({a, b, d, -1});
                    mesh.cells.push_back({b, c, d, -1});
                }
                const int region = k < spec.n_in ? 1 : 2;
                mesh.cell_region.push_back(region);
                mesh.cell_region.push_back(region);
            }
    } else {
        for (const auto& tri : fan.surface_tris) {
            mesh.cells.push_back({0, node_id(1, tri[0]), node_id(1, tri[1]), node_id(1, tri[2])});
            mesh.cell_region.push_back(1);
        }
        std::vector<std::array<int, 4>> tets;
        for (int k = 1; k < K; ++k)
            for (const auto& tri : fan.surface_tris) {
                tets.clear();
                split_prism({node_id(k, tri[0]), node_id(k, tri[1]), node_id(k, tri[2]),
                             node_id(k + 1, tri[0]), node_id(k + 1, tri[1]), node_id(k + 1, tri[2])},
                            tets);
                const int region = k < spec.n_in ? 1 : 2;
                for (const auto& t : tets) {
                    mesh.cells.push_back(t);
                    mesh.cell_region.push_back(region);
                }
            }
    }

    for (int c = 0; c < mesh.num_cells(); ++c)
        if (mesh.cell_measure(c) <= 0) refuse("radial construction produced a degenerate cell");
    return mesh;
}

std::vector<double> fan_angles(int M) {
    std::vector<double> a(M);
    for (int i = 0; i < M; ++i) a[i] = 2.0 * kPi * i / M;
    return a;
}

DirectionFan fan_from_angles(std::vector<double> angles) {
    std::sort(angles.begin(), angles.end());
    DirectionFan fan;
    fan.dim = 2;
    for (double t : angles) fan.directions.emplace_back(std::cos(t), std::sin(t), 0.0);
    return fan;
}

// Per-face grid of the box surface seen from x0. Node identity across face
// edges is resolved on the integer surface lattice.
DirectionFan box_surface_fan(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
                             const Eigen::Vector3d& x0, int segments) {
    const Eigen::Vector3d ext = hi - lo;
    const double ext_max = std::max({ext[0], ext[1], ext[2]});
    std::array<int, 3> n;
    for (int a = 0; a < 3; ++a)
        n[a] = std::max(2, static_cast<int>(std::lround(segments * ext[a] / ext_max)));

    DirectionFan fan;
    fan.dim = 3;
    std::map<std::array<int, 3>, int> index_of;
    std::vector<Eigen::Vector3d> surface_points;

    auto node_at = [&](const std::array<int, 3>& key) -> int {
        auto it = index_of.find(key);
        if (it != index_of.end()) return it->second;
        Eigen::Vector3d p;
        for (int a = 0; a < 3; ++a) p[a] = lo[a] + ext[a] * key[a] / n[a];
        const int id = static_cast<int>(surface_points.size());
        surface_points.push_back(p);
        index_of[key] = id;
        return id;
    };

    for (int axis = 0; axis < 3; ++axis)
        for (int side = 0; side < 2; ++side) {
            const int u = (axis + 1) % 3, v = (axis + 2) % 3;
            for (int i = 0; i < n[u]; ++i)
                for (int j = 0; j < n[v]; ++j) {
                    std::array<int, 3> k00{}, k10{}, k01{}, k11{};
                    k00[axis] = k10[axis] = k01[axis] = k11[axis] = side * n[axis];
                    k00[u] = i;     k00[v] = j;
                    k10[u] = i + 1; k10[v] = j;
                    k01[u] = i;     k01[v] = j + 1;
                    k11[u] = i + 1; k11[v] = j + 1;
                    const int a = node_at(k00), b = node_at(k10), c = node_at(k11),
                              d = node_at(k01);
                    // outward orientation: normal away from the box interior
                    Eigen::Vector3d out = Eigen::Vector3d::Zero();
                    out[axis] = side == 0 ? -1.0 : 1.0;
                    auto push = [&](int p, int q, int r) {
                        const Eigen::Vector3d nrm = (surface_points[q] - surface_points[p])
                                                        .cross(surface_points[r] - surface_points[p]);
                        if (nrm.dot(out) > 0)
                            fan.surface_tris.push_back({p, q, r});
                        else
                            fan.surface_tris.push_back({p, r, q});
                    };
                    push(a, b, c);
                    push(a, c, d);
                }
        }

    fan.directions.reserve(surface_points.size());
    for (const auto& s : surface_points) fan.directions.push_back((s - x0).normalized());
    return fan;
}

}  // namespace

int fan_segments(const ProblemSpec& problem, const Eigen::Vector3d& x0, double h) {
    if (problem.dim == 2) {
        double lmax = 0;
        for (int cx = 0; cx < 2; ++cx)
            for (int cy = 0; cy < 2; ++cy) {
                Eigen::Vector3d corner(cx ? problem.hi[0] : problem.lo[0],
                                       cy ? problem.hi[1] : problem.lo[1], 0);
                lmax = std::max(lmax, (corner - x0).norm());
            }
        return std::max(64, static_cast<int>(std::ceil(2.0 * kPi * lmax / h)));
    }
    const Eigen::Vector3d ext = problem.extent();
    return std::max(6, static_cast<int>(std::ceil(std::max({ext[0], ext[1], ext[2]}) / h)));
}

DirectionFan make_box_fan(const ProblemSpec& problem, const Eigen::Vector3d& x0, int segments) {
    if (problem.dim == 3) return box_surface_fan(problem.lo, problem.hi, x0, segments);

    const int M = std::max(64, segments);
    std::vector<double> angles = fan_angles(M);
    const double dtheta = 2.0 * kPi / M;
    for (int cx = 0; cx < 2; ++cx)
        for (int cy = 0; cy < 2; ++cy) {
            const Eigen::Vector3d corner(cx ? problem.hi[0] : problem.lo[0],
                                         cy ? problem.hi[1] : problem.lo[1], 0);
            double phi = std::atan2(corner.y() - x0.y(), corner.x() - x0.x());
            if (phi < 0) phi += 2.0 * kPi;
            int nearest = 0;
            double best = std::numeric_limits<double>::infinity();
            for (int i = 0; i < static_cast<int>(angles.size()); ++i) {
                double d = std::abs(angles[i] - phi);
                d = std::min(d, 2.0 * kPi - d);
                if (d < best) {
                    best = d;
                    nearest = i;
                }
            }
            if (best < 0.3 * dtheta)
                angles[nearest] = phi;  // merge, keeping the ray count stable
            else
                angles.push_back(phi);
        }
    return fan_from_angles(std::move(angles));
}

DirectionFan make_uniform_fan(int dim, int segments) {
    if (dim == 2) return fan_from_angles(fan_angles(std::max(16, segments)));
    const Eigen::Vector3d one = Eigen::Vector3d::Ones();
    return box_surface_fan(-one, one, Eigen::Vector3d::Zero(), std::max(4, segments));
}

Mesh build_uniform_mesh(const ProblemSpec& problem, double h) {
    if (!(h > 0)) refuse("h must be positive");
    const Eigen::Vector3d ext = problem.extent();
    std::array<int, 3> n{1, 1, 1};
    for (int a = 0; a < problem.dim; ++a)
        n[a] = std::max(1, static_cast<int>(std::ceil(ext[a] / h)));

    Mesh mesh;
    mesh.dim = problem.dim;
    if (problem.dim == 2) {
        auto id = [&](int i, int j) { return j * (n[0] + 1) + i; };
        for (int j = 0; j <= n[1]; ++j)
            for (int i = 0; i <= n[0]; ++i)
                mesh.nodes.emplace_back(problem.lo[0] + ext[0] * i / n[0],
                                        problem.lo[1] + ext[1] * j / n[1], 0.0);
        for (int j = 0; j < n[1]; ++j)
            for (int i = 0; i < n[0]; ++i) {
                const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
                mesh.cells.push_back({a, b, c, -1});
                mesh.cells.push_back({a, c, d, -1});
                mesh.cell_region.push_back(2);
                mesh.cell_region.push_back(2);
            }
    } else {
        auto id = [&](int i, int j, int k) { return (k * (n[1] + 1) + j) * (n[0] + 1) + i; };
        for (int k = 0; k <= n[2]; ++k)
            for (int j = 0; j <= n[1]; ++j)
                for (int i = 0; i <= n[0]; ++i)
                    mesh.nodes.emplace_back(problem.lo[0] + ext[0] * i / n[0],
                                            problem.lo[1] + ext[1] * j / n[1],
                                            problem.lo[2] + ext[2] * k / n[2]);
        // Kuhn split: six tetrahedra per box around the main diagonal; the
        // induced face diagonals depend only on global axes, so neighboring
        // boxes conform.
        static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                        {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
        static const int parity[6] = {1, -1, -1, 1, 1, -1};
        for (int k = 0; k < n[2]; ++k)
            for (int j = 0; j < n[1]; ++j)
                for (int i = 0; i < n[0]; ++i)
                    for (int p = 0; p < 6; ++p) {
                        std::array<int, 3> at{i, j, k};
                        std::array<int, 4> tet;
                        tet[0] = id(at[0], at[1], at[2]);
                        for (int step = 0; step < 3; ++step) {
                            ++at[perms[p][step]];
                            tet[step + 1] = id(at[0], at[1], at[2]);
                        }
                        if (parity[p] < 0) std::swap(tet[2], tet[3]);
                        mesh.cells.push_back(tet);
                        mesh.cell_region.push_back(2);
                    }
    }
    attach_boundary_facets(mesh, [&](const Eigen::Vector3d& c) {
        return static_cast<int>(problem.side_tags[classify_box_side(problem, c)]);
    });
    return mesh;
}

Mesh build_fitted_mesh(const ProblemSpec& problem, const PerturbationSpec& pert, double eps,
                       double h, const DirectionFan& fan) {
    if (!(eps > 0) || !(h > 0)) refuse("eps and h must be positive");
    const double rho_max = pert.shape.max_radius(problem.dim);
    if (h > 4.0 * eps * rho_max) {
        std::ostringstream os;
        os << "inclusion under-resolved: h = " << h << " against eps = " << eps
           << "; retry with h <= " << eps * rho_max;
        refuse(os.str());
    }
    if (problem.boundary_distance(pert.x0) <= eps * rho_max)
        refuse("omega_eps reaches the boundary of D");

    RadialSpec spec;
    spec.center = pert.x0;
    spec.fan = &fan;
    const int M = fan.size();
    spec.r_inner.resize(M);
    spec.r_outer.resize(M);
    double n_out_req = 4;
    for (int j = 0; j < M; ++j) {
        const double rho = pert.shape.boundary_radius(fan.directions[j], problem.dim);
        const double L = ray_box_exit(problem.lo, problem.hi, pert.x0, fan.directions[j],
                                      problem.dim);
        if (!(L > eps * rho)) refuse("inclusion boundary reaches the boundary of D along a ray");
        spec.r_inner[j] = eps * rho;
        spec.r_outer[j] = L;
        n_out_req = std::max(n_out_req, L * std::log(L / (eps * rho)) / h);
    }
    spec.n_in = std::max(4, static_cast<int>(std::ceil(4.0 * rho_max)));
    spec.n_out = static_cast<int>(std::ceil(n_out_req));
    spec.snap_outer_to_box = true;
    spec.box_lo = problem.lo;
    spec.box_hi = problem.hi;

    Mesh mesh = build_radial(spec);
    attach_boundary_facets(mesh, [&](const Eigen::Vector3d& c) {
        return static_cast<int>(problem.side_tags[classify_box_side(problem, c)]);
    });
    return mesh;
}

Mesh build_mesh(const ProblemSpec& problem, double h, const PerturbationSpec* pert, double eps) {
    if (!pert) return build_uniform_mesh(problem, h);
    const DirectionFan fan =
        make_box_fan(problem, pert->x0, fan_segments(problem, pert->x0, h));
    return build_fitted_mesh(problem, *pert, eps, h, fan);
}

Mesh build_exterior_mesh(const InclusionShape& shape, int dim, double R, double h_inner,
                         double grading, const DirectionFan& fan) {
    if (!(h_inner > 0) || !(grading > 0)) refuse("h_inner and grading must be positive");
    shape.validate(dim);
    const double diam = 2.0 * shape.max_radius(dim);
    if (R < 10.0 * diam) {
        std::ostringstream os;
        os << "truncation radius too small: R = " << R << " < 10 * diam(omega) = " << 10.0 * diam;
        refuse(os.str());
    }
    if (fan.dim != dim) refuse("direction fan dimension mismatch");

    RadialSpec spec;
    spec.fan = &fan;
    const int M = fan.size();
    spec.r_inner.resize(M);
    spec.r_outer.assign(M, R);
    double rho_max = 0, n_out_req = 4;
    for (int j = 0; j < M; ++j) {
        const double rho = shape.boundary_radius(fan.directions[j], dim);
        spec.r_inner[j] = rho;
        rho_max = std::max(rho_max, rho);
        n_out_req = std::max({n_out_req, rho * std::log(R / rho) / h_inner,
                              std::log(R / rho) / grading});
    }
    spec.n_in = std::max(6, static_cast<int>(std::ceil(rho_max / h_inner)));
    spec.n_out = static_cast<int>(std::ceil(n_out_req));

    Mesh mesh = build_radial(spec);
    attach_boundary_facets(mesh, [](const Eigen::Vector3d&) {
        return static_cast<int>(BoundaryTag::Dirichlet);
    });
    return mesh;
}

}  // namespace topoderiv
