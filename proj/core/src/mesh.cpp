#include "topoderiv/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace topoderiv {

Eigen::Matrix3d Mesh::cell_jacobian(int c) const {
    Eigen::Matrix3d J = Eigen::Matrix3d::Identity();
    const auto& cell = cells[c];
    for (int i = 0; i < dim; ++i) J.col(i).head(3) = nodes[cell[i + 1]] - nodes[cell[0]];
    if (dim == 2) {
        J.col(2) = Eigen::Vector3d::UnitZ();  // keeps det equal to the 2x2 determinant
    }
    return J;
}

double Mesh::cell_measure(int c) const {
    const double det = cell_jacobian(c).determinant();
    return (dim == 2 ? 0.5 : 1.0 / 6.0) * std::abs(det);
}

Eigen::Vector3d Mesh::cell_centroid(int c) const {
    Eigen::Vector3d s = Eigen::Vector3d::Zero();
    for (int i = 0; i <= dim; ++i) s += nodes[cells[c][i]];
    return s / (dim + 1);
}

double Mesh::cell_diameter(int c) const {
    double d = 0;
    for (int i = 0; i <= dim; ++i)
        for (int j = i + 1; j <= dim; ++j)
            d = std::max(d, (nodes[cells[c][i]] - nodes[cells[c][j]]).norm());
    return d;
}

double Mesh::facet_measure(const Facet& f) const {
    if (dim == 2) return (nodes[f.nodes[1]] - nodes[f.nodes[0]]).norm();
    const Eigen::Vector3d a = nodes[f.nodes[1]] - nodes[f.nodes[0]];
    const Eigen::Vector3d b = nodes[f.nodes[2]] - nodes[f.nodes[0]];
    return 0.5 * a.cross(b).norm();
}

Eigen::Vector3d Mesh::facet_centroid(const Facet& f) const {
    Eigen::Vector3d s = Eigen::Vector3d::Zero();
    for (int i = 0; i < dim; ++i) s += nodes[f.nodes[i]];
    return s / dim;
}

Eigen::Vector3d Mesh::facet_normal(const Facet& f) const {
    Eigen::Vector3d n;
    if (dim == 2) {
        const Eigen::Vector3d t = nodes[f.nodes[1]] - nodes[f.nodes[0]];
        n = Eigen::Vector3d(t.y(), -t.x(), 0);
    } else {
        const Eigen::Vector3d a = nodes[f.nodes[1]] - nodes[f.nodes[0]];
        const Eigen::Vector3d b = nodes[f.nodes[2]] - nodes[f.nodes[0]];
        n = a.cross(b);
    }
    n.normalize();
    if (f.cell >= 0 && n.dot(facet_centroid(f) - cell_centroid(f.cell)) < 0) n = -n;
    return n;
}

double Mesh::total_measure() const {
    double m = 0;
    for (int c = 0; c < num_cells(); ++c) m += cell_measure(c);
    return m;
}

double Mesh::region_measure(int region) const {
    double m = 0;
    for (int c = 0; c < num_cells(); ++c)
        if (cell_region[c] == region) m += cell_measure(c);
    return m;
}

double Mesh::boundary_measure(int tag) const {
    double m = 0;
    for (const auto& f : boundary_facets)
        if (f.tag == tag) m += facet_measure(f);
    return m;
}

double Mesh::max_diameter(int region) const {
    double d = 0;
    for (int c = 0; c < num_cells(); ++c)
        if (region == 0 || cell_region[c] == region) d = std::max(d, cell_diameter(c));
    return d;
}

namespace {

// canonical key for a cell face (sorted node indices)
std::array<int, 3> face_key(std::array<int, 3> f) {
    std::sort(f.begin(), f.end());
    return f;
}

}  // namespace

void Mesh::validate() const {
    auto fail = [](const std::string& msg) { throw std::runtime_error("mesh: " + msg); };
    if (dim != 2 && dim != 3) fail("dim must be 2 or 3");
    if (cell_region.size() != cells.size()) fail("cell_region size mismatch");
    for (int c = 0; c < num_cells(); ++c) {
        for (int i = 0; i <= dim; ++i) {
            const int v = cells[c][i];
            if (v < 0 || v >= num_nodes())
                fail("cell " + std::to_string(c) + " references node " + std::to_string(v));
        }
        if (cell_measure(c) <= 0) fail("cell " + std::to_string(c) + " has nonpositive measure");
        if (cell_region[c] != 1 && cell_region[c] != 2)
            fail("cell " + std::to_string(c) + " has region tag " +
                 std::to_string(cell_region[c]) + ", expected 1 or 2");
    }

    // count how many cells share each face
    std::map<std::array<int, 3>, int> face_count;
    for (int c = 0; c < num_cells(); ++c) {
        const auto& cell = cells[c];
        for (int skip = 0; skip <= dim; ++skip) {
            std::array<int, 3> f{-1, -1, -1};
            int k = 0;
            for (int i = 0; i <= dim; ++i)
                if (i != skip) f[k++] = cell[i];
            ++face_count[face_key(f)];
        }
    }
    for (const auto& [key, count] : face_count) {
        (void)key;
        if (count > 2) fail("a face is shared by more than two cells (non-manifold)");
    }

    std::map<std::array<int, 3>, int> boundary_seen;
    for (const auto& f : boundary_facets) {
        const auto key = face_key(f.nodes);
        auto it = face_count.find(key);
        if (it == face_count.end()) fail("boundary facet does not match any cell face");
        if (it->second != 1) fail("boundary facet matches an interior face");
        if (++boundary_seen[key] > 1) fail("boundary facet tagged twice");
        if (f.cell < 0 || f.cell >= num_cells()) fail("boundary facet has no owning cell");
    }
    std::size_t expected = 0;
    for (const auto& [key, count] : face_count) {
        (void)key;
        if (count == 1) ++expected;
    }
    if (boundary_seen.size() != expected) {
        std::ostringstream os;
        os << "boundary facets incomplete: " << boundary_seen.size() << " tagged, " << expected
           << " faces on the boundary";
        fail(os.str());
    }
}

Mesh Mesh::affine_image(const Eigen::Vector3d& x0, double scale) const {
    Mesh out = *this;
    for (auto& p : out.nodes) p = (p - x0) / scale;
    return out;
}

Eigen::Vector4d barycentric_coordinates(const Mesh& mesh, int c, const Eigen::Vector3d& p) {
    const Eigen::Matrix3d J = mesh.cell_jacobian(c);
    const Eigen::Vector3d rhs = p - mesh.nodes[mesh.cells[c][0]];
    const Eigen::Vector3d xi = J.partialPivLu().solve(rhs);
    Eigen::Vector4d b;
    double sum = 0;
    for (int i = 0; i < mesh.dim; ++i) {
        b[i + 1] = xi[i];
        sum += xi[i];
    }
    b[0] = 1.0 - sum;
    if (mesh.dim == 2) b[3] = 0;
    return b;
}

CellLocator::CellLocator(const Mesh& mesh) : mesh_(mesh) {
    lo_ = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    hi_ = -lo_;
    for (const auto& p : mesh.nodes) {
        lo_ = lo_.cwiseMin(p);
        hi_ = hi_.cwiseMax(p);
    }
    // aim for a few cells per bin
    const double target_bins = std::pow(static_cast<double>(mesh.num_cells()), 1.0 / mesh.dim);
    const Eigen::Vector3d span = hi_ - lo_;
    double max_span = 0;
    for (int i = 0; i < mesh.dim; ++i) max_span = std::max(max_span, span[i]);
    cell_size_ = std::max(max_span / std::max(1.0, target_bins), 1e-12);
    for (int i = 0; i < 3; ++i) {
        counts_[i] = i < mesh.dim ? std::max(1, static_cast<int>(span[i] / cell_size_) + 1) : 1;
    }
    bins_.resize(static_cast<std::size_t>(counts_[0]) * counts_[1] * counts_[2]);
    for (int c = 0; c < mesh.num_cells(); ++c) {
        Eigen::Vector3d clo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
        Eigen::Vector3d chi = -clo;
        for (int i = 0; i <= mesh.dim; ++i) {
            clo = clo.cwiseMin(mesh.nodes[mesh.cells[c][i]]);
            chi = chi.cwiseMax(mesh.nodes[mesh.cells[c][i]]);
        }
        const auto a = grid_index(clo), b = grid_index(chi);
        for (int i = a[0]; i <= b[0]; ++i)
            for (int j = a[1]; j <= b[1]; ++j)
                for (int k = a[2]; k <= b[2]; ++k)
                    bins_[(static_cast<std::size_t>(i) * counts_[1] + j) * counts_[2] + k]
                        .push_back(c);
    }
}

std::array<int, 3> CellLocator::grid_index(const Eigen::Vector3d& p) const {
    std::array<int, 3> idx{0, 0, 0};
    for (int i = 0; i < mesh_.dim; ++i) {
        int v = static_cast<int>((p[i] - lo_[i]) / cell_size_);
        idx[i] = std::clamp(v, 0, counts_[i] - 1);
    }
    return idx;
}

int CellLocator::locate(const Eigen::Vector3d& p, Eigen::Vector4d& bary, double tol) const {
    const auto idx = grid_index(p);
    // search the point's bin first, then the 3^dim neighborhood (points on
    // bin borders may belong to cells registered next door)
    for (int ring = 0; ring <= 1; ++ring) {
        for (int di = -ring; di <= ring; ++di)
            for (int dj = -ring; dj <= ring; ++dj)
                for (int dk = -ring; dk <= ring; ++dk) {
                    if (ring == 1 && std::max({std::abs(di), std::abs(dj), std::abs(dk)}) == 0)
                        continue;
                    const int i = idx[0] + di, j = idx[1] + dj, k = idx[2] + dk;
                    if (i < 0 || i >= counts_[0] || j < 0 || j >= counts_[1] || k < 0 ||
                        k >= counts_[2])
                        continue;
                    for (int c :
                         bins_[(static_cast<std::size_t>(i) * counts_[1] + j) * counts_[2] + k]) {
                        const Eigen::Vector4d b = barycentric_coordinates(mesh_, c, p);
                        double min_b = b[0];
                        for (int m = 1; m <= mesh_.dim; ++m) min_b = std::min(min_b, b[m]);
                        if (min_b >= -tol) {
                            bary = b;
                            return c;
                        }
                    }
                }
    }
    return -1;
}

std::vector<int> CellLocator::cells_near(const Eigen::Vector3d& p, double radius) const {
    const auto a = grid_index(p - Eigen::Vector3d::Constant(radius));
    const auto b = grid_index(p + Eigen::Vector3d::Constant(radius));
    std::vector<int> out;
    for (int i = a[0]; i <= b[0]; ++i)
        for (int j = a[1]; j <= b[1]; ++j)
            for (int k = a[2]; k <= b[2]; ++k)
                for (int c : bins_[(static_cast<std::size_t>(i) * counts_[1] + j) * counts_[2] + k])
                    out.push_back(c);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace topoderiv
