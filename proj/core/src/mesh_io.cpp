#include "topoderiv/mesh_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace topoderiv {

namespace {

[[noreturn]] void io_fail(const std::string& msg) { throw std::runtime_error("mesh io: " + msg); }

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string next_content_line(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
        const auto pos = line.find_first_not_of(" \t\r");
        if (pos == std::string::npos) continue;
        if (line.back() == '\r') line.pop_back();
        return line.substr(pos);
    }
    return {};
}

void expect_section(std::istream& in, const std::string& name) {
    const std::string line = next_content_line(in);
    if (line != name) io_fail("expected section " + name + ", got \"" + line + "\"");
}

// Assigns each boundary facet the unique cell that contains it as a face.
void resolve_facet_owners(Mesh& mesh) {
    std::map<std::array<int, 3>, std::pair<int, int>> faces;  // key -> (count, cell)
    for (int c = 0; c < mesh.num_cells(); ++c)
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
    for (auto& facet : mesh.boundary_facets) {
        std::array<int, 3> key{-1, -1, -1};
        for (int i = 0; i < mesh.dim; ++i) key[i] = facet.nodes[i];
        std::sort(key.begin(), key.end());
        auto it = faces.find(key);
        if (it == faces.end()) io_fail("boundary facet is not a face of any cell");
        if (it->second.first != 1) io_fail("boundary facet lies between two cells");
        facet.cell = it->second.second;
    }
}

}  // namespace

void write_mesh(const Mesh& mesh, std::ostream& out) {
    out << "$Nodes\n" << mesh.num_nodes() << "\n";
    for (int i = 0; i < mesh.num_nodes(); ++i) {
        out << i + 1;
        for (int a = 0; a < mesh.dim; ++a) out << ' ' << fmt_double(mesh.nodes[i][a]);
        out << '\n';
    }
    out << "$EndNodes\n$Elements\n" << mesh.num_cells() << "\n";
    const int type = mesh.dim == 2 ? 2 : 4;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        out << c + 1 << ' ' << type << ' ' << mesh.cell_region[c];
        for (int i = 0; i <= mesh.dim; ++i) out << ' ' << mesh.cells[c][i] + 1;
        out << '\n';
    }
    out << "$EndElements\n$BoundaryFacets\n" << mesh.boundary_facets.size() << "\n";
    for (std::size_t f = 0; f < mesh.boundary_facets.size(); ++f) {
        const auto& facet = mesh.boundary_facets[f];
        out << f + 1 << ' ' << facet.tag;
        for (int i = 0; i < mesh.dim; ++i) out << ' ' << facet.nodes[i] + 1;
        out << '\n';
    }
    out << "$EndBoundaryFacets\n";
}

void write_mesh_file(const Mesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) io_fail("cannot open " + path + " for writing");
    write_mesh(mesh, out);
    if (!out) io_fail("write to " + path + " failed");
}

Mesh read_mesh(std::istream& in) {
    Mesh mesh;
    expect_section(in, "$Nodes");
    int n_nodes = 0;
    {
        std::istringstream ls(next_content_line(in));
        if (!(ls >> n_nodes) || n_nodes <= 0) io_fail("bad node count");
    }
    mesh.nodes.reserve(n_nodes);
    int dim = 0;
    for (int i = 0; i < n_nodes; ++i) {
        std::istringstream ls(next_content_line(in));
        int id;
        double x, y, z = 0.0;
        if (!(ls >> id >> x >> y)) io_fail("bad node line");
        if (ls >> z)
            dim = 3;
        else if (dim == 0)
            dim = 2;
        if (id != i + 1) io_fail("node ids must be consecutive from 1");
        mesh.nodes.emplace_back(x, y, dim == 2 ? 0.0 : z);
    }
    mesh.dim = dim;

    expect_section(in, "$EndNodes");
    expect_section(in, "$Elements");
    int n_cells = 0;
    {
        std::istringstream ls(next_content_line(in));
        if (!(ls >> n_cells) || n_cells <= 0) io_fail("bad element count");
    }
    const int want_type = dim == 2 ? 2 : 4;
    for (int c = 0; c < n_cells; ++c) {
        std::istringstream ls(next_content_line(in));
        int id, type, region;
        if (!(ls >> id >> type >> region)) io_fail("bad element line");
        if (type != want_type) io_fail("element type does not match node dimension");
        std::array<int, 4> cell{-1, -1, -1, -1};
        for (int i = 0; i <= dim; ++i) {
            if (!(ls >> cell[i])) io_fail("bad element line");
            --cell[i];
        }
        mesh.cells.push_back(cell);
        mesh.cell_region.push_back(region);
    }

    expect_section(in, "$EndElements");
    expect_section(in, "$BoundaryFacets");
    int n_facets = 0;
    {
        std::istringstream ls(next_content_line(in));
        if (!(ls >> n_facets) || n_facets < 0) io_fail("bad facet count");
    }
    for (int f = 0; f < n_facets; ++f) {
        std::istringstream ls(next_content_line(in));
        int id, tag;
        if (!(ls >> id >> tag)) io_fail("bad facet line");
        Mesh::Facet facet;
        facet.tag = tag;
        for (int i = 0; i < dim; ++i) {
            if (!(ls >> facet.nodes[i])) io_fail("bad facet line");
            --facet.nodes[i];
        }
        mesh.boundary_facets.push_back(facet);
    }
    expect_section(in, "$EndBoundaryFacets");
    resolve_facet_owners(mesh);
    return mesh;
}

Mesh read_mesh_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) io_fail("cannot open " + path);
    return read_mesh(in);
}

Mesh import_gmsh(std::istream& in) {
    std::string line = next_content_line(in);
    if (line != "$MeshFormat") io_fail("not a Gmsh file (missing $MeshFormat)");
    {
        std::istringstream ls(next_content_line(in));
        double version;
        int file_type;
        if (!(ls >> version >> file_type)) io_fail("bad $MeshFormat line");
        if (version < 2.0 || version >= 3.0 || file_type != 0)
            io_fail("only ASCII Gmsh 2.x files are supported");
    }
    expect_section(in, "$EndMeshFormat");

    std::unordered_map<int, int> node_index;
    std::vector<Eigen::Vector3d> nodes;
    struct RawElem {
        int type;
        int tag;
        std::array<int, 4> nodes;
    };
    std::vector<RawElem> elems;

    while (!(line = next_content_line(in)).empty()) {
        if (line == "$Nodes") {
            int n;
            {
                std::istringstream ls(next_content_line(in));
                if (!(ls >> n) || n <= 0) io_fail("bad Gmsh node count");
            }
            for (int i = 0; i < n; ++i) {
                std::istringstream ls(next_content_line(in));
                int id;
                double x, y, z;
                if (!(ls >> id >> x >> y >> z)) io_fail("bad Gmsh node line");
                node_index[id] = static_cast<int>(nodes.size());
                nodes.emplace_back(x, y, z);
            }
            expect_section(in, "$EndNodes");
        } else if (line == "$Elements") {
            int n;
            {
                std::istringstream ls(next_content_line(in));
                if (!(ls >> n) || n <= 0) io_fail("bad Gmsh element count");
            }
            for (int i = 0; i < n; ++i) {
                std::istringstream ls(next_content_line(in));
                int id, type, n_tags;
                if (!(ls >> id >> type >> n_tags)) io_fail("bad Gmsh element line");
                RawElem e;
                e.type = type;
                e.tag = 0;
                for (int t = 0; t < n_tags; ++t) {
                    int tag;
                    if (!(ls >> tag)) io_fail("bad Gmsh element tags");
                    if (t == 0) e.tag = tag;
                }
                const int nn = type == 1 ? 2 : type == 2 ? 3 : type == 4 ? 4 : 0;
                if (nn == 0) continue;  // points and unsupported element types
                e.nodes = {-1, -1, -1, -1};
                for (int k = 0; k < nn; ++k) {
                    int v;
                    if (!(ls >> v)) io_fail("bad Gmsh element nodes");
                    auto it = node_index.find(v);
                    if (it == node_index.end()) io_fail("Gmsh element references unknown node");
                    e.nodes[k] = it->second;
                }
                elems.push_back(e);
            }
            expect_section(in, "$EndElements");
        } else {
            // skip unknown sections ($PhysicalNames and friends)
            const std::string end = "$End" + line.substr(1);
            std::string s;
            while (!(s = next_content_line(in)).empty() && s != end) {
            }
            if (s.empty()) io_fail("unterminated Gmsh section " + line);
        }
    }

    const bool has_tets = std::any_of(elems.begin(), elems.end(),
                                      [](const RawElem& e) { return e.type == 4; });
    Mesh mesh;
    mesh.dim = has_tets ? 3 : 2;
    mesh.nodes = std::move(nodes);
    if (mesh.dim == 2)
        for (auto& p : mesh.nodes) p.z() = 0.0;

    const int cell_type = has_tets ? 4 : 2;
    const int facet_type = has_tets ? 2 : 1;
    for (const auto& e : elems) {
        if (e.type == cell_type) {
            mesh.cells.push_back(e.nodes);
            mesh.cell_region.push_back(e.tag == 0 ? 2 : e.tag);
        } else if (e.type == facet_type) {
            Mesh::Facet f;
            f.nodes = {e.nodes[0], e.nodes[1], mesh.dim == 3 ? e.nodes[2] : -1};
            f.tag = e.tag;
            mesh.boundary_facets.push_back(f);
        }
    }
    if (mesh.cells.empty()) io_fail("Gmsh file contains no full-dimensional elements");
    resolve_facet_owners(mesh);
    return mesh;
}

Mesh import_gmsh_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) io_fail("cannot open " + path);
    return import_gmsh(in);
}

}  // namespace topoderiv
