#include "liouville/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "liouville/io_util.hpp"

namespace liouville {

namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

}  // namespace

bool ConeSet::all_at_least_minus_half() const {
    for (const auto& c : entries)
        if (c.alpha < -0.5) return false;
    return true;
}

double ConeSet::order_sum() const {
    double s = 0;
    for (const auto& c : entries) s += c.alpha;
    return s;
}

MeshPoint MeshPoint::on_edge(int a, int b, double t) {
    if (t <= 0.0) return vertex(a);
    if (t >= 1.0) return vertex(b);
    return MeshPoint{a, b, t};
}

int SurfaceMesh::edge_index(int a, int b) const {
    auto it = edge_lookup_.find(edge_key(a, b));
    return it == edge_lookup_.end() ? -1 : it->second;
}

double SurfaceMesh::mean_edge_length() const {
    double s = 0;
    for (double l : edge_lengths) s += l;
    return edges.empty() ? 0.0 : s / static_cast<double>(edges.size());
}

void SurfaceMesh::finalize() {
    const int nv = vertex_count();
    const int nt = triangle_count();
    if (nv < 3 || nt < 1) throw ValidationError("mesh needs at least 3 vertices and 1 triangle");

    for (const auto& t : triangles) {
        for (int c = 0; c < 3; ++c) {
            if (t[c] < 0 || t[c] >= nv) throw ValidationError("triangle references vertex out of range");
            if (t[c] == t[(c + 1) % 3]) throw ValidationError("degenerate triangle with repeated vertex");
        }
    }

    // Unique edges in first-encounter order (deterministic).
    edges.clear();
    edge_tris.clear();
    edge_lookup_.clear();
    vertex_tris.assign(nv, {});
    for (int ti = 0; ti < nt; ++ti) {
        const auto& t = triangles[ti];
        for (int c = 0; c < 3; ++c) {
            vertex_tris[t[c]].push_back(ti);
            int a = t[c], b = t[(c + 1) % 3];
            auto key = edge_key(a, b);
            auto it = edge_lookup_.find(key);
            if (it == edge_lookup_.end()) {
                edge_lookup_.emplace(key, static_cast<int>(edges.size()));
                edges.emplace_back(std::min(a, b), std::max(a, b));
                edge_tris.push_back({ti, -1});
            } else {
                auto& et = edge_tris[it->second];
                if (et[1] != -1) throw ValidationError("non-manifold edge shared by more than two triangles");
                et[1] = ti;
            }
        }
    }

    for (int v = 0; v < nv; ++v)
        if (vertex_tris[v].empty()) throw ValidationError("isolated vertex " + std::to_string(v));

    // Orientation: a shared edge must be traversed in opposite directions by
    // its two triangles. Count directed occurrences per undirected edge.
    {
        std::vector<int> forward(edges.size(), 0), backward(edges.size(), 0);
        for (const auto& t : triangles) {
            for (int c = 0; c < 3; ++c) {
                int a = t[c], b = t[(c + 1) % 3];
                int e = edge_index(a, b);
                if (a < b)
                    ++forward[e];
                else
                    ++backward[e];
            }
        }
        for (size_t e = 0; e < edges.size(); ++e) {
            bool interior = edge_tris[e][1] != -1;
            if (interior && (forward[e] != 1 || backward[e] != 1))
                throw ValidationError("inconsistent orientation across edge (" +
                                      std::to_string(edges[e].first) + "," +
                                      std::to_string(edges[e].second) + ")");
        }
    }

    // Boundary half-edges: directed edges owned by exactly one triangle.
    on_boundary.assign(nv, 0);
    std::vector<int> boundary_next(nv, -1);
    int boundary_edge_count = 0;
    for (int ti = 0; ti < nt; ++ti) {
        const auto& t = triangles[ti];
        for (int c = 0; c < 3; ++c) {
            int a = t[c], b = t[(c + 1) % 3];
            int e = edge_index(a, b);
            if (edge_tris[e][1] == -1) {
                on_boundary[a] = on_boundary[b] = 1;
                if (boundary_next[a] != -1)
                    throw ValidationError("boundary is not a disjoint union of simple cycles (vertex " +
                                          std::to_string(a) + ")");
                boundary_next[a] = b;
                ++boundary_edge_count;
            }
        }
    }

    // Trace loops; deterministic labels by ascending minimal vertex index.
    boundary_loops.clear();
    std::vector<char> seen(nv, 0);
    for (int v = 0; v < nv; ++v) {
        if (!on_boundary[v] || seen[v]) continue;
        std::vector<int> loop;
        int cur = v;
        do {
            if (cur < 0 || seen[cur]) throw ValidationError("boundary loop tracing failed");
            seen[cur] = 1;
            loop.push_back(cur);
            cur = boundary_next[cur];
        } while (cur != v);
        boundary_loops.push_back(std::move(loop));
    }
    int traced = 0;
    for (const auto& l : boundary_loops) traced += static_cast<int>(l.size());
    if (traced != boundary_edge_count)
        throw ValidationError("boundary loops do not cover all boundary edges");
    std::sort(boundary_loops.begin(), boundary_loops.end(),
              [](const std::vector<int>& a, const std::vector<int>& b) {
                  return *std::min_element(a.begin(), a.end()) < *std::min_element(b.begin(), b.end());
              });

    // Cones: interior, distinct, alpha > -1.
    {
        std::vector<int> cv;
        for (const auto& c : cones) {
            if (c.vertex < 0 || c.vertex >= nv) throw ValidationError("cone vertex out of range");
            if (on_boundary[c.vertex])
                throw ValidationError("cone marker on boundary vertex " + std::to_string(c.vertex));
            if (c.alpha <= -1.0)
                throw ValidationError("cone order must exceed -1, got " + std::to_string(c.alpha));
            cv.push_back(c.vertex);
        }
        std::sort(cv.begin(), cv.end());
        if (std::adjacent_find(cv.begin(), cv.end()) != cv.end())
            throw ValidationError("duplicate cone vertex");
    }

    neighbors.assign(nv, {});
    edge_lengths.resize(edges.size());
    for (size_t e = 0; e < edges.size(); ++e) {
        auto [a, b] = edges[e];
        neighbors[a].push_back(b);
        neighbors[b].push_back(a);
        edge_lengths[e] = (vertices[a] - vertices[b]).norm();
    }
    for (auto& n : neighbors) std::sort(n.begin(), n.end());

    // Connectivity (solvers assume one component).
    {
        std::vector<char> vis(nv, 0);
        std::vector<int> stack{0};
        vis[0] = 1;
        int count = 1;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (int w : neighbors[v])
                if (!vis[w]) {
                    vis[w] = 1;
                    ++count;
                    stack.push_back(w);
                }
        }
        if (count != nv) throw ValidationError("mesh is not connected");
    }

    // Unfolded diagonals across interior edges, kept when the straight
    // segment between the opposite vertices crosses the shared edge.
    shortcuts.clear();
    for (size_t e = 0; e < edges.size(); ++e) {
        if (edge_tris[e][1] == -1) continue;
        auto [a, b] = edges[e];
        auto opposite = [&](int ti) {
            for (int c : triangles[ti])
                if (c != a && c != b) return c;
            return -1;
        };
        int c = opposite(edge_tris[e][0]);
        int d = opposite(edge_tris[e][1]);
        double lab = edge_lengths[e];
        if (lab <= 0) continue;
        auto flatten = [&](int w, double sign) -> Eigen::Vector2d {
            double la = (vertices[w] - vertices[a]).norm();
            double lb = (vertices[w] - vertices[b]).norm();
            double x = (la * la - lb * lb + lab * lab) / (2 * lab);
            double y2 = la * la - x * x;
            return {x, sign * std::sqrt(std::max(0.0, y2))};
        };
        Eigen::Vector2d pc = flatten(c, 1.0), pd = flatten(d, -1.0);
        if (pc.y() <= 0 || pd.y() >= 0) continue;
        double s = pc.y() / (pc.y() - pd.y());
        double xcross = pc.x() + s * (pd.x() - pc.x());
        if (xcross > 0 && xcross < lab) shortcuts.push_back({c, d, (pc - pd).norm()});
    }
}

Eigen::Vector3d position(const SurfaceMesh& mesh, const MeshPoint& p) {
    if (p.is_vertex()) return mesh.vertices[p.a];
    return (1.0 - p.t) * mesh.vertices[p.a] + p.t * mesh.vertices[p.b];
}

Eigen::Vector2d uv_position(const SurfaceMesh& mesh, const MeshPoint& p) {
    if (mesh.uv.empty()) throw PreconditionError("mesh has no parametric coordinates");
    if (p.is_vertex()) return mesh.uv[p.a];
    Eigen::Vector2d ua = mesh.uv[p.a], ub = mesh.uv[p.b];
    if (mesh.shape == Shape::Cylinder) {
        // unwrap the periodic u coordinate across the seam
        if (ub.x() - ua.x() > kPi) ub.x() -= 2 * kPi;
        if (ua.x() - ub.x() > kPi) ub.x() += 2 * kPi;
    }
    Eigen::Vector2d q = (1.0 - p.t) * ua + p.t * ub;
    if (mesh.shape == Shape::Cylinder) {
        if (q.x() < 0) q.x() += 2 * kPi;
        if (q.x() >= 2 * kPi) q.x() -= 2 * kPi;
    }
    return q;
}

bool point_on_boundary(const SurfaceMesh& mesh, const MeshPoint& p) {
    if (p.is_vertex()) return mesh.on_boundary[p.a];
    int e = mesh.edge_index(p.a, p.b);
    return e >= 0 && mesh.edge_tris[e][1] == -1;
}

int euler_characteristic(const SurfaceMesh& mesh) {
    return mesh.vertex_count() - mesh.edge_count() + mesh.triangle_count();
}

// ---------------------------------------------------------------------------
// File I/O

namespace {

struct LineReader {
    std::istream& in;
    int line_no = 0;

    // Next non-empty token line, comments stripped.
    bool next(std::string& out) {
        std::string raw;
        while (std::getline(in, raw)) {
            ++line_no;
            auto hash = raw.find('#');
            if (hash != std::string::npos) raw.erase(hash);
            bool blank = raw.find_first_not_of(" \t\r\n") == std::string::npos;
            if (!blank) {
                out = raw;
                return true;
            }
        }
        return false;
    }
};

}  // namespace

SurfaceMesh load_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open mesh file: " + path);
    LineReader rd{in};
    SurfaceMesh mesh;
    std::string line, tag;

    auto expect_count = [&](const char* what) -> int {
        if (!rd.next(line)) throw ParseError(rd.line_no + 1, std::string("expected ") + what);
        std::istringstream ss(line);
        int n = -1;
        if (!(ss >> tag >> n) || tag != what || n < 0)
            throw ParseError(rd.line_no, std::string("expected \"") + what + " <count>\"");
        return n;
    };

    int nv = expect_count("VERTICES");
    mesh.vertices.reserve(nv);
    for (int i = 0; i < nv; ++i) {
        if (!rd.next(line)) throw ParseError(rd.line_no + 1, "unexpected end of file in vertex list");
        std::istringstream ss(line);
        double x, y, z;
        if (!(ss >> x >> y >> z)) throw ParseError(rd.line_no, "expected \"x y z\"");
        mesh.vertices.emplace_back(x, y, z);
    }

    int nt = expect_count("TRIANGLES");
    mesh.triangles.reserve(nt);
    for (int i = 0; i < nt; ++i) {
        if (!rd.next(line)) throw ParseError(rd.line_no + 1, "unexpected end of file in triangle list");
        std::istringstream ss(line);
        int a, b, c;
        if (!(ss >> a >> b >> c)) throw ParseError(rd.line_no, "expected \"i j k\"");
        mesh.triangles.push_back({a, b, c});
    }

    if (rd.next(line)) {
        std::istringstream ss(line);
        int nc = -1;
        if (!(ss >> tag >> nc) || tag != "CONES" || nc < 0)
            throw ParseError(rd.line_no, "expected \"CONES <count>\" or end of file");
        for (int i = 0; i < nc; ++i) {
            if (!rd.next(line)) throw ParseError(rd.line_no + 1, "unexpected end of file in cone list");
            std::istringstream cs(line);
            int v;
            double alpha;
            if (!(cs >> v >> alpha)) throw ParseError(rd.line_no, "expected \"vertex_index alpha\"");
            mesh.cones.push_back({v, alpha});
        }
        if (rd.next(line)) throw ParseError(rd.line_no, "trailing content after cone list");
    }

    mesh.finalize();
    return mesh;
}

void write_mesh(const SurfaceMesh& mesh, const std::string& path) {
    std::ostringstream out;
    char buf[96];
    out << "VERTICES " << mesh.vertex_count() << "\n";
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", v.x(), v.y(), v.z());
        out << buf;
    }
    out << "TRIANGLES " << mesh.triangle_count() << "\n";
    for (const auto& t : mesh.triangles) out << t[0] << " " << t[1] << " " << t[2] << "\n";
    if (!mesh.cones.empty()) {
        out << "CONES " << mesh.cones.size() << "\n";
        for (const auto& c : mesh.cones) {
            std::snprintf(buf, sizeof(buf), "%d %.17g\n", c.vertex, c.alpha);
            out << buf;
        }
    }
    write_file_atomic(path, out.str());
}

// ---------------------------------------------------------------------------
// Generators

namespace {

// Triangulates the annulus between two concentric vertex rings ordered by
// angle, advancing whichever ring's next vertex comes first (exact integer
// comparison, so the construction is deterministic).
void zip_rings(const std::vector<int>& inner, const std::vector<int>& outer,
               std::vector<std::array<int, 3>>& tris) {
    const std::int64_t np = static_cast<std::int64_t>(inner.size());
    const std::int64_t nq = static_cast<std::int64_t>(outer.size());
    std::int64_t i = 0, j = 0;
    while (i < np || j < nq) {
        bool advance_inner = j >= nq || (i < np && (i + 1) * nq <= (j + 1) * np);
        if (advance_inner) {
            int p0 = inner[i % np], p1 = inner[(i + 1) % np], q = outer[j % nq];
            if (p0 != p1) tris.push_back({p0, q, p1});  // single-vertex inner ring: fan only
            ++i;
        } else {
            int q0 = outer[j % nq], q1 = outer[(j + 1) % nq], p = inner[i % np];
            tris.push_back({q0, q1, p});
            ++j;
        }
    }
}

SurfaceMesh generate_disk(int refinement) {
    const int rings = 2 << refinement;  // triangle count 6*rings^2 quadruples per level
    SurfaceMesh mesh;
    std::vector<std::vector<int>> ring_vertices(rings + 1);
    mesh.vertices.emplace_back(0, 0, 0);
    mesh.uv.emplace_back(0, 0);
    ring_vertices[0] = {0};
    for (int r = 1; r <= rings; ++r) {
        int n = 6 * r;
        double rad = static_cast<double>(r) / rings;
        for (int k = 0; k < n; ++k) {
            double th = 2 * kPi * k / n;
            mesh.vertices.emplace_back(rad * std::cos(th), rad * std::sin(th), 0.0);
            mesh.uv.emplace_back(rad * std::cos(th), rad * std::sin(th));
            ring_vertices[r].push_back(mesh.vertex_count() - 1);
        }
    }
    for (int r = 1; r <= rings; ++r) zip_rings(ring_vertices[r - 1], ring_vertices[r], mesh.triangles);
    mesh.shape = Shape::Disk;
    mesh.finalize();
    return mesh;
}

SurfaceMesh generate_cylinder(int refinement) {
    const int nu = 12 << refinement;
    const int nv = 2 << refinement;
    SurfaceMesh mesh;
    for (int i = 0; i <= nv; ++i) {
        double v = static_cast<double>(i) / nv;
        for (int j = 0; j < nu; ++j) {
            double u = 2 * kPi * j / nu;
            mesh.vertices.emplace_back(std::cos(u), std::sin(u), v);
            mesh.uv.emplace_back(u, v);
        }
    }
    auto idx = [&](int i, int j) { return i * nu + (j % nu); };
    for (int i = 0; i < nv; ++i)
        for (int j = 0; j < nu; ++j) {
            mesh.triangles.push_back({idx(i, j), idx(i, j + 1), idx(i + 1, j + 1)});
            mesh.triangles.push_back({idx(i, j), idx(i + 1, j + 1), idx(i + 1, j)});
        }
    mesh.shape = Shape::Cylinder;
    mesh.finalize();
    return mesh;
}

// One 4-way midpoint subdivision; preserves topology and orientation and
// quadruples the triangle count exactly.
SurfaceMesh subdivide(const SurfaceMesh& mesh) {
    SurfaceMesh out;
    out.vertices = mesh.vertices;
    out.cones = mesh.cones;
    out.shape = mesh.shape;
    out.uv = mesh.uv;
    std::unordered_map<std::uint64_t, int> mid;
    auto midpoint = [&](int a, int b) {
        std::uint64_t key = (static_cast<std::uint64_t>(std::min(a, b)) << 32) |
                            static_cast<std::uint32_t>(std::max(a, b));
        auto it = mid.find(key);
        if (it != mid.end()) return it->second;
        out.vertices.push_back(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
        int v = out.vertex_count() - 1;
        mid.emplace(key, v);
        return v;
    };
    for (const auto& t : mesh.triangles) {
        int mab = midpoint(t[0], t[1]);
        int mbc = midpoint(t[1], t[2]);
        int mca = midpoint(t[2], t[0]);
        out.triangles.push_back({t[0], mab, mca});
        out.triangles.push_back({t[1], mbc, mab});
        out.triangles.push_back({t[2], mca, mbc});
        out.triangles.push_back({mab, mbc, mca});
    }
    out.finalize();
    return out;
}

// Flat rectangle with two square holes: 3 boundary loops, chi = -1.
SurfaceMesh generate_pair_of_pants(int refinement) {
    SurfaceMesh mesh;
    const int nx = 7, ny = 3;
    auto idx = [&](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) mesh.vertices.emplace_back(i, j, 0.0);
    auto hole = [](int ci, int cj) { return cj == 1 && (ci == 1 || ci == 4); };
    for (int cj = 0; cj < ny; ++cj)
        for (int ci = 0; ci < nx; ++ci) {
            if (hole(ci, cj)) continue;
            mesh.triangles.push_back({idx(ci, cj), idx(ci + 1, cj), idx(ci + 1, cj + 1)});
            mesh.triangles.push_back({idx(ci, cj), idx(ci + 1, cj + 1), idx(ci, cj + 1)});
        }
    mesh.shape = Shape::PairOfPants;
    mesh.finalize();
    for (int r = 0; r < refinement; ++r) mesh = subdivide(mesh);
    return mesh;
}

}  // namespace

SurfaceMesh generate(Shape shape, int refinement) {
    if (refinement < 0) throw PreconditionError("refinement must be >= 0");
    switch (shape) {
        case Shape::Disk: return generate_disk(refinement);
        case Shape::Cylinder: return generate_cylinder(refinement);
        case Shape::PairOfPants: return generate_pair_of_pants(refinement);
        default: throw PreconditionError("unknown shape");
    }
}

Shape shape_from_name(const std::string& name) {
    if (name == "disk") return Shape::Disk;
    if (name == "cylinder") return Shape::Cylinder;
    if (name == "pair_of_pants") return Shape::PairOfPants;
    throw ValidationError("unknown shape name: " + name);
}

std::string shape_name(Shape shape) {
    switch (shape) {
        case Shape::Disk: return "disk";
        case Shape::Cylinder: return "cylinder";
        case Shape::PairOfPants: return "pair_of_pants";
        default: return "none";
    }
}

ConeSet make_cone_set(const SurfaceMesh& mesh, const std::vector<Cone>& entries) {
    std::vector<int> seen;
    for (const auto& c : entries) {
        if (c.vertex < 0 || c.vertex >= mesh.vertex_count())
            throw ValidationError("cone vertex out of range");
        if (c.alpha <= -1.0)
            throw ValidationError("cone order must exceed -1, got " + std::to_string(c.alpha));
        if (mesh.on_boundary[c.vertex])
            throw ValidationError("cone on boundary vertex " + std::to_string(c.vertex));
        seen.push_back(c.vertex);
    }
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
        throw ValidationError("duplicate cone vertex");
    return ConeSet{entries};
}

int nearest_vertex(const SurfaceMesh& mesh, const Eigen::Vector3d& x) {
    int best = 0;
    double bd = (mesh.vertices[0] - x).squaredNorm();
    for (int v = 1; v < mesh.vertex_count(); ++v) {
        double d = (mesh.vertices[v] - x).squaredNorm();
        if (d < bd) {
            bd = d;
            best = v;
        }
    }
    return best;
}

}  // namespace liouville
