#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "liouville/errors.hpp"

namespace liouville {

// Conical point of order alpha; the cone angle is 2*pi*(1+alpha).
struct Cone {
    int vertex = -1;
    double alpha = 0.0;
};

struct ConeSet {
    std::vector<Cone> entries;

    bool empty() const { return entries.empty(); }
    // True when every order is >= -1/2.
    bool all_at_least_minus_half() const;
    double order_sum() const;
};

enum class Shape { None, Disk, Cylinder, PairOfPants };

// Triangulated orientable surface with boundary. Immutable once finalized:
// all derived connectivity below is built by finalize() and never mutated.
struct SurfaceMesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<std::array<int, 3>> triangles;  // CCW w.r.t. outward orientation
    std::vector<Cone> cones;                    // interior vertices only

    // Derived connectivity (finalize()).
    std::vector<std::vector<int>> boundary_loops;  // label l = index + 1
    std::vector<char> on_boundary;                 // per vertex
    std::vector<std::pair<int, int>> edges;        // unique, a < b
    std::vector<std::array<int, 2>> edge_tris;     // per edge, -1 if none
    std::vector<std::vector<int>> vertex_tris;
    std::vector<std::vector<int>> neighbors;       // 1-ring, sorted
    std::vector<double> edge_lengths;

    // Unfolded-diagonal shortcuts for the graph distance backend.
    struct Shortcut {
        int a, b;
        double length;
    };
    std::vector<Shortcut> shortcuts;

    // Set by generate(); uv carries the flat parametrization used by the
    // analytic distance override (disk: plane coords, cylinder: (u, v) with
    // u periodic in [0, 2*pi)).
    Shape shape = Shape::None;
    std::vector<Eigen::Vector2d> uv;

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int triangle_count() const { return static_cast<int>(triangles.size()); }
    int edge_count() const { return static_cast<int>(edges.size()); }
    int boundary_loop_count() const { return static_cast<int>(boundary_loops.size()); }

    int edge_index(int a, int b) const;  // -1 if absent
    double mean_edge_length() const;

    // Validates all invariants and builds derived connectivity.
    // Throws ValidationError on any violation.
    void finalize();

private:
    std::unordered_map<std::uint64_t, int> edge_lookup_;
};

// Location on the mesh: a vertex, or a point on edge (a, b) at parameter t,
// i.e. position (1-t)*x_a + t*x_b.
struct MeshPoint {
    int a = -1;
    int b = -1;
    double t = 0.0;

    static MeshPoint vertex(int v) { return MeshPoint{v, -1, 0.0}; }
    static MeshPoint on_edge(int a, int b, double t);
    bool is_vertex() const { return b < 0; }
    bool operator==(const MeshPoint& o) const = default;
};

Eigen::Vector3d position(const SurfaceMesh& mesh, const MeshPoint& p);
// Parametric coordinates for generated shapes (wrap-aware on the cylinder).
Eigen::Vector2d uv_position(const SurfaceMesh& mesh, const MeshPoint& p);
bool point_on_boundary(const SurfaceMesh& mesh, const MeshPoint& p);

int euler_characteristic(const SurfaceMesh& mesh);

// File format:
//   VERTICES n    followed by n lines "x y z"
//   TRIANGLES m   followed by m lines "i j k"   (0-based, CCW)
//   CONES c       followed by c lines "vertex_index alpha"   (optional)
// '#' starts a comment anywhere.
SurfaceMesh load_mesh(const std::string& path);
// Emits floats with 17 significant digits so load(write(m)) round-trips bit-exactly.
void write_mesh(const SurfaceMesh& mesh, const std::string& path);

// Structured test surfaces. Successive refinements quadruple the triangle
// count; boundary loop count and Euler characteristic are refinement-invariant.
SurfaceMesh generate(Shape shape, int refinement);

Shape shape_from_name(const std::string& name);
std::string shape_name(Shape shape);

// Cone orders attached to mesh vertices, validated: alpha > -1, distinct
// interior vertices.
ConeSet make_cone_set(const SurfaceMesh& mesh, const std::vector<Cone>& entries);

// Vertex nearest to a spatial position (ties to the lowest index).
int nearest_vertex(const SurfaceMesh& mesh, const Eigen::Vector3d& x);

}  // namespace liouville
