#pragma once

#include <Eigen/Core>
#include <Eigen/Sparse>
#include <memory>
#include <mutex>

#include "liouville/mesh.hpp"

namespace liouville {

// Per-vertex real function.
using Field = Eigen::VectorXd;

namespace detail {
struct NeumannSolver;
}

// First-order operators with natural (Neumann) boundary conditions:
// cotangent stiffness L (constants in kernel, v'Lv = Dirichlet energy) and
// lumped vertex areas.
struct FemOperators {
    Eigen::SparseMatrix<double> stiffness;
    Eigen::VectorXd mass;  // lumped areas, sum = |M|
    double area = 0.0;
    double mean_edge = 0.0;

    double integral(const Field& v) const { return mass.dot(v); }
    double mean(const Field& v) const { return integral(v) / area; }
    Field zero_mean(const Field& v) const { return v.array() - mean(v); }
    double dirichlet_energy(const Field& v) const { return 0.5 * v.dot(stiffness * v); }
    // Mass-weighted L2 norm.
    double norm(const Field& v) const { return std::sqrt(v.dot(mass.cwiseProduct(v))); }
    double dot(const Field& v, const Field& w) const { return v.dot(mass.cwiseProduct(w)); }

    // Solves L v = M rhs for the zero-mean representative. rhs is a density;
    // compatibility requires |integral(rhs)| <= tol_compat * norm(rhs).
    // Direct factorization (cached) below 20k vertices, projected PCG above.
    Field solve_neumann_zero_mean(const Field& rhs_density, double tol_compat = 1e-8) const;

private:
    mutable std::shared_ptr<detail::NeumannSolver> solver_;
    mutable std::mutex solver_mutex_;

public:
    FemOperators() = default;
    FemOperators(const FemOperators& o)
        : stiffness(o.stiffness), mass(o.mass), area(o.area), mean_edge(o.mean_edge) {}
    FemOperators& operator=(const FemOperators& o) {
        stiffness = o.stiffness;
        mass = o.mass;
        area = o.area;
        mean_edge = o.mean_edge;
        solver_.reset();
        return *this;
    }
};

// Errors on triangles with area below 1e-14 x mean triangle area.
FemOperators assemble(const SurfaceMesh& mesh);

// Per-vertex intrinsic distance from q: analytic for generated parametric
// surfaces (exact flat metric), otherwise Dijkstra on the edge graph
// augmented with one round of triangle-unfolding shortcuts. Nonnegative,
// zero at q, 1-Lipschitz along edges.
Field geodesic_distance(const SurfaceMesh& mesh, const MeshPoint& q, bool allow_analytic = true);

// Distance between two mesh points under the same backend.
double point_distance(const SurfaceMesh& mesh, const MeshPoint& p, const MeshPoint& q,
                      bool allow_analytic = true);

// Field file: "FIELD n" then n lines "vertex_index value" (17 significant digits).
Field read_field(const std::string& path);
void write_field(const Field& v, const std::string& path);

}  // namespace liouville
