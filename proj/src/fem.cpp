#include "liouville/fem.hpp"

#include <Eigen/Geometry>
#include <Eigen/SparseLU>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <queue>
#include <sstream>

#include "liouville/errors.hpp"
#include "liouville/io_util.hpp"

namespace liouville {

namespace detail {

// Bordered system [L a; a' 0] pins the lumped-mass mean, so solutions are the
// zero-mean representatives directly.
struct NeumannSolver {
    static constexpr int kDirectLimit = 20000;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    bool direct = false;

    const Eigen::SparseMatrix<double>* L = nullptr;
    const Eigen::VectorXd* mass = nullptr;

    void build(const Eigen::SparseMatrix<double>& stiffness, const Eigen::VectorXd& m) {
        L = &stiffness;
        mass = &m;
        const int n = static_cast<int>(m.size());
        direct = n <= kDirectLimit;
        if (!direct) return;
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(stiffness.nonZeros() + 2 * n);
        for (int k = 0; k < stiffness.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(stiffness, k); it; ++it)
                trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
        for (int i = 0; i < n; ++i) {
            trip.emplace_back(i, n, m[i]);
            trip.emplace_back(n, i, m[i]);
        }
        Eigen::SparseMatrix<double> K(n + 1, n + 1);
        K.setFromTriplets(trip.begin(), trip.end());
        lu.compute(K);
        if (lu.info() != Eigen::Success) throw SolverError("Neumann factorization failed");
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
        const int n = static_cast<int>(mass->size());
        if (direct) {
            Eigen::VectorXd rhs(n + 1);
            rhs.head(n) = b;
            rhs[n] = 0.0;
            Eigen::VectorXd x = lu.solve(rhs);
            if (lu.info() != Eigen::Success) throw SolverError("Neumann solve failed");
            return x.head(n);
        }
        return pcg(b);
    }

    // Jacobi-preconditioned CG on the consistent singular system; the kernel
    // component is removed at the end.
    Eigen::VectorXd pcg(const Eigen::VectorXd& b) const {
        const int n = static_cast<int>(mass->size());
        Eigen::VectorXd diag = L->diagonal().cwiseMax(1e-300);
        Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd r = b - (*L) * x;
        r.array() -= r.mean();
        Eigen::VectorXd z = r.cwiseQuotient(diag);
        Eigen::VectorXd p = z;
        double rz = r.dot(z);
        double bnorm = b.norm();
        if (bnorm == 0) return x;
        const int max_iter = 20 * n;
        for (int it = 0; it < max_iter; ++it) {
            Eigen::VectorXd Ap = (*L) * p;
            double alpha = rz / p.dot(Ap);
            x += alpha * p;
            r -= alpha * Ap;
            if (it % 50 == 49) r.array() -= r.mean();
            if (r.norm() <= 1e-10 * bnorm) {
                double c = mass->dot(x) / mass->sum();
                return x.array() - c;
            }
            z = r.cwiseQuotient(diag);
            double rz_new = r.dot(z);
            p = z + (rz_new / rz) * p;
            rz = rz_new;
        }
        throw SolverError("Neumann PCG did not converge");
    }
};

}  // namespace detail

FemOperators assemble(const SurfaceMesh& mesh) {
    const int n = mesh.vertex_count();
    FemOperators ops;
    ops.mass = Eigen::VectorXd::Zero(n);

    std::vector<double> areas(mesh.triangle_count());
    double total = 0;
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles[t];
        Eigen::Vector3d e1 = mesh.vertices[tri[1]] - mesh.vertices[tri[0]];
        Eigen::Vector3d e2 = mesh.vertices[tri[2]] - mesh.vertices[tri[0]];
        areas[t] = 0.5 * e1.cross(e2).norm();
        total += areas[t];
    }
    double mean_area = total / mesh.triangle_count();

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(12 * mesh.triangle_count());
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles[t];
        if (areas[t] < 1e-14 * mean_area)
            throw ValidationError("degenerate triangle " + std::to_string(t));
        for (int c = 0; c < 3; ++c) {
            int i = tri[c], j = tri[(c + 1) % 3], k = tri[(c + 2) % 3];
            Eigen::Vector3d a = mesh.vertices[i] - mesh.vertices[k];
            Eigen::Vector3d b = mesh.vertices[j] - mesh.vertices[k];
            double cot = a.dot(b) / a.cross(b).norm();
            double w = 0.5 * cot;
            trip.emplace_back(i, j, -w);
            trip.emplace_back(j, i, -w);
            trip.emplace_back(i, i, w);
            trip.emplace_back(j, j, w);
            ops.mass[tri[c]] += areas[t] / 3.0;
        }
    }
    ops.stiffness.resize(n, n);
    ops.stiffness.setFromTriplets(trip.begin(), trip.end());
    ops.area = total;
    ops.mean_edge = mesh.mean_edge_length();
    return ops;
}

Field FemOperators::solve_neumann_zero_mean(const Field& rhs_density, double tol_compat) const {
    double compat = std::abs(integral(rhs_density));
    double scale = norm(rhs_density);
    if (scale == 0.0) return Field::Zero(mass.size());
    if (compat > tol_compat * scale)
        throw PreconditionError("incompatible right-hand side: integral " + std::to_string(compat) +
                                " exceeds tolerance");
    {
        std::lock_guard<std::mutex> lock(solver_mutex_);
        if (!solver_) {
            solver_ = std::make_shared<detail::NeumannSolver>();
            solver_->build(stiffness, mass);
        }
    }
    Eigen::VectorXd b = mass.cwiseProduct(rhs_density);
    b.array() -= b.sum() / mass.size();  // exact discrete compatibility
    Field v = solver_->solve(b);
    double rel = (stiffness * v - b).norm() / std::max(b.norm(), 1e-300);
    if (rel > 1e-10) throw SolverError("Neumann solve residual " + std::to_string(rel));
    return zero_mean(v);
}

// ---------------------------------------------------------------------------
// Distances

namespace {

constexpr double kPi = std::numbers::pi;

Field analytic_distance(const SurfaceMesh& mesh, const MeshPoint& q) {
    Eigen::Vector2d uq = uv_position(mesh, q);
    const int n = mesh.vertex_count();
    Field d(n);
    if (mesh.shape == Shape::Disk) {
        for (int i = 0; i < n; ++i) d[i] = (mesh.uv[i] - uq).norm();
    } else {
        for (int i = 0; i < n; ++i) {
            double du = std::abs(mesh.uv[i].x() - uq.x());
            du = std::min(du, 2 * kPi - du);
            double dv = mesh.uv[i].y() - uq.y();
            d[i] = std::hypot(du, dv);
        }
    }
    return d;
}

Field graph_distance(const SurfaceMesh& mesh, const MeshPoint& q) {
    const int n = mesh.vertex_count();
    Field dist = Field::Constant(n, std::numeric_limits<double>::infinity());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    auto seed = [&](int v, double d) {
        if (d < dist[v]) {
            dist[v] = d;
            heap.emplace(d, v);
        }
    };
    if (q.is_vertex()) {
        seed(q.a, 0.0);
    } else {
        double len = (mesh.vertices[q.a] - mesh.vertices[q.b]).norm();
        seed(q.a, q.t * len);
        seed(q.b, (1.0 - q.t) * len);
    }

    // adjacency with unfolded shortcuts merged in
    std::vector<std::vector<std::pair<int, double>>> adj(n);
    for (size_t e = 0; e < mesh.edges.size(); ++e) {
        auto [a, b] = mesh.edges[e];
        adj[a].emplace_back(b, mesh.edge_lengths[e]);
        adj[b].emplace_back(a, mesh.edge_lengths[e]);
    }
    for (const auto& s : mesh.shortcuts) {
        adj[s.a].emplace_back(s.b, s.length);
        adj[s.b].emplace_back(s.a, s.length);
    }

    while (!heap.empty()) {
        auto [d, v] = heap.top();
        heap.pop();
        if (d > dist[v]) continue;
        for (auto [w, len] : adj[v])
            if (d + len < dist[w]) {
                dist[w] = d + len;
                heap.emplace(dist[w], w);
            }
    }
    return dist;
}

}  // namespace

Field geodesic_distance(const SurfaceMesh& mesh, const MeshPoint& q, bool allow_analytic) {
    if (allow_analytic && (mesh.shape == Shape::Disk || mesh.shape == Shape::Cylinder))
        return analytic_distance(mesh, q);
    return graph_distance(mesh, q);
}

double point_distance(const SurfaceMesh& mesh, const MeshPoint& p, const MeshPoint& q,
                      bool allow_analytic) {
    if (allow_analytic && (mesh.shape == Shape::Disk || mesh.shape == Shape::Cylinder)) {
        Eigen::Vector2d up = uv_position(mesh, p), uq = uv_position(mesh, q);
        if (mesh.shape == Shape::Disk) return (up - uq).norm();
        double du = std::abs(up.x() - uq.x());
        du = std::min(du, 2 * kPi - du);
        return std::hypot(du, up.y() - uq.y());
    }
    Field d = geodesic_distance(mesh, q, false);
    if (p.is_vertex()) return d[p.a];
    double len = (mesh.vertices[p.a] - mesh.vertices[p.b]).norm();
    return std::min(d[p.a] + p.t * len, d[p.b] + (1.0 - p.t) * len);
}

// ---------------------------------------------------------------------------
// Field files

Field read_field(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open field file: " + path);
    std::string tag;
    int n = -1, line = 1;
    if (!(in >> tag >> n) || tag != "FIELD" || n < 0) throw ParseError(line, "expected \"FIELD n\"");
    Field v = Field::Zero(n);
    std::vector<char> seen(n, 0);
    for (int k = 0; k < n; ++k) {
        int i;
        double x;
        ++line;
        if (!(in >> i >> x)) throw ParseError(line, "expected \"vertex_index value\"");
        if (i < 0 || i >= n || seen[i]) throw ParseError(line, "bad or repeated vertex index");
        seen[i] = 1;
        v[i] = x;
    }
    return v;
}

void write_field(const Field& v, const std::string& path) {
    std::ostringstream out;
    out << "FIELD " << v.size() << "\n";
    char buf[64];
    for (int i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%d %.17g\n", i, v[i]);
        out << buf;
    }
    write_file_atomic(path, out.str());
}

}  // namespace liouville
