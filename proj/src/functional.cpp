#include "liouville/functional.hpp"

#include <cmath>
#include <numbers>

#include "liouville/errors.hpp"
#include "liouville/io_util.hpp"

namespace liouville {

namespace {
constexpr double kPi = std::numbers::pi;

void require_finite(const Field& v, const char* what) {
    if (!v.allFinite()) throw PreconditionError(std::string(what) + " contains non-finite entries");
}
}  // namespace

ProblemData make_problem(SurfaceMesh mesh, const Field& K, const std::vector<Cone>& cones,
                         double lambda, GreenMode mode) {
    if (!std::isfinite(lambda)) throw PreconditionError("lambda must be finite");
    auto setup = std::make_shared<ProblemSetup>();
    setup->mode = mode;
    setup->cones = make_cone_set(mesh, cones);
    setup->mesh = std::move(mesh);
    setup->ops = assemble(setup->mesh);
    setup->K = K.size() == 1 ? Field(Field::Constant(setup->mesh.vertex_count(), K[0])) : K;
    setup->greens.resize(cones.size());
    parallel_for(static_cast<int>(cones.size()), [&](int j) {
        setup->greens[j] = compute_green(setup->mesh, setup->ops, cones[j].vertex, mode);
    });
    setup->weight = singular_weight(setup->mesh, setup->ops, setup->K, setup->cones, setup->greens);
    return {std::move(setup), lambda};
}

double geometric_lambda(const SurfaceMesh& mesh, const ConeSet& cones) {
    return 4.0 * kPi * (euler_characteristic(mesh) + cones.order_sum());
}

double functional(const ProblemData& data, const Field& v) {
    require_finite(v, "field");
    return data.ops().dirichlet_energy(v) - data.lambda * log_weighted_mass(data.weight(), v);
}

Field density_masses(const ProblemData& data, const Field& v) {
    require_finite(v, "field");
    const auto& w = data.weight();
    double m = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < v.size(); ++i)
        if (w.quad[i] > 0 && v[i] > m) m = v[i];
    Field mu = Field::Zero(v.size());
    double total = 0;
    for (int i = 0; i < v.size(); ++i)
        if (w.quad[i] > 0) {
            mu[i] = w.quad[i] * std::exp(v[i] - m);
            total += mu[i];
        }
    mu /= total;
    return mu;
}

Field gradient(const ProblemData& data, const Field& v) {
    Field mu = density_masses(data, v);
    const auto& ops = data.ops();
    return ops.stiffness * v - data.lambda * (mu - ops.mass / ops.area);
}

Field gradient_field(const ProblemData& data, const Field& v) {
    const auto& ops = data.ops();
    Field g = gradient(data, v).cwiseQuotient(ops.mass);
    return ops.zero_mean(g);
}

Field hessian_apply(const ProblemData& data, const Field& v, const Field& w) {
    require_finite(w, "direction");
    Field mu = density_masses(data, v);
    double muw = mu.dot(w);
    return data.ops().stiffness * w - data.lambda * (mu.cwiseProduct(w) - muw * mu);
}

double residual(const ProblemData& data, const Field& v) {
    Field raw = gradient(data, v);
    // mass-weighted L2 of the pointwise defect raw_i / a_i
    return std::sqrt(raw.cwiseAbs2().cwiseQuotient(data.ops().mass).sum());
}

MetricResult to_metric(const ProblemData& data, const Field& v) {
    if (!(data.lambda > 0))
        throw PreconditionError("metric realization needs lambda > 0 (positive curvature mass)");
    double c = std::log(data.lambda) - log_weighted_mass(data.weight(), v);
    MetricResult out;
    out.shift = c;
    out.u = v.array() + c;
    const auto& setup = *data.setup;
    for (size_t j = 0; j < setup.greens.size(); ++j)
        out.u -= 4.0 * kPi * setup.cones.entries[j].alpha * setup.greens[j].values;
    out.conformal_factor = out.u.array().exp();
    return out;
}

Field conformal_curvature(const SurfaceMesh& mesh, const Field& u) {
    const int n = mesh.vertex_count();
    Field defect(n), area(n);
    for (int i = 0; i < n; ++i) defect[i] = mesh.on_boundary[i] ? 0.0 : 2.0 * kPi;
    area.setZero();

    auto scaled_len = [&](int a, int b) {
        double s = 0.25 * (std::clamp(u[a], -300.0, 300.0) + std::clamp(u[b], -300.0, 300.0));
        return (mesh.vertices[a] - mesh.vertices[b]).norm() * std::exp(s);
    };
    for (const auto& t : mesh.triangles) {
        double l01 = scaled_len(t[0], t[1]), l12 = scaled_len(t[1], t[2]), l20 = scaled_len(t[2], t[0]);
        double s = 0.5 * (l01 + l12 + l20);
        double a2 = std::max(0.0, s * (s - l01) * (s - l12) * (s - l20));
        double tri_area = std::sqrt(a2);
        for (int c = 0; c < 3; ++c) {
            double lo = c == 0 ? l12 : (c == 1 ? l20 : l01);   // opposite
            double la = c == 0 ? l01 : (c == 1 ? l12 : l20);   // adjacent
            double lb = c == 0 ? l20 : (c == 1 ? l01 : l12);
            double cosang = std::clamp((la * la + lb * lb - lo * lo) / (2 * la * lb), -1.0, 1.0);
            if (!mesh.on_boundary[t[c]]) defect[t[c]] -= std::acos(cosang);
            area[t[c]] += tri_area / 3.0;
        }
    }
    Field out = Field::Zero(n);
    for (int i = 0; i < n; ++i)
        if (!mesh.on_boundary[i] && area[i] > 0) out[i] = defect[i] / area[i];
    return out;
}

CurvatureReport curvature_check(const SurfaceMesh& mesh, const ConeSet& cones, const Field& u,
                                const Field& K) {
    CurvatureReport rep;
    rep.curvature = conformal_curvature(mesh, u);
    const int n = mesh.vertex_count();
    rep.compared.assign(n, 1);
    for (int i = 0; i < n; ++i)
        if (mesh.on_boundary[i]) rep.compared[i] = 0;
    // breadth-first 3-ring exclusion around each cone
    for (const auto& c : cones.entries) {
        std::vector<int> frontier{c.vertex};
        rep.compared[c.vertex] = 0;
        for (int ring = 0; ring < 3; ++ring) {
            std::vector<int> next;
            for (int v : frontier)
                for (int w : mesh.neighbors[v]) {
                    if (rep.compared[w]) next.push_back(w);
                    rep.compared[w] = 0;
                }
            frontier = std::move(next);
        }
    }
    double sum = 0;
    for (int i = 0; i < n; ++i) {
        if (!rep.compared[i]) continue;
        double dev = std::abs(rep.curvature[i] - K[i]);
        rep.max_abs_dev = std::max(rep.max_abs_dev, dev);
        sum += dev;
        ++rep.compared_count;
    }
    rep.mean_abs_dev = rep.compared_count ? sum / rep.compared_count : 0.0;
    return rep;
}

EquationDefect liouville_defect(const SurfaceMesh& mesh, const FemOperators& ops, const Field& u,
                                double K0, double K, double h0, double h) {
    Field Lu = ops.stiffness * u;
    EquationDefect out;
    double interior_mass = 0;
    for (int i = 0; i < mesh.vertex_count(); ++i) {
        if (mesh.on_boundary[i]) continue;
        double d = (Lu[i] + (2 * K0 - 2 * K * std::exp(u[i])) * ops.mass[i]) / ops.mass[i];
        out.interior_l2 += ops.mass[i] * d * d;
        interior_mass += ops.mass[i];
    }
    out.interior_l2 = std::sqrt(out.interior_l2 / interior_mass);

    // half the adjacent boundary edge lengths per boundary vertex
    Field blen = Field::Zero(mesh.vertex_count());
    for (const auto& loop : mesh.boundary_loops)
        for (size_t k = 0; k < loop.size(); ++k) {
            int a = loop[k], b = loop[(k + 1) % loop.size()];
            double l = (mesh.vertices[a] - mesh.vertices[b]).norm();
            blen[a] += 0.5 * l;
            blen[b] += 0.5 * l;
        }
    double bmass = 0;
    for (int i = 0; i < mesh.vertex_count(); ++i) {
        if (!mesh.on_boundary[i]) continue;
        double flux = (Lu[i] - (2 * K * std::exp(u[i]) - 2 * K0) * ops.mass[i]) / blen[i];
        double d = flux + 2 * h0 - 2 * h * std::exp(0.5 * u[i]);
        out.boundary_l2 += blen[i] * d * d;
        bmass += blen[i];
    }
    out.boundary_l2 = std::sqrt(out.boundary_l2 / bmass);
    return out;
}

}  // namespace liouville
