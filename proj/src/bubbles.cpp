#include "liouville/bubbles.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <random>

#include "liouville/errors.hpp"

namespace liouville {

namespace {

constexpr double kPi = std::numbers::pi;

// 16-point Gauss-Legendre nodes/weights on [0,1].
constexpr double kG16x[] = {0.0052995325041750337, 0.027712488463383712, 0.067184398806084128,
                            0.12229779582249845,   0.19106187779867811,  0.27099161117138631,
                            0.35919822461037054,   0.45249374508118128,  0.54750625491881872,
                            0.64080177538962946,   0.72900838882861369,  0.80893812220132189,
                            0.87770220417750155,   0.93281560119391587,  0.97228751153661629,
                            0.99470046749582497};
constexpr double kG16w[] = {0.013576229705877047, 0.031126761969323946, 0.047579255841246392,
                            0.062314485627766936, 0.074797994408288366, 0.084578259697501269,
                            0.091301707522461794, 0.094725305227534248, 0.094725305227534248,
                            0.091301707522461794, 0.084578259697501269, 0.074797994408288366,
                            0.062314485627766936, 0.047579255841246392, 0.031126761969323946,
                            0.013576229705877047};
constexpr int kG16 = 16;

double bubble_kernel_log(double t, double Lambda, double d) {
    // log of t * (Lambda / (1 + Lambda^2 d^2))^2
    return std::log(t) + 2.0 * std::log(Lambda) - 2.0 * std::log1p(Lambda * Lambda * d * d);
}

struct LineFit {
    double slope, intercept, rms;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    double n = static_cast<double>(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double denom = n * sxx - sx * sx;
    if (denom == 0) throw PreconditionError("degenerate fit: identical abscissae");
    LineFit f{};
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    for (size_t i = 0; i < x.size(); ++i) {
        double e = y[i] - (f.intercept + f.slope * x[i]);
        f.rms += e * e;
    }
    f.rms = std::sqrt(f.rms / n);
    return f;
}

// Dijkstra restricted to the ball of the given radius; returns (vertex, dist).
std::vector<std::pair<int, double>> truncated_ball(const SurfaceMesh& mesh, int seed, double radius) {
    std::vector<std::pair<int, double>> out;
    std::unordered_map<int, double> dist;
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[seed] = 0.0;
    heap.emplace(0.0, seed);
    while (!heap.empty()) {
        auto [d, v] = heap.top();
        heap.pop();
        auto it = dist.find(v);
        if (it == dist.end() || d > it->second) continue;
        out.emplace_back(v, d);
        for (int w : mesh.neighbors[v]) {
            double nd = d + (mesh.vertices[v] - mesh.vertices[w]).norm();
            if (nd > radius) continue;
            auto jt = dist.find(w);
            if (jt == dist.end() || nd < jt->second) {
                dist[w] = nd;
                heap.emplace(nd, w);
            }
        }
    }
    return out;
}

}  // namespace

BarycenterConfig BarycenterConfig::normalized() const {
    double s = 0;
    for (const auto& a : atoms) s += a.weight;
    if (s <= 0) throw PreconditionError("barycenter weights must have positive sum");
    BarycenterConfig out = *this;
    for (auto& a : out.atoms) a.weight /= s;
    return out;
}

void BarycenterConfig::validate(const SurfaceMesh& mesh) const {
    if (atoms.empty()) throw PreconditionError("barycenter needs at least one atom");
    if (order > 0 && static_cast<int>(atoms.size()) > order)
        throw PreconditionError("more atoms than the barycenter order allows");
    double s = 0;
    for (const auto& a : atoms) {
        if (a.weight < -1e-14) throw PreconditionError("negative barycenter weight");
        if (a.point.a < 0 || a.point.a >= mesh.vertex_count() ||
            (!a.point.is_vertex() && (a.point.b < 0 || a.point.b >= mesh.vertex_count())))
            throw PreconditionError("barycenter atom off the mesh");
        s += a.weight;
    }
    if (std::abs(s - 1.0) > 1e-10) throw PreconditionError("barycenter weights must sum to one");
}

std::vector<MeshPoint> boundary_positions(const SurfaceMesh& mesh, int loop_label, int count,
                                          double offset01) {
    if (loop_label < 1 || loop_label > mesh.boundary_loop_count())
        throw PreconditionError("no boundary loop with label " + std::to_string(loop_label));
    const auto& loop = mesh.boundary_loops[loop_label - 1];
    const int m = static_cast<int>(loop.size());
    std::vector<double> cum(m + 1, 0.0);
    for (int i = 0; i < m; ++i) {
        int a = loop[i], b = loop[(i + 1) % m];
        cum[i + 1] = cum[i] + (mesh.vertices[a] - mesh.vertices[b]).norm();
    }
    double total = cum[m];
    std::vector<MeshPoint> out;
    for (int j = 0; j < count; ++j) {
        double s = std::fmod((j + offset01) * total / count, total);
        int seg = static_cast<int>(std::upper_bound(cum.begin(), cum.end(), s) - cum.begin()) - 1;
        seg = std::clamp(seg, 0, m - 1);
        double t = (s - cum[seg]) / (cum[seg + 1] - cum[seg]);
        out.push_back(MeshPoint::on_edge(loop[seg], loop[(seg + 1) % m], t));
    }
    return out;
}

BarycenterConfig uniform_barycenter(const std::vector<MeshPoint>& points) {
    BarycenterConfig c;
    c.order = static_cast<int>(points.size());
    for (const auto& p : points) c.atoms.push_back({1.0 / points.size(), p});
    return c;
}

Field bubble_field(const ProblemData& data, const BarycenterConfig& sigma, double Lambda) {
    const SurfaceMesh& mesh = data.mesh();
    sigma.validate(mesh);
    if (Lambda < 1.0) throw PreconditionError("bubble scale must satisfy Lambda >= 1");
    BarycenterConfig cfg = sigma.normalized();
    const int n = mesh.vertex_count();
    std::vector<Field> dist;
    dist.reserve(cfg.atoms.size());
    for (const auto& a : cfg.atoms) dist.push_back(geodesic_distance(mesh, a.point));

    Field phi(n);
    for (int i = 0; i < n; ++i) {
        double m = -std::numeric_limits<double>::infinity();
        for (size_t k = 0; k < cfg.atoms.size(); ++k)
            m = std::max(m, bubble_kernel_log(cfg.atoms[k].weight, Lambda, dist[k][i]));
        double s = 0;
        for (size_t k = 0; k < cfg.atoms.size(); ++k)
            s += std::exp(bubble_kernel_log(cfg.atoms[k].weight, Lambda, dist[k][i]) - m);
        phi[i] = m + std::log(s);
    }
    return data.ops().zero_mean(phi);
}

// ---------------------------------------------------------------------------
// Bubble energy report

namespace {

// Flat-parametrization data for one atom.
struct AtomPatch {
    Eigen::Vector2d q;        // uv position
    bool boundary = false;
    Eigen::Vector2d tangent;  // boundary frame (tangent, inward normal)
    Eigen::Vector2d normal;
    double radius = 0;        // patch cap
    // weight samples near the patch for nearest-vertex lookup
    std::vector<std::pair<Eigen::Vector2d, double>> weight_samples;
};

// wrap-aware uv offset from p to x
Eigen::Vector2d uv_offset(Shape shape, const Eigen::Vector2d& p, const Eigen::Vector2d& x) {
    Eigen::Vector2d d = x - p;
    if (shape == Shape::Cylinder) {
        if (d.x() > kPi) d.x() -= 2 * kPi;
        if (d.x() < -kPi) d.x() += 2 * kPi;
    }
    return d;
}

// distance along direction e from q until the domain boundary
double exit_radius(Shape shape, const Eigen::Vector2d& q, const Eigen::Vector2d& e) {
    if (shape == Shape::Cylinder) {
        double r = std::numeric_limits<double>::infinity();
        if (e.y() > 1e-15) r = std::min(r, (1.0 - q.y()) / e.y());
        if (e.y() < -1e-15) r = std::min(r, -q.y() / e.y());
        return r;
    }
    // disk: |q + r e| = 1
    double qe = q.dot(e);
    double disc = qe * qe + 1.0 - q.squaredNorm();
    if (disc <= 0) return 0.0;
    return -qe + std::sqrt(disc);
}

struct BubbleEvaluator {
    const ProblemData& data;
    std::vector<AtomPatch> patches;
    std::vector<double> weights;  // t_i
    double Lambda = 1;
    Shape shape;

    double S(const Eigen::Vector2d& x) const {
        double s = 0;
        for (size_t k = 0; k < patches.size(); ++k) {
            double d = uv_offset(shape, patches[k].q, x).norm();
            s += weights[k] * std::exp(2.0 * std::log(Lambda) - 2.0 * std::log1p(Lambda * Lambda * d * d));
        }
        return s;
    }

    double grad_sq(const Eigen::Vector2d& x) const {
        Eigen::Vector2d g = Eigen::Vector2d::Zero();
        double s = 0;
        for (size_t k = 0; k < patches.size(); ++k) {
            Eigen::Vector2d off = uv_offset(shape, patches[k].q, x);
            double d = off.norm();
            double L2 = Lambda * Lambda;
            double B = L2 / ((1 + L2 * d * d) * (1 + L2 * d * d));
            s += weights[k] * B;
            if (d > 1e-300) {
                double Bp = -4.0 * L2 * L2 * d / std::pow(1 + L2 * d * d, 3);
                g += weights[k] * Bp * (off / d);
            }
        }
        return g.squaredNorm() / (s * s);
    }
};

// nearest sample of the weight values near a patch (patches exclude cones, so
// the values there are finite and smooth)
double weight_near(const AtomPatch& p, Shape shape, const Eigen::Vector2d& x) {
    double best = 2.0, bd = std::numeric_limits<double>::infinity();
    for (const auto& [uv, val] : p.weight_samples) {
        double d = uv_offset(shape, uv, x).squaredNorm();
        if (d < bd) {
            bd = d;
            best = val;
        }
    }
    return best;
}

struct PatchIntegrals {
    double dirichlet = 0, mass = 0, phi = 0, area = 0;
};

// polar quadrature over one atom patch: Gauss panels in the angle and in the
// log radius, the latter resolving the 1/Lambda core far below the mesh size
PatchIntegrals integrate_patch(const BubbleEvaluator& ev, const AtomPatch& p) {
    PatchIntegrals out;
    const int theta_panels = p.boundary ? 1 : 2;
    const double theta_span = kPi;
    const double r0 = 1e-3 / ev.Lambda;
    for (int tp = 0; tp < theta_panels; ++tp) {
        for (int ti = 0; ti < kG16; ++ti) {
            double theta = theta_span * (tp + kG16x[ti]);
            double wtheta = theta_span * kG16w[ti];
            Eigen::Vector2d e = std::cos(theta) * p.tangent + std::sin(theta) * p.normal;
            double R = std::min(p.radius, exit_radius(ev.shape, p.q, e));
            if (R <= r0) continue;
            double la = std::log(r0), lb = std::log(R);
            int panels = std::max(1, static_cast<int>(std::ceil((lb - la) / 1.5)));
            for (int panel = 0; panel < panels; ++panel) {
                double pa = la + (lb - la) * panel / panels;
                double pb = la + (lb - la) * (panel + 1) / panels;
                for (int g = 0; g < kG16; ++g) {
                    double rho = pa + (pb - pa) * kG16x[g];
                    double wr = (pb - pa) * kG16w[g];
                    double r = std::exp(rho);
                    Eigen::Vector2d x = p.q + r * e;
                    if (ev.shape == Shape::Cylinder) {
                        if (x.x() < 0) x.x() += 2 * kPi;
                        if (x.x() >= 2 * kPi) x.x() -= 2 * kPi;
                    }
                    double jac = wtheta * wr * r * r;  // r dr dtheta, dr = r drho
                    double s = ev.S(x);
                    out.dirichlet += jac * ev.grad_sq(x);
                    out.mass += jac * weight_near(p, ev.shape, x) * s;
                    out.phi += jac * std::log(s);
                    out.area += jac;
                }
            }
        }
    }
    return out;
}

bool inside_patch(const BubbleEvaluator& ev, const AtomPatch& p, const Eigen::Vector2d& x) {
    Eigen::Vector2d off = uv_offset(ev.shape, p.q, x);
    double r = off.norm();
    if (r >= p.radius) return false;
    if (r < 1e-300) return true;
    Eigen::Vector2d e = off / r;
    if (p.boundary && e.dot(p.normal) < -1e-12) return false;
    return r < std::min(p.radius, exit_radius(ev.shape, p.q, e));
}

}  // namespace

BubbleSlopes bubble_energy_report(const ProblemData& data, const BarycenterConfig& sigma,
                                  const std::vector<double>& Lambda_list) {
    const SurfaceMesh& mesh = data.mesh();
    sigma.validate(mesh);
    if (Lambda_list.size() < 3) throw PreconditionError("Lambda sweep needs at least 3 entries");
    for (size_t i = 1; i < Lambda_list.size(); ++i)
        if (Lambda_list[i] <= Lambda_list[i - 1])
            throw PreconditionError("Lambda sweep must be strictly increasing");

    // protected radius: no cones near the atoms
    double protect = 10.0 * data.ops().mean_edge;
    for (const auto& c : data.setup->cones.entries)
        for (const auto& a : sigma.atoms)
            if (point_distance(mesh, a.point, MeshPoint::vertex(c.vertex)) < protect)
                throw PreconditionError("cone within the protected radius of a bubble atom");

    BarycenterConfig cfg = sigma.normalized();
    BubbleSlopes out;
    out.Lambda = Lambda_list;
    out.analytic = mesh.shape == Shape::Disk || mesh.shape == Shape::Cylinder;

    if (!out.analytic) {
        // sampled-field fallback; meaningful while 1/Lambda stays above the mesh size
        for (double L : Lambda_list) {
            Field phi = bubble_field(data, cfg, L);
            double dir = data.ops().dirichlet_energy(phi);
            double lm = log_weighted_mass(data.weight(), phi);
            out.dirichlet.push_back(dir);
            out.log_mass.push_back(lm);
            out.J.push_back(dir - data.lambda * lm);
        }
    } else {
        // atom patches in the flat parametrization
        std::vector<AtomPatch> patches;
        for (const auto& a : cfg.atoms) {
            AtomPatch p;
            p.q = uv_position(mesh, a.point);
            p.boundary = point_on_boundary(mesh, a.point);
            if (mesh.shape == Shape::Cylinder) {
                if (p.boundary) {
                    p.normal = p.q.y() < 0.5 ? Eigen::Vector2d(0, 1) : Eigen::Vector2d(0, -1);
                    p.tangent = Eigen::Vector2d(1, 0);
                } else {
                    p.tangent = Eigen::Vector2d(1, 0);
                    p.normal = Eigen::Vector2d(0, 1);
                }
            } else {
                if (p.boundary) {
                    p.normal = -p.q.normalized();
                    p.tangent = Eigen::Vector2d(-p.normal.y(), p.normal.x());
                } else {
                    p.tangent = Eigen::Vector2d(1, 0);
                    p.normal = Eigen::Vector2d(0, 1);
                }
            }
            p.radius = 0.9;
            patches.push_back(p);
        }
        // keep patches disjoint and clear of cones
        for (size_t i = 0; i < patches.size(); ++i) {
            for (size_t j = 0; j < patches.size(); ++j)
                if (i != j) {
                    double sep = uv_offset(mesh.shape, patches[i].q, patches[j].q).norm();
                    patches[i].radius = std::min(patches[i].radius, 0.45 * sep);
                }
            for (const auto& c : data.setup->cones.entries) {
                double dc = uv_offset(mesh.shape, patches[i].q, mesh.uv[c.vertex]).norm();
                patches[i].radius = std::min(patches[i].radius, dc - 2.0 * data.ops().mean_edge);
            }
            if (patches[i].radius <= 5.0 * data.ops().mean_edge)
                throw PreconditionError("bubble atoms too close together for the patch quadrature");
            for (int v = 0; v < mesh.vertex_count(); ++v)
                if (uv_offset(mesh.shape, patches[i].q, mesh.uv[v]).norm() <
                    patches[i].radius + 2.0 * data.ops().mean_edge)
                    patches[i].weight_samples.emplace_back(mesh.uv[v], data.weight().values[v]);
        }

        for (double L : Lambda_list) {
            BubbleEvaluator ev{data, patches, {}, L, mesh.shape};
            for (const auto& a : cfg.atoms) ev.weights.push_back(a.weight);

            double dir = 0, mass = 0, phibar_num = 0;
            for (const auto& p : patches) {
                PatchIntegrals pi = integrate_patch(ev, p);
                dir += pi.dirichlet;
                mass += pi.mass;
                phibar_num += pi.phi;
            }
            // lumped remainder outside the patches
            const auto& ops = data.ops();
            const auto& w = data.weight();
            for (int i = 0; i < mesh.vertex_count(); ++i) {
                bool in = false;
                for (const auto& p : patches) in = in || inside_patch(ev, p, mesh.uv[i]);
                if (in) continue;
                double s = ev.S(mesh.uv[i]);
                dir += ops.mass[i] * ev.grad_sq(mesh.uv[i]);
                mass += w.quad[i] * s;
                phibar_num += ops.mass[i] * std::log(s);
            }
            double phibar = phibar_num / ops.area;
            double dirichlet = 0.5 * dir;
            double log_mass = std::log(mass) - phibar;
            out.dirichlet.push_back(dirichlet);
            out.log_mass.push_back(log_mass);
            out.J.push_back(dirichlet - data.lambda * log_mass);
        }
    }

    std::vector<double> logL;
    for (double L : Lambda_list) logL.push_back(std::log(L));
    LineFit fd = fit_line(logL, out.dirichlet);
    LineFit fm = fit_line(logL, out.log_mass);
    LineFit fj = fit_line(logL, out.J);
    out.dirichlet_slope = fd.slope;
    out.mass_slope = fm.slope;
    out.J_slope = fj.slope;
    out.dirichlet_fit_rms = fd.rms;
    out.mass_fit_rms = fm.rms;
    out.J_fit_rms = fj.rms;
    return out;
}

// ---------------------------------------------------------------------------
// Barycenter projection and pushforward

BarycenterConfig barycenter_project(const ProblemData& data, const Field& rho, int k, double r,
                                    double* uncaptured) {
    const SurfaceMesh& mesh = data.mesh();
    const auto& ops = data.ops();
    if (k < 1) throw PreconditionError("barycenter order must be positive");
    Field m = ops.mass.cwiseProduct(rho);
    if (m.minCoeff() < -1e-12) throw PreconditionError("density must be nonnegative");
    if (std::abs(m.sum() - 1.0) > 1e-10)
        throw PreconditionError("density must have unit integral, got " + std::to_string(m.sum()));

    BarycenterConfig out;
    out.order = k;
    double captured_total = 0;
    for (int round = 0; round < k; ++round) {
        int best = -1;
        double best_mass = -1;
        for (int q = 0; q < mesh.vertex_count(); ++q) {
            double bm = 0;
            for (auto [v, d] : truncated_ball(mesh, q, r)) bm += m[v];
            // ties resolved toward the candidate holding the most mass itself,
            // then toward the lowest index
            bool better = bm > best_mass + 1e-15 ||
                          (bm > best_mass - 1e-15 && best >= 0 && m[q] > m[best] + 1e-15);
            if (better) {
                best_mass = bm;
                best = q;
            }
        }
        out.atoms.push_back({best_mass, MeshPoint::vertex(best)});
        captured_total += best_mass;
        for (auto [v, d] : truncated_ball(mesh, best, r)) m[v] = 0.0;
    }
    if (uncaptured) *uncaptured = std::max(0.0, 1.0 - captured_total);
    if (captured_total <= 0) {
        for (auto& a : out.atoms) a.weight = 1.0 / out.atoms.size();
        return out;
    }
    for (auto& a : out.atoms) a.weight /= captured_total;
    return out;
}

BarycenterConfig boundary_pushforward(const SurfaceMesh& mesh, const BarycenterConfig& sigma,
                                      int component_label) {
    if (component_label < 1 || component_label > mesh.boundary_loop_count())
        throw PreconditionError("no boundary loop with label " + std::to_string(component_label));
    const auto& loop = mesh.boundary_loops[component_label - 1];
    std::vector<char> in_loop(mesh.vertex_count(), 0);
    for (int v : loop) in_loop[v] = 1;

    BarycenterConfig out = sigma;
    for (auto& atom : out.atoms) {
        const MeshPoint& p = atom.point;
        if (p.is_vertex() && in_loop[p.a]) continue;
        if (!p.is_vertex() && in_loop[p.a] && in_loop[p.b]) {
            int e = mesh.edge_index(p.a, p.b);
            if (e >= 0 && mesh.edge_tris[e][1] == -1) continue;  // already on the loop
        }
        Field d = geodesic_distance(mesh, p);
        int best = -1;
        double bd = std::numeric_limits<double>::infinity();
        for (int v : loop)
            if (d[v] < bd - 1e-15 || (std::abs(d[v] - bd) <= 1e-15 && v < best)) {
                bd = d[v];
                best = v;
            }
        atom.point = MeshPoint::vertex(best);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Mass spectrum

MassReport mass_spectrum(const ProblemData& data, const Field& v, double r, double prominence) {
    const SurfaceMesh& mesh = data.mesh();
    const auto& ops = data.ops();
    MassReport rep;
    rep.lambda = data.lambda;
    rep.ball_radius = r;

    Field mu = density_masses(data, v);
    Field density = mu.cwiseQuotient(ops.mass);
    double threshold = prominence / ops.area;

    std::vector<int> candidates;
    for (int i = 0; i < mesh.vertex_count(); ++i) {
        if (density[i] < threshold) continue;
        bool is_max = true;
        for (int w : mesh.neighbors[i]) is_max = is_max && density[i] >= density[w];
        if (is_max) candidates.push_back(i);
    }
    std::sort(candidates.begin(), candidates.end(),
              [&](int a, int b) { return density[a] != density[b] ? density[a] > density[b] : a < b; });

    std::vector<char> claimed(mesh.vertex_count(), 0);
    std::vector<int> accepted;
    for (int c : candidates) {
        if (claimed[c]) continue;  // merged into a stronger nearby peak
        accepted.push_back(c);
        for (auto [w, d] : truncated_ball(mesh, c, r)) claimed[w] = 1;
    }

    claimed.assign(mesh.vertex_count(), 0);
    std::unordered_map<int, int> cone_at;
    for (size_t j = 0; j < data.setup->cones.entries.size(); ++j)
        cone_at[data.setup->cones.entries[j].vertex] = static_cast<int>(j);

    for (int c : accepted) {
        MassPeak peak;
        peak.vertex = c;
        peak.on_boundary = mesh.on_boundary[c];
        peak.cone_index = cone_at.count(c) ? cone_at[c] : -1;
        double mass = 0;
        for (auto [w, d] : truncated_ball(mesh, c, r))
            if (!claimed[w]) {
                mass += mu[w];
                claimed[w] = 1;
            }
        peak.mass = data.lambda * mass;

        // nearest blow-up quantum
        peak.reference = 4 * kPi;
        peak.reference_class = "boundary";
        auto consider = [&](double ref, const std::string& cls) {
            if (std::abs(peak.mass - ref) < std::abs(peak.mass - peak.reference)) {
                peak.reference = ref;
                peak.reference_class = cls;
            }
        };
        consider(8 * kPi, "interior");
        for (const auto& cone : data.setup->cones.entries)
            consider(8 * kPi * (1.0 + cone.alpha), "cone");
        peak.relative_gap = std::abs(peak.mass - peak.reference) / peak.reference;
        rep.captured += peak.mass;
        rep.peaks.push_back(std::move(peak));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Moser-Trudinger probe

MtProbeReport mt_probe(const MtProbeConfig& config) {
    MtProbeReport rep;
    std::vector<double> logs;
    for (int level : config.levels) {
        SurfaceMesh mesh = generate(config.shape, level);
        FemOperators ops = assemble(mesh);
        Field K = Field::Ones(mesh.vertex_count());
        SingularWeight w = singular_weight(mesh, ops, K, ConeSet{}, {});
        const int n = mesh.vertex_count();

        std::vector<char> in_omega(n, 0), in_wide(n, 0);
        for (int i = 0; i < n; ++i) {
            double d = (mesh.vertices[i] - config.region_center).norm();
            in_omega[i] = d <= config.region_radius;
            in_wide[i] = d <= config.region_radius + config.collar;
        }
        int omega_count = 0;
        for (int i = 0; i < n; ++i) omega_count += in_omega[i];
        if (omega_count == 0) throw PreconditionError("probe region contains no vertices");

        // stiffness restricted to triangles inside the collar widening
        std::vector<Eigen::Triplet<double>> trip;
        for (const auto& t : mesh.triangles) {
            if (!(in_wide[t[0]] && in_wide[t[1]] && in_wide[t[2]])) continue;
            for (int c = 0; c < 3; ++c) {
                int i = t[c], j = t[(c + 1) % 3], k2 = t[(c + 2) % 3];
                Eigen::Vector3d a = mesh.vertices[i] - mesh.vertices[k2];
                Eigen::Vector3d b = mesh.vertices[j] - mesh.vertices[k2];
                double cot = a.dot(b) / a.cross(b).norm();
                trip.emplace_back(i, j, -0.5 * cot);
                trip.emplace_back(j, i, -0.5 * cot);
                trip.emplace_back(i, i, 0.5 * cot);
                trip.emplace_back(j, j, 0.5 * cot);
            }
        }
        Eigen::SparseMatrix<double> Lwide(n, n);
        Lwide.setFromTriplets(trip.begin(), trip.end());

        auto objective = [&](const Field& v) {
            double m = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < n; ++i)
                if (in_omega[i]) m = std::max(m, v[i]);
            double s = 0;
            for (int i = 0; i < n; ++i)
                if (in_omega[i]) s += w.quad[i] * std::exp(v[i] - m);
            double local_mass = m + std::log(s);
            return config.constant * local_mass - 0.5 * v.dot(Lwide * v) -
                   config.epsilon * v.dot(ops.stiffness * v);
        };
        auto grad = [&](const Field& v) {
            double m = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < n; ++i)
                if (in_omega[i]) m = std::max(m, v[i]);
            Field mu = Field::Zero(n);
            double s = 0;
            for (int i = 0; i < n; ++i)
                if (in_omega[i]) {
                    mu[i] = w.quad[i] * std::exp(v[i] - m);
                    s += mu[i];
                }
            mu /= s;
            return Field(config.constant * mu - Lwide * v - 2.0 * config.epsilon * (ops.stiffness * v));
        };

        // scale-resolved bubble family: centers in the region, scales up to the
        // finest the mesh represents
        std::vector<int> centers{nearest_vertex(mesh, config.region_center)};
        for (const auto& loop : mesh.boundary_loops) {
            int added = 0;
            for (int v : loop)
                if (in_omega[v] && added < 4) {
                    centers.push_back(v);
                    ++added;
                }
        }
        double bubble_best = -std::numeric_limits<double>::infinity();
        bool capped = false;
        for (int c : centers) {
            Field d = geodesic_distance(mesh, MeshPoint::vertex(c), false);
            double L_top = std::max(2.0, 0.5 / ops.mean_edge);
            for (double L = 2.0; L <= L_top; L *= 2.0) {
                Field v(n);
                for (int i = 0; i < n; ++i) v[i] = -2.0 * std::log1p(L * L * d[i] * d[i]);
                double f = objective(ops.zero_mean(v));
                bubble_best = std::max(bubble_best, f);
                if (f > config.cap) capped = true;
            }
        }

        std::mt19937_64 rng(config.seed + 1000 * level);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        double ascent_best = -std::numeric_limits<double>::infinity();
        for (int s = 0; s < config.starts && !capped; ++s) {
            Field v(n);
            for (auto& x : v) x = dist(rng);
            v = ops.zero_mean(v);
            double f = objective(v);
            for (int it = 0; it < config.iterations; ++it) {
                Field g = ops.zero_mean(grad(v).cwiseQuotient(ops.mass));
                double gnorm2 = ops.dot(g, g);
                if (gnorm2 < 1e-18) break;
                double step = 1.0;
                bool moved = false;
                for (int bt = 0; bt < 40; ++bt) {
                    Field vn = ops.zero_mean(v + step * g);
                    double fn = objective(vn);
                    if (fn > f + 1e-4 * step * gnorm2) {
                        v = vn;
                        f = fn;
                        moved = true;
                        break;
                    }
                    step *= 0.5;
                }
                if (f > config.cap) {
                    capped = true;
                    break;
                }
                if (!moved) break;
            }
            ascent_best = std::max(ascent_best, f);
        }
        rep.level_h.push_back(ops.mean_edge);
        rep.max_value.push_back(std::min(bubble_best, config.cap));
        rep.ascent_max.push_back(std::min(ascent_best, config.cap));
        rep.capped.push_back(capped);
        rep.divergent = rep.divergent || capped;
        logs.push_back(std::log(1.0 / ops.mean_edge));
    }
    if (rep.max_value.size() >= 2) {
        LineFit f = fit_line(logs, rep.max_value);
        rep.slope = f.slope;
        if (f.slope > 0.5) rep.divergent = true;
    }
    return rep;
}

}  // namespace liouville
