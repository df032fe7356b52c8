#include "liouville/solvers.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "liouville/errors.hpp"

namespace liouville {

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return buf;
}

// Bordered solver for the zero-mean Newton system. The Hessian is
// B + lambda mu mu' with B = L - lambda diag(mu) (+ tau diag(mass)); the
// rank-one term is folded in by Sherman-Morrison on the constrained solve.
class NewtonSystem {
public:
    NewtonSystem(const ProblemData& data) : data_(data) {}

    void factorize(const Field& mu, double tau) {
        const auto& ops = data_.ops();
        const int n = static_cast<int>(ops.mass.size());
        std::vector<Eigen::Triplet<double>> trip;
        const auto& L = ops.stiffness;
        trip.reserve(L.nonZeros() + 3 * n);
        for (int k = 0; k < L.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(L, k); it; ++it)
                trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
        for (int i = 0; i < n; ++i) {
            double d = -data_.lambda * mu[i] + tau * ops.mass[i];
            if (d != 0.0) trip.emplace_back(i, i, d);
            trip.emplace_back(i, n, ops.mass[i]);
            trip.emplace_back(n, i, ops.mass[i]);
        }
        Eigen::SparseMatrix<double> K(n + 1, n + 1);
        K.setFromTriplets(trip.begin(), trip.end());
        lu_.compute(K);
        ok_ = lu_.info() == Eigen::Success;
        mu_ = mu;
    }

    bool ok() const { return ok_; }

    // solves (B + lambda mu mu') x = rhs on the zero-mean subspace
    Field solve(const Field& rhs) const {
        Field x = solve_bordered(rhs);
        if (std::abs(data_.lambda) < 1e-300) return x;
        Field y = solve_bordered(mu_);
        double denom = 1.0 + data_.lambda * mu_.dot(y);
        if (std::abs(denom) < 1e-12) throw SolverError("Newton system nearly singular");
        return x - (data_.lambda * mu_.dot(x) / denom) * y;
    }

private:
    Field solve_bordered(const Field& rhs) const {
        const int n = static_cast<int>(rhs.size());
        Eigen::VectorXd b(n + 1);
        b.head(n) = rhs;
        b[n] = 0.0;
        Eigen::VectorXd sol = lu_.solve(b);
        if (lu_.info() != Eigen::Success) throw SolverError("Newton bordered solve failed");
        return sol.head(n);
    }

    const ProblemData& data_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
    Field mu_;
    bool ok_ = false;
};

// deflation factor m(v) = prod_k (1 / d_k^2 + 1) and its step correction
struct Deflation {
    const std::vector<Field>* known = nullptr;
    const FemOperators* ops = nullptr;

    bool active() const { return known && !known->empty(); }

    double factor(const Field& v) const {
        if (!active()) return 1.0;
        double m = 1.0;
        for (const auto& w : *known) {
            double d = relative_distance(*ops, v, w);
            m *= 1.0 / std::max(d * d, 1e-30) + 1.0;
        }
        return m;
    }

    // Farrell step scaling: delta_deflated = m / (m - grad(m) . delta) * delta
    double step_scale(const Field& v, const Field& delta) const {
        if (!active()) return 1.0;
        double m = factor(v);
        double gd = 0.0;
        for (const auto& w : *known) {
            double c = std::max({1.0, ops->norm(w)});
            double d2 = std::max((v - w).dot(ops->mass.cwiseProduct(v - w)) / (c * c), 1e-30);
            double mk = 1.0 / d2 + 1.0;
            // d(m_k)/dv . delta
            double dd2 = 2.0 * (v - w).dot(ops->mass.cwiseProduct(delta)) / (c * c);
            gd += (m / mk) * (-1.0 / (d2 * d2)) * dd2;
        }
        double denom = m - gd;
        if (denom <= 1e-12 * m) return 1e3;
        return std::min(m / denom, 1e3);
    }
};

}  // namespace

std::string solve_status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::Converged: return "converged";
        case SolveStatus::IterationCap: return "iteration_cap";
        default: return "non_coercive";
    }
}

std::string continuation_status_name(ContinuationStatus s) {
    switch (s) {
        case ContinuationStatus::ReachedEnd: return "reached_end";
        case ContinuationStatus::BlowUp: return "blow_up";
        default: return "step_floor";
    }
}

double relative_distance(const FemOperators& ops, const Field& a, const Field& b) {
    double scale = std::max({1.0, ops.norm(a), ops.norm(b)});
    return ops.norm(a - b) / scale;
}

SolveReport damped_newton(const ProblemData& data, const Field& init,
                          const std::vector<Field>& deflated, NewtonOptions opts) {
    const auto& ops = data.ops();
    Deflation defl{&deflated, &ops};
    SolveReport rep;
    rep.lambda = data.lambda;
    rep.strategy = deflated.empty() ? "newton" : "newton+deflation";

    Field v = ops.zero_mean(init);
    NewtonSystem sys(data);

    double res = residual(data, v);
    double merit = defl.factor(v) * res;
    for (int it = 0; it < opts.max_iterations; ++it) {
        rep.trace.emplace_back(it, res);
        if (res <= opts.tol) {
            rep.status = SolveStatus::Converged;
            rep.v = v;
            rep.iterations = it;
            rep.residual_norm = res;
            rep.J_value = functional(data, v);
            rep.max_v = v.maxCoeff();
            return rep;
        }

        Field mu = density_masses(data, v);
        Field g = gradient(data, v);
        bool advanced = false;
        double tau = 0.0;
        for (int reg = 0; reg < 6 && !advanced; ++reg) {
            sys.factorize(mu, tau);
            if (sys.ok()) {
                Field delta;
                bool solved = true;
                try {
                    delta = sys.solve(-g);
                } catch (const SolverError&) {
                    solved = false;
                }
                if (solved) {
                    delta = ops.zero_mean(delta);
                    double dn = ops.norm(delta);
                    if (dn > opts.trust_radius) delta *= opts.trust_radius / dn;
                    delta *= defl.step_scale(v, delta);

                    double t = 1.0;
                    for (int bt = 0; bt < 30; ++bt) {
                        Field vn = ops.zero_mean(v + t * delta);
                        double rn = residual(data, vn);
                        double mn = defl.factor(vn) * rn;
                        if (mn <= (1.0 - 1e-4 * t) * merit) {
                            v = vn;
                            res = rn;
                            merit = mn;
                            advanced = true;
                            break;
                        }
                        t *= 0.5;
                    }
                }
            }
            tau = tau == 0.0 ? 1e-6 : tau * 100.0;
        }
        if (!advanced) break;  // regularization exhausted
    }
    rep.status = SolveStatus::IterationCap;
    rep.v = v;
    rep.iterations = opts.max_iterations;
    rep.residual_norm = res;
    rep.J_value = functional(data, v);
    rep.max_v = v.maxCoeff();
    return rep;
}

SolveReport minimize(const ProblemData& data, const Field& init, MinimizeOptions opts) {
    const auto& ops = data.ops();
    SolveReport rep;
    rep.lambda = data.lambda;
    rep.strategy = "min";

    Field v = ops.zero_mean(init);
    double J = functional(data, v);
    NewtonSystem sys(data);
    // descent Newton (shifted until the step descends) once the gradient is
    // small or plain descent stops making headway
    bool newton_phase = false;
    const int gd_budget = std::max(200, opts.max_iterations / 10);
    double gd_step = 1.0;

    auto finish = [&](SolveStatus status, int it) {
        rep.status = status;
        rep.v = v;
        rep.iterations = it;
        rep.residual_norm = residual(data, v);
        rep.J_value = J;
        rep.max_v = v.maxCoeff();
        return rep;
    };

    for (int it = 0; it < opts.max_iterations; ++it) {
        Field g = gradient(data, v);
        Field gf = ops.zero_mean(Field(g.cwiseQuotient(ops.mass)));
        double res = std::sqrt(ops.dot(gf, gf));
        rep.trace.emplace_back(it, res);
        if (res <= opts.tol) return finish(SolveStatus::Converged, it);
        if (J < opts.unbounded_threshold) return finish(SolveStatus::NonCoercive, it);
        if (!newton_phase && (res <= opts.newton_switch || it >= gd_budget)) newton_phase = true;

        bool stepped = false;
        if (newton_phase) {
            Field mu = density_masses(data, v);
            for (double tau : {0.0, 1e-8, 1e-6, 1e-4, 1e-2, 1.0, 1e2}) {
                sys.factorize(mu, tau);
                if (!sys.ok()) continue;
                Field delta;
                try {
                    delta = ops.zero_mean(sys.solve(-g));
                } catch (const SolverError&) {
                    continue;
                }
                double dn = ops.norm(delta);
                if (dn > 100.0) delta *= 100.0 / dn;
                double slope = g.dot(delta);
                if (!(slope < 0)) continue;
                double t = 1.0;
                for (int bt = 0; bt < 30; ++bt) {
                    Field vn = ops.zero_mean(v + t * delta);
                    double Jn = functional(data, vn);
                    if (Jn <= J + 1e-4 * t * slope) {
                        v = vn;
                        J = Jn;
                        stepped = true;
                        break;
                    }
                    t *= 0.5;
                }
                if (stepped) break;
            }
        }
        if (!stepped) {
            double slope = -res * res;
            for (int bt = 0; bt < 40; ++bt) {
                Field vn = ops.zero_mean(v - gd_step * gf);
                double Jn = functional(data, vn);
                if (Jn <= J + 1e-4 * gd_step * slope) {
                    v = vn;
                    J = Jn;
                    gd_step = std::min(gd_step * 2.0, 1e4);
                    stepped = true;
                    break;
                }
                gd_step *= 0.5;
            }
        }
        if (!stepped) return finish(SolveStatus::IterationCap, it);
    }
    return finish(SolveStatus::IterationCap, opts.max_iterations);
}

MinmaxResult solve_minmax(const ProblemData& data, int k, MinmaxGrid grid, NewtonOptions opts) {
    const double lambda = data.lambda;
    if (!(lambda > 4 * kPi * k && lambda < 4 * kPi * (k + 1)))
        throw PreconditionError("lambda = " + fmt(lambda) + " outside the window (4 pi k, 4 pi (k+1)) for k = " +
                                std::to_string(k));
    CriticalSpectrum spec = critical_values(data.setup->cones, lambda + 8 * kPi);
    auto [nearest, dist] = spec.nearest(lambda);
    if (dist < 1e-6)
        throw PreconditionError("lambda = " + fmt(lambda) + " within the guard band of the critical value " +
                                fmt(nearest));

    std::mt19937_64 rng(grid.seed);
    std::uniform_real_distribution<double> jit(0.0, 1.0);

    MinmaxResult result;
    std::vector<Field> known;
    int index = 0;
    for (int rot = 0; rot < grid.rotations; ++rot) {
        double offset = (rot + grid.jitter * jit(rng)) / grid.rotations;
        for (double Lambda : grid.Lambdas) {
            StartTrace trace;
            trace.grid_index = index++;
            trace.Lambda = Lambda;
            trace.offset = offset;

            auto points = boundary_positions(data.mesh(), grid.boundary_label, k, offset * k);
            BarycenterConfig sigma = uniform_barycenter(points);
            Field v0 = bubble_field(data, sigma, Lambda);
            SolveReport rep = damped_newton(data, v0, known, opts);
            trace.status = rep.status;
            trace.iterations = rep.iterations;
            trace.final_residual = rep.residual_norm;

            if (rep.status == SolveStatus::Converged) {
                bool dup = false;
                for (size_t s = 0; s < known.size(); ++s)
                    if (relative_distance(data.ops(), rep.v, known[s]) <= opts.distinct_tol) {
                        dup = true;
                        trace.duplicate = true;
                        trace.solution_index = static_cast<int>(s);
                        break;
                    }
                if (!dup) {
                    rep.strategy = "minmax";
                    rep.grid_index = trace.grid_index;
                    trace.solution_index = static_cast<int>(result.solutions.size());
                    known.push_back(rep.v);
                    result.solutions.push_back(std::move(rep));
                }
            }
            result.traces.push_back(std::move(trace));
        }
    }
    return result;
}

namespace {

// Deterministic broad probe direction: a mild bump at the lowest-index vertex
// of the first boundary loop, zero-mean and unit mass norm. Generic overlap
// with the soft symmetry-breaking modes.
Field probe_direction(const ProblemData& data) {
    const auto& ops = data.ops();
    const SurfaceMesh& mesh = data.mesh();
    int anchor = *std::min_element(mesh.boundary_loops[0].begin(), mesh.boundary_loops[0].end());
    Field d = geodesic_distance(mesh, MeshPoint::vertex(anchor));
    Field bump(mesh.vertex_count());
    for (int i = 0; i < mesh.vertex_count(); ++i) bump[i] = -2.0 * std::log1p(4.0 * d[i] * d[i]);
    bump = ops.zero_mean(bump);
    return bump / ops.norm(bump);
}

// Smallest eigenvalue of the projected Hessian in the mass metric via shifted
// inverse power iteration on the bordered Newton solver.
double smallest_hessian_eigen(const ProblemData& data, const Field& v, Field* mode_out) {
    const auto& ops = data.ops();
    Field mu = density_masses(data, v);
    NewtonSystem sys(data);
    double sigma = 1.0;
    for (int attempt = 0; attempt < 3; ++attempt, sigma *= 3.7) {
        sys.factorize(mu, sigma);
        if (!sys.ok()) continue;
        Field x = probe_direction(data);
        try {
            for (int it = 0; it < 25; ++it) {
                Field y = ops.zero_mean(sys.solve(ops.mass.cwiseProduct(x)));
                double n = ops.norm(y);
                if (n < 1e-300) return 0.0;
                x = y / n;
            }
        } catch (const SolverError&) {
            continue;
        }
        if (mode_out) *mode_out = x;
        return x.dot(hessian_apply(data, v, x));
    }
    return 0.0;
}

}  // namespace

ContinuationResult continuation(const ProblemData& data, double lambda_start, double lambda_end,
                                ContinuationPolicy policy) {
    const auto& ops = data.ops();
    ContinuationResult result;

    double span = std::abs(lambda_end - lambda_start);
    double dir = lambda_end >= lambda_start ? 1.0 : -1.0;
    double step = policy.initial_step > 0 ? policy.initial_step : std::max(span / 20.0, 1e-12);
    double max_step = policy.max_step > 0 ? policy.max_step : std::max(span / 4.0, step);

    auto solve_at = [&](double lambda, const Field& predictor, bool fresh) -> SolveReport {
        ProblemData d = data.with_lambda(lambda);
        SolveReport rep;
        if (fresh) {
            MinimizeOptions mo;
            mo.tol = policy.tol;
            rep = minimize(d, predictor, mo);
        } else {
            NewtonOptions no;
            no.tol = policy.tol;
            rep = damped_newton(d, predictor, {}, no);
        }
        if (rep.status == SolveStatus::Converged && policy.track_minimum) {
            Field mode;
            double theta = smallest_hessian_eigen(d, rep.v, &mode);
            if (theta < -1e-8) {
                // unstable point: line probe along the negative direction, then
                // descend to the stable branch
                const auto& o = d.ops();
                double bestJ = rep.J_value;
                Field best = rep.v;
                for (double t : {0.01, 0.03, 0.1, 0.3, 1.0, 3.0})
                    for (double s : {1.0, -1.0}) {
                        Field w = o.zero_mean(rep.v + s * t * mode);
                        double Jw = functional(d, w);
                        if (Jw < bestJ - 1e-12 * (1.0 + std::abs(bestJ))) {
                            bestJ = Jw;
                            best = w;
                        }
                    }
                if (bestJ < rep.J_value) {
                    MinimizeOptions mo;
                    mo.tol = policy.tol;
                    SolveReport down = minimize(d, best, mo);
                    if (down.status == SolveStatus::Converged && down.J_value < rep.J_value) {
                        down.strategy = rep.strategy + "+descent";
                        rep = down;
                    }
                }
            }
        }
        return rep;
    };

    auto blown_up = [&](const SolveReport& rep, const MassReport& masses) {
        if (rep.max_v > policy.blowup_max_v) return true;
        for (const auto& p : masses.peaks)
            if (p.mass > policy.blowup_mass_fraction * rep.lambda) return true;
        return false;
    };

    // first point
    Field start = policy.init.size() == ops.mass.size() ? policy.init
                                                        : Field(Field::Zero(ops.mass.size()));
    SolveReport first = solve_at(lambda_start, start, policy.track_minimum);
    first.strategy = "continue:" + first.strategy;
    if (first.status != SolveStatus::Converged)
        throw PreconditionError("continuation start at lambda = " + fmt(lambda_start) +
                                " not solvable from the given initialization");
    MassReport first_mass =
        mass_spectrum(data.with_lambda(lambda_start), first.v, policy.mass_radius);
    bool stop = blown_up(first, first_mass);
    result.steps.push_back({std::move(first), std::move(first_mass)});
    if (stop) {
        result.status = ContinuationStatus::BlowUp;
        return result;
    }
    if (lambda_start == lambda_end) {
        result.status = ContinuationStatus::ReachedEnd;
        return result;
    }

    double lambda = lambda_start;
    for (int it = 0; it < policy.max_steps; ++it) {
        if (std::abs(lambda - lambda_end) < 1e-14) {
            result.status = ContinuationStatus::ReachedEnd;
            return result;
        }
        double next = lambda + dir * std::min(step, std::abs(lambda_end - lambda));
        if (dir * (next - lambda_end) > 0) next = lambda_end;

        // secant predictor when two accepted points exist
        const Field& vk = result.steps.back().report.v;
        Field predictor = vk;
        if (result.steps.size() >= 2) {
            const auto& prev = result.steps[result.steps.size() - 2].report;
            double dl = result.steps.back().report.lambda - prev.lambda;
            if (std::abs(dl) > 1e-14)
                predictor = vk + (next - result.steps.back().report.lambda) / dl * (vk - prev.v);
        }

        SolveReport rep = solve_at(next, predictor, policy.track_minimum);
        if (rep.status != SolveStatus::Converged) {
            step *= 0.5;
            if (step < policy.min_step) {
                result.status = ContinuationStatus::StepFloor;
                return result;
            }
            continue;
        }
        rep.strategy = "continue:" + rep.strategy;
        MassReport masses = mass_spectrum(data.with_lambda(next), rep.v, policy.mass_radius);
        bool blow = blown_up(rep, masses);
        lambda = next;
        step = std::min(step * 1.5, max_step);
        result.steps.push_back({std::move(rep), std::move(masses)});
        if (blow) {
            result.status = ContinuationStatus::BlowUp;
            return result;
        }
    }
    result.status = ContinuationStatus::StepFloor;
    return result;
}

}  // namespace liouville
