#pragma once

#include <memory>

#include "liouville/green.hpp"

namespace liouville {

// Immutable problem geometry shared across lambda values and solver runs.
struct ProblemSetup {
    SurfaceMesh mesh;
    FemOperators ops;
    Field K;
    ConeSet cones;
    std::vector<GreenFunction> greens;
    SingularWeight weight;
    GreenMode mode = GreenMode::Split;
};

struct ProblemData {
    std::shared_ptr<const ProblemSetup> setup;
    double lambda = 0.0;

    const SurfaceMesh& mesh() const { return setup->mesh; }
    const FemOperators& ops() const { return setup->ops; }
    const SingularWeight& weight() const { return setup->weight; }
    ProblemData with_lambda(double l) const { return {setup, l}; }
};

ProblemData make_problem(SurfaceMesh mesh, const Field& K, const std::vector<Cone>& cones,
                         double lambda, GreenMode mode = GreenMode::Split);

// 4*pi*(chi(M) + sum alpha_j), the Gauss-Bonnet value of lambda.
double geometric_lambda(const SurfaceMesh& mesh, const ConeSet& cones);

// J(v) = 1/2 v'Lv - lambda log(sum omega_i e^(v_i)); expects the zero-mean
// representative, log-sum-exp stabilized. Rejects non-finite input.
double functional(const ProblemData& data, const Field& v);

// Integrated mean-field density per vertex: mu_i = omega_i e^(v_i) / sum, sums to one.
Field density_masses(const ProblemData& data, const Field& v);

// Weak-form gradient Lv - lambda (mu - mass/|M|); vanishes exactly at discrete
// solutions of the mean-field equation.
Field gradient(const ProblemData& data, const Field& v);
// Mass-inverse Riesz representative of the gradient, zero-mean.
Field gradient_field(const ProblemData& data, const Field& v);

// Weak-form second variation applied to w.
Field hessian_apply(const ProblemData& data, const Field& v, const Field& w);

// Mass-weighted L2 norm of the pointwise defect of -dv + lambda/|M| = lambda rho_v.
double residual(const ProblemData& data, const Field& v);

// Additive normalization making int K_alpha e^(v+c) = lambda exactly, then
// u = v + c - 4 pi sum alpha_j G_j. Requires lambda > 0.
struct MetricResult {
    Field u;
    Field conformal_factor;  // e^u
    double shift;            // the constant c
};
MetricResult to_metric(const ProblemData& data, const Field& v);

// Discrete Gaussian curvature of e^u g0 via angle defect over lumped area on
// the conformally rescaled mesh; boundary vertices get zero.
Field conformal_curvature(const SurfaceMesh& mesh, const Field& u);

// Comparison of the realized curvature against the prescribed K, excluding
// 3-ring neighborhoods of cones (and boundary vertices, which carry no angle
// defect information).
struct CurvatureReport {
    Field curvature;
    std::vector<char> compared;
    double max_abs_dev = 0.0;
    double mean_abs_dev = 0.0;
    int compared_count = 0;
};
CurvatureReport curvature_check(const SurfaceMesh& mesh, const ConeSet& cones, const Field& u,
                                const Field& K);

// Residuals of -du + 2K0 = 2K e^u in the interior and du/dnu + 2h0 = 2h e^(u/2)
// on the boundary (weak flux recovery), for constant K0, K, h0, h.
struct EquationDefect {
    double interior_l2 = 0.0;
    double boundary_l2 = 0.0;
};
EquationDefect liouville_defect(const SurfaceMesh& mesh, const FemOperators& ops, const Field& u,
                                double K0, double K, double h0, double h);

}  // namespace liouville
