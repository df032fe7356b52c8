#pragma once

#include <cstdint>
#include <optional>

#include "liouville/functional.hpp"

namespace liouville {

// Formal barycenter: at most `order` weighted points on the closed surface.
struct BarycenterConfig {
    struct Atom {
        double weight;
        MeshPoint point;
    };
    std::vector<Atom> atoms;
    int order = 0;

    // weights renormalized to sum one (scaling then renormalizing is identity)
    BarycenterConfig normalized() const;
    void validate(const SurfaceMesh& mesh) const;
};

// `count` arc-equispaced points along a boundary loop, optionally offset by a
// fraction of the spacing.
std::vector<MeshPoint> boundary_positions(const SurfaceMesh& mesh, int loop_label, int count,
                                          double offset01 = 0.0);

BarycenterConfig uniform_barycenter(const std::vector<MeshPoint>& points);

// phi(y) = log sum_i t_i (Lambda / (1 + Lambda^2 d(y, q_i)^2))^2, returned as
// the zero-mean representative, log-sum-exp stabilized. Lambda >= 1.
Field bubble_field(const ProblemData& data, const BarycenterConfig& sigma, double Lambda);

// Dirichlet energy, log curvature mass and J along a Lambda sweep, with
// least-squares slopes against log Lambda. On generated parametric surfaces
// the integrals are evaluated by analytic polar quadrature around the atoms
// (resolving scales ~1/Lambda far below the mesh size); otherwise the sampled
// field is used, which is only meaningful for Lambda up to ~1/h.
struct BubbleSlopes {
    std::vector<double> Lambda;
    std::vector<double> dirichlet;
    std::vector<double> log_mass;
    std::vector<double> J;
    double dirichlet_slope = 0, mass_slope = 0, J_slope = 0;
    double dirichlet_fit_rms = 0, mass_fit_rms = 0, J_fit_rms = 0;
    bool analytic = false;
};
BubbleSlopes bubble_energy_report(const ProblemData& data, const BarycenterConfig& sigma,
                                  const std::vector<double>& Lambda_list);

// Greedy ball capture: repeatedly takes the vertex whose r-ball holds the most
// remaining mass. rho is a density with unit lumped integral; uncaptured gets
// the mass outside all selected balls.
BarycenterConfig barycenter_project(const ProblemData& data, const Field& rho, int k, double r,
                                    double* uncaptured = nullptr);

// Moves every atom to its nearest point on the target boundary loop (geodesic
// distance, candidates are the loop vertices, ties to the lowest index);
// weights unchanged; idempotent.
BarycenterConfig boundary_pushforward(const SurfaceMesh& mesh, const BarycenterConfig& sigma,
                                      int component_label);

// Local maxima of the mean-field density above a prominence threshold, each
// credited with lambda x (density mass in its r-ball, disjoint accounting),
// matched against the blow-up quanta 8pi(1+alpha_j) / 8pi / 4pi.
struct MassPeak {
    int vertex = -1;
    bool on_boundary = false;
    int cone_index = -1;  // >= 0 when the peak sits on a cone vertex
    double mass = 0.0;
    double reference = 0.0;
    std::string reference_class;  // "cone" | "interior" | "boundary"
    double relative_gap = 0.0;
};
struct MassReport {
    double lambda = 0.0;
    double ball_radius = 0.0;
    std::vector<MassPeak> peaks;
    double captured = 0.0;  // sum of peak masses
};
MassReport mass_spectrum(const ProblemData& data, const Field& v, double r,
                         double prominence = 5.0);

// Empirical boundedness probe for localized Moser-Trudinger constants:
// maximizes c log int_Omega K_alpha e^v - 1/2 int_{Omega~} |grad v|^2
// - eps int_M |grad v|^2 by seeded multi-start gradient ascent per refinement
// level and classifies the growth of the maxima against log(1/h).
struct MtProbeConfig {
    Shape shape = Shape::Cylinder;
    Eigen::Vector3d region_center{1.0, 0.0, 0.0};
    double region_radius = 0.4;
    double collar = 0.2;  // delta
    double constant = 0.0;
    double epsilon = 0.05;
    std::vector<int> levels{3, 4, 5};
    int starts = 4;
    int iterations = 400;
    std::uint64_t seed = 1;
    double cap = 1e4;
};
// Raw ascent maxima are dominated by single-vertex spikes whose discrete value
// shrinks like -2c log(1/h); they are reported but excluded from the growth
// classification, which fits the scale-resolved bubble-family maxima instead.
struct MtProbeReport {
    std::vector<double> level_h;
    std::vector<double> max_value;    // bubble-family maxima, scale-resolved
    std::vector<double> ascent_max;   // multi-start gradient ascent maxima
    std::vector<char> capped;
    double slope = 0.0;  // of max_value against log(1/h)
    bool divergent = false;
};
MtProbeReport mt_probe(const MtProbeConfig& config);

}  // namespace liouville
