#pragma once

#include <vector>

#include "liouville/fem.hpp"

namespace liouville {

enum class GreenMode { Split, DiscreteDelta };

// Neumann Green's function with pole p: -dG = delta_p - 1/|M|, dG/dnu = 0,
// integral zero. In split mode G = -(1/2pi) * eta(d) * log d + H with H the
// regular field and eta a cubic cutoff supported inside cutoff_radius; the
// vertex value at the pole is +inf. In discrete-delta mode the point mass is
// lumped and G is the plain solve (finite everywhere, singularity smeared).
struct GreenFunction {
    int pole = -1;
    GreenMode mode = GreenMode::Split;
    double singular_coefficient = 0.0;  // -1/(2*pi) in split mode
    double cutoff_radius = 0.0;
    Field regular_part;    // H (split) or the full solve (discrete delta)
    Field values;          // vertex-sampled G
    Field pole_distance;   // d(., pole)

    // smoothstep from 1 below half the cutoff to 0 at the cutoff
    double eta(double d) const;
    double singular_part(double d) const;
};

GreenFunction compute_green(const SurfaceMesh& mesh, const FemOperators& ops, int pole,
                            GreenMode mode = GreenMode::Split, double cutoff_scale = 5.0);

// Integral of G under the quadrature convention used for its normalization
// (exact log quadrature over the pole star, lumped elsewhere).
double green_integral(const SurfaceMesh& mesh, const FemOperators& ops, const GreenFunction& g);

// Desingularized curvature weight 2K exp(-4pi sum_j alpha_j G_j). Vertex values
// can be 0 or +inf at cone vertices; all integration goes through the quad
// weights omega_i = integral of phi_i K_alpha, which are finite for every
// alpha > -1 (graded quadrature with the exact d^(2 alpha) factor near cones).
struct SingularWeight {
    Field values;
    Eigen::VectorXd quad;
    std::vector<Cone> cones;
    double total = 0.0;
};

SingularWeight singular_weight(const SurfaceMesh& mesh, const FemOperators& ops, const Field& K,
                               const ConeSet& cones, const std::vector<GreenFunction>& greens,
                               int quad_depth = 3);

// log of sum_i quad_i * exp(v_i), max-shifted.
double log_weighted_mass(const SingularWeight& w, const Field& v);

}  // namespace liouville
