#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "liouville/mesh.hpp"

namespace liouville {

// Critical values 4 pi n + 8 pi sum_{j in J} (1 + alpha_j), deduplicated with
// all generating (n, J) pairs retained.
struct CriticalSpectrum {
    struct Provenance {
        int n;
        std::vector<int> subset;  // sorted cone indices in J
    };
    struct Entry {
        double value;
        std::vector<Provenance> provenance;
    };
    std::vector<Entry> entries;  // sorted ascending

    // nearest critical value and |lambda - value|
    std::pair<double, double> nearest(double lambda) const;
};

// tau(M, alpha) = 1 + min_j min(alpha_j, 0); 1 for an empty cone set.
double trudinger_constant(const ConeSet& cones);

// chi(M, alpha) = chi(M) + sum alpha_j.
double singular_euler(const SurfaceMesh& mesh, const ConeSet& cones);

enum class Criticality { Subcritical, Critical, Supercritical };
std::string criticality_name(Criticality c);

// Three-way comparison of chi(M, alpha) against tau(M, alpha), tolerance 1e-12.
Criticality classify(const SurfaceMesh& mesh, const ConeSet& cones);

// Exhaustive subset enumeration, at most 24 cones.
CriticalSpectrum critical_values(const ConeSet& cones, double lambda_max);

struct ApplicabilityReport {
    bool orders_ok = false;       // every alpha_j >= -1/2
    bool boundary_ok = false;     // at least two boundary components
    bool supercritical = false;
    double lambda = 0.0;
    double nearest_critical = 0.0;
    double distance = 0.0;        // |lambda - nearest critical value|
    bool lambda_ok = false;       // lambda off the critical set
    bool applicable = false;
};

// Existence-theorem hypotheses for the supercritical regime at the given lambda.
ApplicabilityReport theorem_applicability(const SurfaceMesh& mesh, const ConeSet& cones,
                                          double lambda);

}  // namespace liouville
