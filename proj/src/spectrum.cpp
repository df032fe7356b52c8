#include "liouville/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "liouville/errors.hpp"

namespace liouville {

namespace {
constexpr double kPi = std::numbers::pi;
// dedup tolerance, absolute on value / pi
constexpr double kTolOverPi = 1e-12;
}  // namespace

double trudinger_constant(const ConeSet& cones) {
    double m = 0.0;
    for (const auto& c : cones.entries) m = std::min(m, c.alpha);
    return 1.0 + m;
}

double singular_euler(const SurfaceMesh& mesh, const ConeSet& cones) {
    return euler_characteristic(mesh) + cones.order_sum();
}

std::string criticality_name(Criticality c) {
    switch (c) {
        case Criticality::Subcritical: return "subcritical";
        case Criticality::Critical: return "critical";
        default: return "supercritical";
    }
}

Criticality classify(const SurfaceMesh& mesh, const ConeSet& cones) {
    double chi = singular_euler(mesh, cones);
    double tau = trudinger_constant(cones);
    if (chi < tau - 1e-12) return Criticality::Subcritical;
    if (chi > tau + 1e-12) return Criticality::Supercritical;
    return Criticality::Critical;
}

CriticalSpectrum critical_values(const ConeSet& cones, double lambda_max) {
    if (lambda_max < 0) throw PreconditionError("lambda_max must be nonnegative");
    const int N = static_cast<int>(cones.entries.size());
    if (N > 24) throw PreconditionError("subset enumeration limited to 24 cones");

    struct Raw {
        double value;
        int n;
        std::uint32_t mask;
    };
    std::vector<Raw> raw;
    for (std::uint32_t mask = 0; mask < (1u << N); ++mask) {
        double s = 0;
        for (int j = 0; j < N; ++j)
            if (mask & (1u << j)) s += 8.0 * kPi * (1.0 + cones.entries[j].alpha);
        if (s > lambda_max + kTolOverPi * kPi) continue;
        for (int n = 0;; ++n) {
            double v = 4.0 * kPi * n + s;
            if (v > lambda_max + kTolOverPi * kPi) break;
            raw.push_back({v, n, mask});
        }
    }
    std::sort(raw.begin(), raw.end(), [](const Raw& a, const Raw& b) {
        if (a.value != b.value) return a.value < b.value;
        if (a.n != b.n) return a.n < b.n;
        return a.mask < b.mask;
    });

    CriticalSpectrum spec;
    for (const auto& r : raw) {
        std::vector<int> subset;
        for (int j = 0; j < N; ++j)
            if (r.mask & (1u << j)) subset.push_back(j);
        if (!spec.entries.empty() &&
            std::abs(r.value - spec.entries.back().value) / kPi <= kTolOverPi) {
            spec.entries.back().provenance.push_back({r.n, std::move(subset)});
        } else {
            spec.entries.push_back({r.value, {{r.n, std::move(subset)}}});
        }
    }
    return spec;
}

std::pair<double, double> CriticalSpectrum::nearest(double lambda) const {
    if (entries.empty()) throw PreconditionError("empty spectrum");
    double best = entries.front().value;
    for (const auto& e : entries)
        if (std::abs(e.value - lambda) < std::abs(best - lambda)) best = e.value;
    return {best, std::abs(best - lambda)};
}

ApplicabilityReport theorem_applicability(const SurfaceMesh& mesh, const ConeSet& cones,
                                          double lambda) {
    ApplicabilityReport rep;
    rep.lambda = lambda;
    rep.orders_ok = cones.all_at_least_minus_half();
    rep.boundary_ok = mesh.boundary_loop_count() >= 2;
    rep.supercritical = classify(mesh, cones) == Criticality::Supercritical;
    // enumerate far enough to bracket lambda
    CriticalSpectrum spec = critical_values(cones, std::max(lambda, 0.0) + 8.0 * kPi);
    auto [val, dist] = spec.nearest(lambda);
    rep.nearest_critical = val;
    rep.distance = dist;
    rep.lambda_ok = dist > kTolOverPi * kPi;
    rep.applicable = rep.orders_ok && rep.boundary_ok && rep.supercritical && rep.lambda_ok;
    return rep;
}

}  // namespace liouville
