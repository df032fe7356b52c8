#pragma once

#include <cstdint>

#include "liouville/bubbles.hpp"
#include "liouville/spectrum.hpp"

namespace liouville {

enum class SolveStatus { Converged, IterationCap, NonCoercive };
std::string solve_status_name(SolveStatus s);

struct SolveReport {
    double lambda = 0.0;
    Field v;
    double J_value = 0.0;
    double residual_norm = 0.0;
    int iterations = 0;
    std::string strategy;
    SolveStatus status = SolveStatus::IterationCap;
    double max_v = 0.0;
    int grid_index = -1;  // which min-max start produced this solution
    std::vector<std::pair<int, double>> trace;  // (iteration, residual)
};

// Armijo gradient descent on J switching to damped Newton once the gradient
// norm falls below 1e-3; detects non-coercive runs by unbounded descent.
struct MinimizeOptions {
    double tol = 1e-8;
    int max_iterations = 5000;
    double unbounded_threshold = -1e8;
    double newton_switch = 1e-3;
};
SolveReport minimize(const ProblemData& data, const Field& init, MinimizeOptions opts = {});

// Damped Newton on the gradient with optional deflation against previously
// found solutions (line search on the deflated residual, mass-shift
// regularization when the step fails).
struct NewtonOptions {
    double tol = 1e-6;
    int max_iterations = 300;
    double trust_radius = 100.0;
    double distinct_tol = 1e-3;  // relative field distance
};
SolveReport damped_newton(const ProblemData& data, const Field& init,
                          const std::vector<Field>& deflated, NewtonOptions opts = {});

// relative field distance used for deflation and distinctness
double relative_distance(const FemOperators& ops, const Field& a, const Field& b);

// Min-max search: bubble initializations on a boundary-component grid, deflated
// Newton per start, all distinct converged solutions returned. An empty result
// is a structured failure, not an exception.
struct MinmaxGrid {
    int rotations = 8;
    std::vector<double> Lambdas{10.0, 100.0, 1000.0};
    int boundary_label = 1;
    double jitter = 0.0;  // fraction of the grid spacing, seeded
    std::uint64_t seed = 0;
};
struct StartTrace {
    int grid_index = -1;
    double Lambda = 0.0;
    double offset = 0.0;
    SolveStatus status = SolveStatus::IterationCap;
    int iterations = 0;
    double final_residual = 0.0;
    bool duplicate = false;
    int solution_index = -1;  // into MinmaxResult::solutions
};
struct MinmaxResult {
    std::vector<SolveReport> solutions;
    std::vector<StartTrace> traces;
};
MinmaxResult solve_minmax(const ProblemData& data, int k, MinmaxGrid grid = {},
                          NewtonOptions opts = {});

// Predictor-corrector continuation in lambda with adaptive step halving,
// per-step mass spectra and blow-up detection. In track-minimum mode every
// accepted point is probed for second-order stability with a deterministic
// boundary bump and re-minimized when it escapes (follows the minimizer
// branch through symmetry-breaking bifurcations).
enum class ContinuationStatus { ReachedEnd, BlowUp, StepFloor };
std::string continuation_status_name(ContinuationStatus s);

struct ContinuationPolicy {
    double initial_step = 0.0;  // 0: |end - start| / 20
    double min_step = 1e-5;
    double max_step = 0.0;  // 0: |end - start| / 4
    double tol = 1e-8;
    int max_steps = 500;
    double blowup_max_v = 25.0;
    double blowup_mass_fraction = 0.9;
    double mass_radius = 1.0;
    bool track_minimum = true;
    Field init;  // start iterate; empty means zero (saddle tracking needs one)
};
struct ContinuationStep {
    SolveReport report;
    MassReport masses;
};
struct ContinuationResult {
    std::vector<ContinuationStep> steps;
    ContinuationStatus status = ContinuationStatus::ReachedEnd;
};
ContinuationResult continuation(const ProblemData& data, double lambda_start, double lambda_end,
                                ContinuationPolicy policy = {});

}  // namespace liouville
