#ifndef SINKBARY_FRANK_WOLFE_HPP
#define SINKBARY_FRANK_WOLFE_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "sinkbary/sinkhorn.hpp"

namespace sinkbary {

// min over probability measures of sum_j weights[j] * S_eps(alpha, measures[j])
struct BarycenterProblem {
    std::vector<DiscreteMeasure> measures;
    std::vector<double> weights; // nonnegative, normalized on validation
    CostSpec cost;
    std::optional<Domain> domain; // inferred from the atoms when absent
};

enum class MinimizeMode { grid, continuous };

// Delta_{1,k} = c1 / (k + 2), Delta_{2,k} = c2 / (k + 2); the product
// Delta_k * (k + 2) is constant, hence nondecreasing in k as required.
struct DeltaSchedule {
    double c1 = 0.0;
    double c2 = 0.0;
};

struct FWConfig {
    double epsilon = 1.0;
    int iterations_K = 100;
    MinimizeMode minimize_mode = MinimizeMode::continuous;
    std::optional<DeltaSchedule> delta;    // default c1 = c2 = epsilon
    std::optional<std::vector<double>> x0; // default: weight-weighted mean of all input atoms
    double merge_radius = 0.0;             // final consolidation radius
    int max_sink_iterations = 5000;        // cap per inner solve
    double min_sink_tolerance = 0.0;       // floor for the coupled tolerance
    std::vector<double> grid_points;       // extra grid candidates, flattened
    int multistarts = 12;                  // continuous mode
    int descent_iterations = 60;           // continuous mode
    std::uint64_t seed = 12345;
};

// State after k steps; the weight vector follows
// a_{k+1} = [k * a_k, 2] / (k + 2) exactly, so the iterate holds at most
// k + 1 atoms (x0 keeps a zero weight from the first step on).
struct FWState {
    DiscreteMeasure iterate;
    int k = 0;
    std::vector<double> objective_trace;
    std::vector<double> gap_trace;
    std::vector<double> selected_points; // flattened, one per step
    std::vector<int> sinkhorn_iters;     // total inner sweeps per step

    // Warm-start caches for the k-th step's solves.
    std::vector<std::vector<double>> warm_u;
    std::vector<double> warm_p;
    // OT_eps(beta_j, beta_j), filled once; constant terms of the objective.
    std::vector<double> self_ot;
};

// Affine combination of potential extensions plus a constant.
struct PotentialCombination {
    std::vector<double> coeffs;
    std::vector<PotentialFn> terms;
    double constant = 0.0;

    double operator()(std::span<const double> x) const;
    std::vector<double> gradient(std::span<const double> x) const;
    void eval_batch(const double* queries, int nq, double* out) const;
};

struct MinimizeResult {
    std::vector<double> point;
    double value = 0.0;
};

// Grid mode: exact argmin over the candidate list, lowest index on ties.
// Continuous mode: multistart descent with Armijo backtracking, iterates
// clamped to the domain box; starts are a seeded subsample of the provided
// atom pool plus uniform draws.
MinimizeResult minimize_phi(const PotentialCombination& phi, MinimizeMode mode,
                            const std::vector<double>& candidates, int dim,
                            const Domain& domain, const std::vector<double>& start_pool,
                            int multistarts, int descent_iterations, std::uint64_t seed,
                            int step_index);

// One Frank-Wolfe step: solves the m + 1 Sinkhorn problems at tolerance
// Delta_{1,k} / 8, assembles phi = sum_j w_j u_j - p, picks x_{k+1}, and
// applies the weight recursion. Appends to the traces.
void fw_step(const BarycenterProblem& problem, FWState& state, const FWConfig& cfg);

// Runs K steps from delta_{x0} and consolidates the final iterate at
// merge_radius. Intermediate iterates are never consolidated.
FWState barycenter(const BarycenterProblem& problem, const FWConfig& cfg);

// B_eps(alpha) at the given solver tolerance.
double objective(const BarycenterProblem& problem, const DiscreteMeasure& alpha,
                 double epsilon, double tolerance, int max_iterations = 100000);

// Validation used by both barycenter() and the tasks layer.
BarycenterProblem validate_problem(BarycenterProblem problem);

} // namespace sinkbary

#endif
