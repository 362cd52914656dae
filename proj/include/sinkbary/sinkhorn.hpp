#ifndef SINKBARY_SINKHORN_HPP
#define SINKBARY_SINKHORN_HPP

#include <span>
#include <vector>

#include "sinkbary/measure.hpp"

namespace sinkbary {

struct SinkhornConfig {
    double epsilon = 1.0;
    double tolerance = 1e-9;    // sup-norm change threshold on the anchored potentials
    int max_iterations = 20000; // full sweeps
    int anchor_index = 0;       // atom of the first measure pinned to u = 0
};

struct SinkhornResult {
    std::vector<double> u_values; // over supp(alpha), u_values[anchor_index] == 0
    std::vector<double> v_values; // over supp(beta)
    int iterations_used = 0;
    double certified_error = 0.0; // lambda^{2l} * (D + osc(u0)) / epsilon
    bool converged = false;
};

// Instrumentation for the contraction experiments: anchored u after every
// sweep, restricted to the positive-weight atoms actually iterated on.
struct SinkhornTrace {
    std::vector<std::vector<double>> u_sweeps;
    double diameter = 0.0;
    double lambda = 0.0;
};

// Log-domain Sinkhorn-Knopp with u0 = 0 (or a caller-provided warm start).
// Alternates v <- -eps log sum_i a_i exp((u_i - C_ij)/eps) and the mirrored
// u update, re-anchoring after every sweep. Stops on the sup-change test or
// on the a-priori certificate, whichever fires first; hitting max_iterations
// returns the partial result flagged converged = false. Zero-weight atoms
// are dropped for the iteration and their potentials filled in by the
// log-sum-exp extension afterwards.
SinkhornResult sinkhorn_knopp(const DiscreteMeasure& alpha, const DiscreteMeasure& beta,
                              const CostSpec& cost, const SinkhornConfig& cfg,
                              SinkhornTrace* trace = nullptr,
                              const std::vector<double>* u_init = nullptr);

// Contraction factor of one half-update, tanh(D / (2 eps)); a full sweep
// contracts the Hilbert metric by lambda^2.
double contraction_lambda(double diameter, double epsilon);

// max - min of (log_f - log_g); both arguments are log-vectors of the same length.
double hilbert_distance(std::span<const double> log_f, std::span<const double> log_g);

// Continuous dual potential x -> -eps log sum_i b_i exp((v_i - c(x, y_i))/eps).
struct PotentialFn {
    int dim = 0;
    double epsilon = 1.0;
    CostKind kind = CostKind::squared_euclidean;
    std::vector<double> ys;   // positive-weight support atoms
    std::vector<double> logb; // log weights
    std::vector<double> v;    // dual values

    int size() const { return static_cast<int>(v.size()); }
    double operator()(std::span<const double> x) const;
    void eval_batch(const double* queries, int nq, double* out) const;
};

// Builds the extension from a support measure and its dual values.
// user-matrix costs cannot be evaluated off-support and are rejected.
PotentialFn potential_extend(const DiscreteMeasure& support, const std::vector<double>& dual_values,
                             double epsilon, const CostSpec& cost);

// Gradient of the extension at x: softmax-weighted combination of grad_x c(x, y_i).
std::vector<double> potential_gradient(const PotentialFn& fn, std::span<const double> x);

// <u, alpha> + <v, beta> at the computed potentials (primal-consistent value).
double ot_eps(const DiscreteMeasure& alpha, const DiscreteMeasure& beta,
              const CostSpec& cost, const SinkhornConfig& cfg);

double ot_value(const SinkhornResult& r, const DiscreteMeasure& alpha, const DiscreteMeasure& beta);

// OT_eps(alpha, beta) - (OT_eps(alpha, alpha) + OT_eps(beta, beta)) / 2
double sinkhorn_divergence(const DiscreteMeasure& alpha, const DiscreteMeasure& beta,
                           const CostSpec& cost, const SinkhornConfig& cfg);

// Gradient of alpha -> S_eps(alpha, beta): the difference of two potential
// extensions, u from (alpha, beta) minus p from (alpha, alpha), both anchored
// at the same atom of alpha.
struct DivergenceGradient {
    PotentialFn u_part;
    PotentialFn p_part;

    double operator()(std::span<const double> x) const { return u_part(x) - p_part(x); }
};

DivergenceGradient grad_divergence(const DiscreteMeasure& alpha, const DiscreteMeasure& beta,
                                   const CostSpec& cost, const SinkhornConfig& cfg);

// Largest entry of the cost matrix, honoring a user diameter override.
double effective_diameter(const DiscreteMeasure& alpha, const DiscreteMeasure& beta,
                          const CostSpec& cost);

} // namespace sinkbary

#endif
