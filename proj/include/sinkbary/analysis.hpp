#ifndef SINKBARY_ANALYSIS_HPP
#define SINKBARY_ANALYSIS_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sinkbary/measure.hpp"

namespace sinkbary {

// Normalized gaussian RBF kernel h(x, y) = exp(-|x - y|^2 / (2 sigma^2)),
// h(x, x) = 1. sigma <= 0 requests the median-pairwise-distance heuristic
// where a sample to measure it on is available.
struct KernelSpec {
    double sigma = 0.0;
};

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
};

// One shape for every experiment: a pass flag, named scalar statistics
// (lambda, D, epsilon included where meaningful), and a CSV table.
struct ExperimentReport {
    std::string name;
    bool pass = false;
    std::map<std::string, double> stats;
    std::vector<std::string> csv_header;
    std::vector<std::vector<std::string>> csv_rows;
};

double mmd(const DiscreteMeasure& a, const DiscreteMeasure& b, const KernelSpec& kernel);

// Median euclidean distance over the first min(cap, n) atoms; 1.0 for a
// degenerate cloud.
double median_pairwise_distance(const DiscreteMeasure& m, int cap = 500);

// Empirical (1 - tau) MMD quantile against a reference sample of size
// 100 * max(n), checked against 4 log(3 / tau) / sqrt(n) for every n.
ExperimentReport mmd_concentration_experiment(const SamplerSpec& sampler,
                                              const std::vector<int>& n_list, int trials,
                                              double tau, KernelSpec kernel, std::uint64_t seed);

// Random measure pairs on shared supports; checks
// sup|u - u'| <= 2 eps e^{3D/eps} (TV(alpha, alpha') + TV(beta, beta'))
// with the sup estimated on a probe grid.
ExperimentReport lipschitz_tv_check(int trials, int support_n, double epsilon, std::uint64_t seed);

// Per-sweep Hilbert-metric contraction ratios against lambda^2 and the
// a-priori error envelope lambda^{2l} D / eps, over random instances with
// D / eps in [0.5, 3].
ExperimentReport sinkhorn_rate_check(int instances, std::uint64_t seed);

// Decay of sup|u - u_n| against the reference potential of a large sample;
// fits the log-log slope over n_list. fit_out receives the fitted rate.
ExperimentReport sample_complexity_experiment(const DiscreteMeasure& alpha,
                                              const SamplerSpec& sampler,
                                              const std::vector<int>& n_list, int trials,
                                              int n_ref, double tolerance, double epsilon,
                                              std::uint64_t seed, RateFit* fit_out = nullptr);

// Smallest C with sup|u - u'| <= C (MMD(alpha, alpha') + MMD(beta, beta'))
// across all trials, stability-checked over two seed batches and recorded
// for two epsilon values.
ExperimentReport mmd_lipschitz_check(int trials, int support_n, double epsilon,
                                     std::uint64_t seed);

// Anchored-potential bounds max|u| <= D, max|v| <= 2 D over random instances
// with D / eps in [0.5, 3].
ExperimentReport potential_bounds_check(int instances, std::uint64_t seed);

} // namespace sinkbary

#endif
