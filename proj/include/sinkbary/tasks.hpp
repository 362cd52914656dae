#ifndef SINKBARY_TASKS_HPP
#define SINKBARY_TASKS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "sinkbary/frank_wolfe.hpp"

namespace sinkbary {

// Measure compression: barycenter of a single input (m = 1).
FWState compress(const DiscreteMeasure& target, const CostSpec& cost, const FWConfig& cfg);

struct KMeansConfig {
    int k = 2;
    int lloyd_iterations = 10;
    double epsilon = 0.1;
    double assign_tolerance = 1e-7; // Sinkhorn tolerance for distance evaluations
    FWConfig fw;                    // centroid refits
    std::uint64_t seed = 12345;
    std::optional<std::vector<int>> initial_centroid_indices; // overrides seeded k-means++
};

struct ClusterModel {
    std::vector<DiscreteMeasure> centroids;
    std::vector<int> assignments;
    std::vector<double> inertia_trace; // after every Lloyd round
};

// k-means over measures under the divergence: k-means++ seeding proportional
// to the squared divergence, Lloyd rounds with barycenter refits, empty
// clusters re-seeded from the farthest measure.
ClusterModel kmeans(const std::vector<DiscreteMeasure>& measures, const CostSpec& cost,
                    const KMeansConfig& cfg);

enum class EdgeWeighting { inverse_distance, exp_kernel };

struct PropagateConfig {
    int sweeps = 3;
    double epsilon = 0.1;
    EdgeWeighting weighting = EdgeWeighting::exp_kernel;
    double sigma = 1.0; // exp_kernel scale
    FWConfig fw;
    double objective_tolerance = 1e-7;
};

struct PropagationGraph {
    int vertices = 0;
    std::vector<std::array<double, 3>> edges; // u, v, raw positive weight
    std::map<int, DiscreteMeasure> known;
    std::vector<int> unknown;
};

struct PropagationResult {
    std::map<int, DiscreteMeasure> fitted;  // one measure per unknown vertex
    std::vector<double> objective_trace;    // after every sweep
};

// Gauss-Seidel sweeps in vertex index order: each unknown vertex is re-fitted
// as the barycenter of its neighbors under incident edge weights normalized
// to sum 1. Throws DisconnectedUnknownVertex when an unknown vertex has no
// incident edge.
PropagationResult propagate(const PropagationGraph& graph, const CostSpec& cost,
                            const PropagateConfig& cfg);

} // namespace sinkbary

#endif
