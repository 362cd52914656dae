#include "sinkbary/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sinkbary/rng.hpp"

namespace sinkbary {

FWState compress(const DiscreteMeasure& target, const CostSpec& cost, const FWConfig& cfg) {
    BarycenterProblem problem;
    problem.measures = {target};
    problem.weights = {1.0};
    problem.cost = cost;
    return barycenter(problem, cfg);
}

namespace {

struct DivergenceEval {
    const std::vector<DiscreteMeasure>* measures;
    CostSpec cost;
    SinkhornConfig cfg;
    std::vector<double> self_ot; // per input measure, filled lazily

    double self_of(const DiscreteMeasure& m) { return ot_eps(m, m, cost, cfg); }

    double measure_self(int i) {
        if (self_ot.empty())
            self_ot.assign(measures->size(), std::numeric_limits<double>::quiet_NaN());
        double& slot = self_ot[static_cast<size_t>(i)];
        if (std::isnan(slot))
            slot = self_of((*measures)[static_cast<size_t>(i)]);
        return slot;
    }

    // S_eps(measures[i], centroid) with the centroid self term supplied.
    double to_centroid(int i, const DiscreteMeasure& centroid, double centroid_self) {
        const double ab = ot_eps((*measures)[static_cast<size_t>(i)], centroid, cost, cfg);
        return ab - 0.5 * (measure_self(i) + centroid_self);
    }
};

} // namespace

ClusterModel kmeans(const std::vector<DiscreteMeasure>& measures, const CostSpec& cost,
                    const KMeansConfig& cfg) {
    const int n = static_cast<int>(measures.size());
    if (n < 1)
        throw EmptySupport("kmeans: no input measures");
    if (cfg.k < 1 || cfg.k > n)
        throw MalformedInput("kmeans: k must be in [1, number of measures]");
    const int d = measures.front().dim;
    for (const auto& m : measures)
        if (m.dim != d)
            throw DimensionMismatch("kmeans: input measures must share one dimension");

    DivergenceEval div;
    div.measures = &measures;
    div.cost = cost;
    div.cfg.epsilon = cfg.epsilon;
    div.cfg.tolerance = cfg.assign_tolerance;
    div.cfg.max_iterations = 20000;

    // Seeding: explicit indices or k-means++ proportional to the squared
    // divergence to the nearest chosen seed.
    std::vector<int> seeds;
    if (cfg.initial_centroid_indices) {
        seeds = *cfg.initial_centroid_indices;
        if (static_cast<int>(seeds.size()) != cfg.k)
            throw MalformedInput("kmeans: need exactly k initial centroid indices");
        for (int s : seeds)
            if (s < 0 || s >= n)
                throw MalformedInput("kmeans: initial centroid index out of range");
    } else {
        Rng rng(cfg.seed, "kmeans-seed");
        seeds.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(n))));
        std::vector<double> d2(static_cast<size_t>(n), std::numeric_limits<double>::infinity());
        while (static_cast<int>(seeds.size()) < cfg.k) {
            const int last = seeds.back();
            const double last_self = div.measure_self(last);
            double total = 0.0;
            for (int i = 0; i < n; ++i) {
                const double dist = div.to_centroid(i, measures[static_cast<size_t>(last)], last_self);
                d2[static_cast<size_t>(i)] = std::min(d2[static_cast<size_t>(i)], dist * dist);
                total += d2[static_cast<size_t>(i)];
            }
            int pick = 0;
            if (total > 0.0) {
                const double u = rng.uniform() * total;
                double acc = 0.0;
                for (int i = 0; i < n; ++i) {
                    acc += d2[static_cast<size_t>(i)];
                    if (u < acc || i == n - 1) {
                        pick = i;
                        break;
                    }
                }
            } else {
                pick = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
            }
            seeds.push_back(pick);
        }
    }

    ClusterModel model;
    for (int s : seeds)
        model.centroids.push_back(measures[static_cast<size_t>(s)]);
    model.assignments.assign(static_cast<size_t>(n), -1);

    std::vector<double> centroid_self(static_cast<size_t>(cfg.k));
    std::vector<int> prev(static_cast<size_t>(n), -2);
    for (int round = 0; round < cfg.lloyd_iterations; ++round) {
        for (int c = 0; c < cfg.k; ++c)
            centroid_self[static_cast<size_t>(c)] = div.self_of(model.centroids[static_cast<size_t>(c)]);

        // Assignment, lowest centroid index on ties.
        std::vector<std::vector<double>> dist(static_cast<size_t>(n),
                                              std::vector<double>(static_cast<size_t>(cfg.k)));
        for (int i = 0; i < n; ++i) {
            int best = 0;
            for (int c = 0; c < cfg.k; ++c) {
                dist[static_cast<size_t>(i)][static_cast<size_t>(c)] =
                    div.to_centroid(i, model.centroids[static_cast<size_t>(c)], centroid_self[static_cast<size_t>(c)]);
                if (dist[static_cast<size_t>(i)][static_cast<size_t>(c)] <
                    dist[static_cast<size_t>(i)][static_cast<size_t>(best)])
                    best = c;
            }
            model.assignments[static_cast<size_t>(i)] = best;
        }

        // Empty clusters steal the measure farthest from its assigned centroid.
        for (int c = 0; c < cfg.k; ++c) {
            bool empty = true;
            for (int i = 0; i < n; ++i)
                if (model.assignments[static_cast<size_t>(i)] == c) {
                    empty = false;
                    break;
                }
            if (!empty)
                continue;
            int farthest = -1;
            double worst = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < n; ++i) {
                const int a = model.assignments[static_cast<size_t>(i)];
                if (a == c)
                    continue;
                const double dd = dist[static_cast<size_t>(i)][static_cast<size_t>(a)];
                if (dd > worst) {
                    worst = dd;
                    farthest = i;
                }
            }
            if (farthest < 0)
                throw EmptyCluster("kmeans: cannot repair an empty cluster");
            model.centroids[static_cast<size_t>(c)] = measures[static_cast<size_t>(farthest)];
            centroid_self[static_cast<size_t>(c)] = div.self_of(model.centroids[static_cast<size_t>(c)]);
            model.assignments[static_cast<size_t>(farthest)] = c;
        }

        const bool stable = model.assignments == prev;
        prev = model.assignments;

        // Centroid refits: barycenter of the cluster members.
        if (!stable) {
            for (int c = 0; c < cfg.k; ++c) {
                BarycenterProblem sub;
                sub.cost = cost;
                for (int i = 0; i < n; ++i)
                    if (model.assignments[static_cast<size_t>(i)] == c)
                        sub.measures.push_back(measures[static_cast<size_t>(i)]);
                FWConfig f = cfg.fw;
                f.epsilon = cfg.epsilon;
                f.seed = Rng(cfg.seed, "kmeans-refit",
                             static_cast<std::uint64_t>(round) * cfg.k + static_cast<std::uint64_t>(c))
                             .raw();
                model.centroids[static_cast<size_t>(c)] = barycenter(sub, f).iterate;
                centroid_self[static_cast<size_t>(c)] = div.self_of(model.centroids[static_cast<size_t>(c)]);
            }
        }

        double inertia = 0.0;
        for (int i = 0; i < n; ++i) {
            const int a = model.assignments[static_cast<size_t>(i)];
            inertia += div.to_centroid(i, model.centroids[static_cast<size_t>(a)], centroid_self[static_cast<size_t>(a)]);
        }
        model.inertia_trace.push_back(inertia);
        if (stable)
            break;
    }
    return model;
}

PropagationResult propagate(const PropagationGraph& graph, const CostSpec& cost,
                            const PropagateConfig& cfg) {
    if (graph.vertices < 1)
        throw MalformedInput("propagate: empty graph");
    if (graph.known.empty())
        throw MalformedInput("propagate: no known vertices");

    std::vector<char> is_unknown(static_cast<size_t>(graph.vertices), 0);
    for (int u : graph.unknown) {
        if (u < 0 || u >= graph.vertices)
            throw MalformedInput("propagate: unknown vertex out of range");
        is_unknown[static_cast<size_t>(u)] = 1;
    }

    // Transformed adjacency.
    std::vector<std::vector<std::pair<int, double>>> adj(static_cast<size_t>(graph.vertices));
    for (const auto& e : graph.edges) {
        const int a = static_cast<int>(e[0]);
        const int b = static_cast<int>(e[1]);
        const double raw = e[2];
        if (a < 0 || a >= graph.vertices || b < 0 || b >= graph.vertices || !(raw > 0.0))
            throw MalformedInput("propagate: bad edge");
        const double w = cfg.weighting == EdgeWeighting::inverse_distance
                             ? 1.0 / raw
                             : std::exp(-raw / cfg.sigma);
        adj[static_cast<size_t>(a)].push_back({b, w});
        adj[static_cast<size_t>(b)].push_back({a, w});
    }
    for (int v : graph.unknown) {
        if (adj[static_cast<size_t>(v)].empty())
            throw DisconnectedUnknownVertex("propagate: unknown vertex " + std::to_string(v) +
                                            " has no incident edge");
        for (const auto& [u, w] : adj[static_cast<size_t>(v)])
            if (!is_unknown[static_cast<size_t>(u)] && !graph.known.count(u))
                throw MalformedInput("propagate: neighbor " + std::to_string(u) +
                                     " of an unknown vertex is neither known nor unknown");
    }

    // Placeholder at the pooled mean of the known measures.
    int d = 0;
    for (const auto& [idx, m] : graph.known) {
        if (d == 0)
            d = m.dim;
        else if (m.dim != d)
            throw DimensionMismatch("propagate: known measures must share one dimension");
    }
    std::vector<double> pooled(static_cast<size_t>(d), 0.0);
    for (const auto& [idx, m] : graph.known) {
        const auto mu = measure_mean(m);
        for (int t = 0; t < d; ++t)
            pooled[static_cast<size_t>(t)] += mu[static_cast<size_t>(t)] / static_cast<double>(graph.known.size());
    }

    PropagationResult res;
    std::vector<int> order = graph.unknown;
    std::sort(order.begin(), order.end());
    for (int v : order)
        res.fitted[v] = dirac(pooled);

    auto measure_at = [&](int v) -> const DiscreteMeasure& {
        if (is_unknown[static_cast<size_t>(v)])
            return res.fitted.at(v);
        return graph.known.at(v);
    };

    SinkhornConfig obj_cfg;
    obj_cfg.epsilon = cfg.epsilon;
    obj_cfg.tolerance = cfg.objective_tolerance;
    obj_cfg.max_iterations = 20000;

    for (int sweep = 0; sweep < cfg.sweeps; ++sweep) {
        for (int v : order) {
            BarycenterProblem sub;
            sub.cost = cost;
            double total = 0.0;
            for (const auto& [u, w] : adj[static_cast<size_t>(v)])
                total += w;
            for (const auto& [u, w] : adj[static_cast<size_t>(v)]) {
                sub.measures.push_back(measure_at(u));
                sub.weights.push_back(w / total);
            }
            FWConfig f = cfg.fw;
            f.epsilon = cfg.epsilon;
            res.fitted[v] = barycenter(sub, f).iterate;
        }

        // Block-coordinate objective: transformed weights, each edge touching
        // an unknown vertex counted once.
        double obj = 0.0;
        for (const auto& e : graph.edges) {
            const int a = static_cast<int>(e[0]);
            const int b = static_cast<int>(e[1]);
            if (!is_unknown[static_cast<size_t>(a)] && !is_unknown[static_cast<size_t>(b)])
                continue;
            const double w = cfg.weighting == EdgeWeighting::inverse_distance
                                 ? 1.0 / e[2]
                                 : std::exp(-e[2] / cfg.sigma);
            obj += w * sinkhorn_divergence(measure_at(a), measure_at(b), cost, obj_cfg);
        }
        res.objective_trace.push_back(obj);
    }
    return res;
}

} // namespace sinkbary
