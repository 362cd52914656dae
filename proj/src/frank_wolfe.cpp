#include "sinkbary/frank_wolfe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sinkbary/rng.hpp"

namespace sinkbary {

double PotentialCombination::operator()(std::span<const double> x) const {
    double s = constant;
    for (size_t t = 0; t < terms.size(); ++t)
        s += coeffs[t] * terms[t](x);
    return s;
}

std::vector<double> PotentialCombination::gradient(std::span<const double> x) const {
    std::vector<double> g(x.size(), 0.0);
    for (size_t t = 0; t < terms.size(); ++t) {
        const auto gt = potential_gradient(terms[t], x);
        for (size_t i = 0; i < g.size(); ++i)
            g[i] += coeffs[t] * gt[i];
    }
    return g;
}

void PotentialCombination::eval_batch(const double* queries, int nq, double* out) const {
    for (int q = 0; q < nq; ++q)
        out[q] = constant;
    std::vector<double> tmp(static_cast<size_t>(nq));
    for (size_t t = 0; t < terms.size(); ++t) {
        terms[t].eval_batch(queries, nq, tmp.data());
        for (int q = 0; q < nq; ++q)
            out[q] += coeffs[t] * tmp[static_cast<size_t>(q)];
    }
}

BarycenterProblem validate_problem(BarycenterProblem problem) {
    if (problem.measures.empty())
        throw EmptySupport("barycenter problem needs at least one input measure");
    if (!problem.cost.analytic())
        throw UnsupportedCost("barycenter requires an analytic cost kind");
    const int d = problem.measures.front().dim;
    for (const auto& m : problem.measures)
        if (m.dim != d)
            throw DimensionMismatch("input measures must share one dimension");
    if (problem.weights.empty())
        problem.weights.assign(problem.measures.size(), 1.0 / static_cast<double>(problem.measures.size()));
    if (problem.weights.size() != problem.measures.size())
        throw DimensionMismatch("one weight per input measure");
    double sum = 0.0;
    for (double w : problem.weights) {
        if (w < 0.0)
            throw NegativeWeight("barycenter weights must be nonnegative");
        sum += w;
    }
    if (sum <= 0.0)
        throw WeightSumOutOfTolerance("barycenter weights must have positive sum");
    for (double& w : problem.weights)
        w /= sum;
    if (!problem.domain) {
        std::vector<const DiscreteMeasure*> ptrs;
        for (const auto& m : problem.measures)
            ptrs.push_back(&m);
        problem.domain = infer_domain(ptrs);
    }
    return problem;
}

namespace {

void clamp_to(const Domain& box, std::vector<double>& x) {
    for (size_t t = 0; t < x.size(); ++t)
        x[t] = std::clamp(x[t], box.lo[t], box.hi[t]);
}

MinimizeResult descend(const PotentialCombination& phi, std::vector<double> x,
                       const Domain& box, int iterations) {
    clamp_to(box, x);
    double fx = phi(x);
    double diag = 0.0;
    for (size_t t = 0; t < box.lo.size(); ++t)
        diag += (box.hi[t] - box.lo[t]) * (box.hi[t] - box.lo[t]);
    diag = std::sqrt(diag);
    for (int it = 0; it < iterations; ++it) {
        const auto g = phi.gradient(x);
        double gn2 = 0.0;
        for (double v : g)
            gn2 += v * v;
        if (gn2 < 1e-24)
            break;
        // Backtracking line search with the Armijo condition.
        double t = 0.25 * diag / std::sqrt(gn2);
        bool moved = false;
        for (int h = 0; h < 40; ++h) {
            std::vector<double> xt = x;
            for (size_t i = 0; i < xt.size(); ++i)
                xt[i] -= t * g[i];
            clamp_to(box, xt);
            const double ft = phi(xt);
            if (ft <= fx - 1e-4 * t * gn2) {
                x = std::move(xt);
                fx = ft;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if (!moved)
            break;
    }
    return {std::move(x), fx};
}

} // namespace

MinimizeResult minimize_phi(const PotentialCombination& phi, MinimizeMode mode,
                            const std::vector<double>& candidates, int dim,
                            const Domain& domain, const std::vector<double>& start_pool,
                            int multistarts, int descent_iterations, std::uint64_t seed,
                            int step_index) {
    if (mode == MinimizeMode::grid) {
        const int nc = static_cast<int>(candidates.size()) / dim;
        if (nc < 1)
            throw EmptySupport("minimize_phi: empty candidate grid");
        std::vector<double> vals(static_cast<size_t>(nc));
        phi.eval_batch(candidates.data(), nc, vals.data());
        int best = 0;
        for (int i = 1; i < nc; ++i)
            if (vals[static_cast<size_t>(i)] < vals[static_cast<size_t>(best)])
                best = i;
        return {std::vector<double>(candidates.begin() + static_cast<long>(best) * dim,
                                    candidates.begin() + static_cast<long>(best + 1) * dim),
                vals[static_cast<size_t>(best)]};
    }

    Rng rng(seed, "fw-multistart", static_cast<std::uint64_t>(step_index));
    const int n_pool = static_cast<int>(start_pool.size()) / dim;
    const int want_pool = std::min(n_pool, std::max(1, multistarts / 2 + multistarts % 2));
    // Descend from the lowest-value pool atoms (ties to the lower index),
    // then from seeded uniform draws for exploration.
    std::vector<double> pool_vals(static_cast<size_t>(n_pool));
    phi.eval_batch(start_pool.data(), n_pool, pool_vals.data());
    std::vector<int> pool_idx(static_cast<size_t>(n_pool));
    std::iota(pool_idx.begin(), pool_idx.end(), 0);
    std::partial_sort(pool_idx.begin(), pool_idx.begin() + want_pool, pool_idx.end(),
                      [&pool_vals](int a, int b) {
                          const double va = pool_vals[static_cast<size_t>(a)];
                          const double vb = pool_vals[static_cast<size_t>(b)];
                          return va < vb || (va == vb && a < b);
                      });
    std::vector<std::vector<double>> starts;
    for (int i = 0; i < want_pool; ++i)
        starts.emplace_back(start_pool.begin() + static_cast<long>(pool_idx[static_cast<size_t>(i)]) * dim,
                            start_pool.begin() + static_cast<long>(pool_idx[static_cast<size_t>(i)] + 1) * dim);
    while (static_cast<int>(starts.size()) < std::max(1, multistarts)) {
        std::vector<double> x(static_cast<size_t>(dim));
        for (int t = 0; t < dim; ++t)
            x[static_cast<size_t>(t)] = rng.uniform(domain.lo[static_cast<size_t>(t)], domain.hi[static_cast<size_t>(t)]);
        starts.push_back(std::move(x));
    }

    // A later start replaces the incumbent only on a clear improvement, so
    // evaluation noise cannot displace a support-atom start when the whole
    // domain is flat (an exact fixed point has phi identically zero).
    MinimizeResult best;
    best.value = std::numeric_limits<double>::infinity();
    for (const auto& s : starts) {
        MinimizeResult r = descend(phi, s, domain, descent_iterations);
        if (!std::isfinite(best.value) ||
            r.value < best.value - 1e-12 * (1.0 + std::abs(best.value)))
            best = std::move(r);
    }
    return best;
}

namespace {

DeltaSchedule schedule_of(const FWConfig& cfg) {
    if (cfg.delta) {
        if (cfg.delta->c1 < 0.0 || cfg.delta->c2 < 0.0)
            throw MalformedInput("delta schedule constants must be nonnegative");
        return *cfg.delta;
    }
    return {cfg.epsilon, cfg.epsilon};
}

} // namespace

void fw_step(const BarycenterProblem& problem, FWState& state, const FWConfig& cfg) {
    if (!problem.domain)
        throw MalformedInput("fw_step needs a validated problem, run validate_problem first");
    const int m = static_cast<int>(problem.measures.size());
    const int d = state.iterate.dim;
    const int k = state.k;
    const DeltaSchedule sched = schedule_of(cfg);
    const double delta1 = sched.c1 / (k + 2.0);

    SinkhornConfig scfg;
    scfg.epsilon = cfg.epsilon;
    scfg.tolerance = std::max(delta1 / 8.0, cfg.min_sink_tolerance);
    if (scfg.tolerance <= 0.0)
        scfg.tolerance = 1e-12;
    scfg.max_iterations = cfg.max_sink_iterations;
    scfg.anchor_index = 0;

    if (state.self_ot.empty()) {
        SinkhornConfig self_cfg = scfg;
        self_cfg.tolerance = 1e-7;
        self_cfg.max_iterations = std::max(cfg.max_sink_iterations, 20000);
        for (const auto& b : problem.measures)
            state.self_ot.push_back(ot_eps(b, b, problem.cost, self_cfg));
    }
    if (state.warm_u.empty())
        state.warm_u.assign(static_cast<size_t>(m), {});

    int iters_total = 0;
    PotentialCombination phi;
    double objective_k = 0.0;
    std::vector<SinkhornResult> sols(static_cast<size_t>(m));
    for (int j = 0; j < m; ++j) {
        const auto* warm = state.warm_u[static_cast<size_t>(j)].empty()
                               ? nullptr
                               : &state.warm_u[static_cast<size_t>(j)];
        sols[static_cast<size_t>(j)] = sinkhorn_knopp(state.iterate, problem.measures[static_cast<size_t>(j)],
                                                      problem.cost, scfg, nullptr, warm);
        iters_total += sols[static_cast<size_t>(j)].iterations_used;
    }
    const auto* warm_p = state.warm_p.empty() ? nullptr : &state.warm_p;
    const SinkhornResult self = sinkhorn_knopp(state.iterate, state.iterate, problem.cost, scfg,
                                               nullptr, warm_p);
    iters_total += self.iterations_used;

    const double self_val = ot_value(self, state.iterate, state.iterate);
    for (int j = 0; j < m; ++j) {
        const double w = problem.weights[static_cast<size_t>(j)];
        const double ot_j = ot_value(sols[static_cast<size_t>(j)], state.iterate,
                                     problem.measures[static_cast<size_t>(j)]);
        objective_k += w * (ot_j - 0.5 * self_val - 0.5 * state.self_ot[static_cast<size_t>(j)]);
        phi.coeffs.push_back(w);
        phi.terms.push_back(potential_extend(problem.measures[static_cast<size_t>(j)],
                                             sols[static_cast<size_t>(j)].v_values, cfg.epsilon,
                                             problem.cost));
    }
    phi.coeffs.push_back(-1.0);
    phi.terms.push_back(potential_extend(state.iterate, self.v_values, cfg.epsilon, problem.cost));

    // Candidate grid / start pool: input atoms in measure order, extra grid after.
    std::vector<double> pool;
    for (const auto& b : problem.measures)
        pool.insert(pool.end(), b.xs.begin(), b.xs.end());
    std::vector<double> candidates = pool;
    candidates.insert(candidates.end(), cfg.grid_points.begin(), cfg.grid_points.end());

    const MinimizeResult picked =
        minimize_phi(phi, cfg.minimize_mode, candidates, d, *problem.domain, pool,
                     cfg.multistarts, cfg.descent_iterations, cfg.seed, k);

    // gap = <phi, alpha_k> - phi(x_{k+1})
    std::vector<double> at_atoms(static_cast<size_t>(state.iterate.size()));
    phi.eval_batch(state.iterate.xs.data(), state.iterate.size(), at_atoms.data());
    double pairing_val = 0.0;
    for (int i = 0; i < state.iterate.size(); ++i)
        pairing_val += state.iterate.weights[static_cast<size_t>(i)] * at_atoms[static_cast<size_t>(i)];
    const double gap = pairing_val - picked.value;

    // Warm starts for the next step: current potentials plus their extension
    // at the new atom.
    for (int j = 0; j < m; ++j) {
        auto& wu = state.warm_u[static_cast<size_t>(j)];
        wu = sols[static_cast<size_t>(j)].u_values;
        wu.push_back(phi.terms[static_cast<size_t>(j)](picked.point));
    }
    state.warm_p = self.u_values;
    state.warm_p.push_back(phi.terms.back()(picked.point));

    // a_{k+1} = [k * a_k, 2] / (k + 2)
    const double scale = k / (k + 2.0);
    for (double& w : state.iterate.weights)
        w *= scale;
    state.iterate.weights.push_back(2.0 / (k + 2.0));
    state.iterate.xs.insert(state.iterate.xs.end(), picked.point.begin(), picked.point.end());

    state.k = k + 1;
    state.objective_trace.push_back(objective_k);
    state.gap_trace.push_back(gap);
    state.selected_points.insert(state.selected_points.end(), picked.point.begin(), picked.point.end());
    state.sinkhorn_iters.push_back(iters_total);
}

FWState barycenter(const BarycenterProblem& problem_in, const FWConfig& cfg) {
    const BarycenterProblem problem = validate_problem(problem_in);
    if (cfg.iterations_K < 1)
        throw MalformedInput("barycenter: iterations_K must be at least 1");
    if (cfg.epsilon <= 0.0)
        throw MalformedInput("barycenter: epsilon must be positive");
    const int d = problem.measures.front().dim;

    std::vector<double> x0;
    if (cfg.x0) {
        if (static_cast<int>(cfg.x0->size()) != d)
            throw DimensionMismatch("barycenter: x0 dimension mismatch");
        x0 = *cfg.x0;
    } else {
        // Weight-weighted mean of all input atoms.
        x0.assign(static_cast<size_t>(d), 0.0);
        for (size_t j = 0; j < problem.measures.size(); ++j) {
            const auto& b = problem.measures[j];
            const double wj = problem.weights[j];
            for (int i = 0; i < b.size(); ++i)
                for (int t = 0; t < d; ++t)
                    x0[static_cast<size_t>(t)] +=
                        wj * b.weights[static_cast<size_t>(i)] * b.xs[static_cast<size_t>(i) * d + t];
        }
    }

    FWState state;
    state.iterate = dirac(x0);
    for (int k = 0; k < cfg.iterations_K; ++k)
        fw_step(problem, state, cfg);
    state.iterate = consolidate(state.iterate, cfg.merge_radius);
    return state;
}

double objective(const BarycenterProblem& problem_in, const DiscreteMeasure& alpha,
                 double epsilon, double tolerance, int max_iterations) {
    const BarycenterProblem problem = validate_problem(problem_in);
    SinkhornConfig cfg;
    cfg.epsilon = epsilon;
    cfg.tolerance = tolerance;
    cfg.max_iterations = max_iterations;
    const double self_val = ot_eps(alpha, alpha, problem.cost, cfg);
    double total = 0.0;
    for (size_t j = 0; j < problem.measures.size(); ++j) {
        const auto& b = problem.measures[j];
        total += problem.weights[j] *
                 (ot_eps(alpha, b, problem.cost, cfg) - 0.5 * self_val - 0.5 * ot_eps(b, b, problem.cost, cfg));
    }
    return total;
}

} // namespace sinkbary
