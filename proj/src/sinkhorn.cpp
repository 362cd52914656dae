#include "sinkbary/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sinkbary/kernels.hpp"

namespace sinkbary {

double contraction_lambda(double diameter, double epsilon) {
    return std::tanh(diameter / (2.0 * epsilon));
}

double hilbert_distance(std::span<const double> log_f, std::span<const double> log_g) {
    if (log_f.size() != log_g.size() || log_f.empty())
        throw DimensionMismatch("hilbert_distance: vectors must have equal positive length");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < log_f.size(); ++i) {
        const double d = log_f[i] - log_g[i];
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    return hi - lo;
}

namespace {

struct Filtered {
    std::vector<int> idx;     // original atom indices with positive weight
    std::vector<double> xs;   // filtered points (analytic costs)
    std::vector<double> logw; // log weights
};

Filtered filter_support(const DiscreteMeasure& m, bool keep_points) {
    Filtered f;
    for (int i = 0; i < m.size(); ++i) {
        const double w = m.weights[static_cast<size_t>(i)];
        if (w <= 0.0)
            continue;
        f.idx.push_back(i);
        f.logw.push_back(std::log(w));
        if (keep_points)
            for (int t = 0; t < m.dim; ++t)
                f.xs.push_back(m.xs[static_cast<size_t>(i) * m.dim + t]);
    }
    return f;
}

// Cost row between one original alpha atom and the filtered beta atoms.
void cost_row(const DiscreteMeasure& alpha, int i, const Filtered& fb, const CostSpec& cost,
              double* row) {
    if (cost.kind == CostKind::user_matrix) {
        for (size_t j = 0; j < fb.idx.size(); ++j)
            row[j] = cost.matrix[static_cast<size_t>(i) * cost.matrix_cols + fb.idx[j]];
        return;
    }
    const double* x = alpha.xs.data() + static_cast<long>(i) * alpha.dim;
    for (size_t j = 0; j < fb.idx.size(); ++j)
        row[j] = cost_point(cost.kind, x, fb.xs.data() + j * static_cast<size_t>(alpha.dim), alpha.dim);
}

double lse_over(const double* costs, const double* pot, const double* logw, int n, double inv_eps) {
    double m = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double t = logw[i] + (pot[i] - costs[i]) * inv_eps;
        if (t > m)
            m = t;
    }
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        s += std::exp(logw[i] + (pot[i] - costs[i]) * inv_eps - m);
    return m + std::log(s);
}

} // namespace

double effective_diameter(const DiscreteMeasure& alpha, const DiscreteMeasure& beta,
                          const CostSpec& cost) {
    const auto C = cost_matrix(alpha, beta, cost);
    double observed = 0.0;
    for (double c : C)
        observed = std::max(observed, c);
    if (cost.diameter) {
        if (*cost.diameter < observed - 1e-12)
            throw DiameterTooSmall("declared diameter is below an observed pairwise cost");
        return *cost.diameter;
    }
    return observed;
}

SinkhornResult sinkhorn_knopp(const DiscreteMeasure& alpha, const DiscreteMeasure& beta,
                              const CostSpec& cost, const SinkhornConfig& cfg,
                              SinkhornTrace* trace, const std::vector<double>* u_init) {
    if (alpha.dim != beta.dim && cost.analytic())
        throw DimensionMismatch("sinkhorn_knopp: dimension mismatch");
    if (cfg.anchor_index < 0 || cfg.anchor_index >= alpha.size())
        throw DimensionMismatch("sinkhorn_knopp: anchor index out of range");
    if (cfg.epsilon <= 0.0)
        throw MalformedInput("sinkhorn_knopp: epsilon must be positive");
    if (u_init && static_cast<int>(u_init->size()) != alpha.size())
        throw DimensionMismatch("sinkhorn_knopp: warm start length mismatch");

    const Filtered fa = filter_support(alpha, cost.analytic());
    const Filtered fb = filter_support(beta, cost.analytic());
    const int n1 = static_cast<int>(fa.idx.size());
    const int n2 = static_cast<int>(fb.idx.size());
    const double eps = cfg.epsilon;

    // Cost matrix on the filtered supports.
    std::vector<double> C(static_cast<size_t>(n1) * n2);
    if (cost.kind == CostKind::user_matrix) {
        if (cost.matrix_rows != alpha.size() || cost.matrix_cols != beta.size())
            throw DimensionMismatch("user cost matrix shape does not match the supports");
        for (int i = 0; i < n1; ++i)
            for (int j = 0; j < n2; ++j)
                C[static_cast<size_t>(i) * n2 + j] =
                    cost.matrix[static_cast<size_t>(fa.idx[static_cast<size_t>(i)]) * cost.matrix_cols +
                                fb.idx[static_cast<size_t>(j)]];
    } else {
        kernels::cost_fill(cost.kind, fa.xs.data(), n1, fb.xs.data(), n2, alpha.dim, C.data());
    }

    double observed = 0.0;
    for (double c : C)
        observed = std::max(observed, c);
    double D = observed;
    if (cost.diameter) {
        if (*cost.diameter < observed - 1e-12)
            throw DiameterTooSmall("declared diameter is below an observed pairwise cost");
        D = *cost.diameter;
    }
    const double lambda = contraction_lambda(D, eps);
    if (trace) {
        trace->u_sweeps.clear();
        trace->diameter = D;
        trace->lambda = lambda;
    }

    std::vector<double> u(static_cast<size_t>(n1), 0.0);
    if (u_init)
        for (int i = 0; i < n1; ++i)
            u[static_cast<size_t>(i)] = (*u_init)[static_cast<size_t>(fa.idx[static_cast<size_t>(i)])];
    double osc0 = 0.0;
    {
        double lo = u[0], hi = u[0];
        for (double x : u) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        osc0 = hi - lo;
    }
    // Internal anchor: first filtered atom. Re-anchored to cfg.anchor_index at the end.
    for (int i = n1 - 1; i >= 0; --i)
        u[static_cast<size_t>(i)] -= u[0];

    std::vector<double> v(static_cast<size_t>(n2), 0.0);
    std::vector<double> u_prev = u;
    double certified = (D + osc0) / eps;
    bool converged = false;
    int sweeps = 0;

    while (sweeps < cfg.max_iterations) {
        kernels::dual_colsweep(C.data(), n1, n2, u.data(), fa.logw.data(), eps, v.data());
        kernels::dual_rowsweep(C.data(), n1, n2, v.data(), fb.logw.data(), eps, u.data());
        const double shift = u[0];
        for (int i = 0; i < n1; ++i)
            u[static_cast<size_t>(i)] -= shift;
        for (int j = 0; j < n2; ++j)
            v[static_cast<size_t>(j)] += shift;
        ++sweeps;
        certified *= lambda * lambda;
        if (trace)
            trace->u_sweeps.push_back(u);
        double delta = 0.0;
        for (int i = 0; i < n1; ++i)
            delta = std::max(delta, std::abs(u[static_cast<size_t>(i)] - u_prev[static_cast<size_t>(i)]));
        if (delta < cfg.tolerance || certified < cfg.tolerance) {
            converged = true;
            break;
        }
        u_prev = u;
    }

    // Scatter to the original atom lists; extend over dropped atoms.
    SinkhornResult res;
    res.iterations_used = sweeps;
    res.certified_error = certified;
    res.converged = converged;
    res.u_values.assign(static_cast<size_t>(alpha.size()), 0.0);
    res.v_values.assign(static_cast<size_t>(beta.size()), 0.0);
    for (int i = 0; i < n1; ++i)
        res.u_values[static_cast<size_t>(fa.idx[static_cast<size_t>(i)])] = u[static_cast<size_t>(i)];
    for (int j = 0; j < n2; ++j)
        res.v_values[static_cast<size_t>(fb.idx[static_cast<size_t>(j)])] = v[static_cast<size_t>(j)];
    const double inv_eps = 1.0 / eps;
    if (static_cast<int>(fa.idx.size()) != alpha.size()) {
        std::vector<double> row(static_cast<size_t>(n2));
        size_t next = 0;
        for (int i = 0; i < alpha.size(); ++i) {
            if (next < fa.idx.size() && fa.idx[next] == i) {
                ++next;
                continue;
            }
            cost_row(alpha, i, fb, cost, row.data());
            res.u_values[static_cast<size_t>(i)] =
                -eps * lse_over(row.data(), v.data(), fb.logw.data(), n2, inv_eps);
        }
    }
    if (static_cast<int>(fb.idx.size()) != beta.size()) {
        std::vector<double> col(static_cast<size_t>(n1));
        size_t next = 0;
        for (int j = 0; j < beta.size(); ++j) {
            if (next < fb.idx.size() && fb.idx[next] == j) {
                ++next;
                continue;
            }
            if (cost.kind == CostKind::user_matrix) {
                for (int i = 0; i < n1; ++i)
                    col[static_cast<size_t>(i)] =
                        cost.matrix[static_cast<size_t>(fa.idx[static_cast<size_t>(i)]) * cost.matrix_cols + j];
            } else {
                const double* y = beta.xs.data() + static_cast<long>(j) * beta.dim;
                for (int i = 0; i < n1; ++i)
                    col[static_cast<size_t>(i)] = cost_point(
                        cost.kind, fa.xs.data() + static_cast<size_t>(i) * alpha.dim, y, alpha.dim);
            }
            res.v_values[static_cast<size_t>(j)] =
                -eps * lse_over(col.data(), u.data(), fa.logw.data(), n1, inv_eps);
        }
    }

    // Re-anchor at the requested atom.
    const double s = res.u_values[static_cast<size_t>(cfg.anchor_index)];
    if (s != 0.0) {
        for (double& x : res.u_values)
            x -= s;
        for (double& x : res.v_values)
            x += s;
        res.u_values[static_cast<size_t>(cfg.anchor_index)] = 0.0;
    }
    return res;
}

double PotentialFn::operator()(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim)
        throw DimensionMismatch("PotentialFn: query dimension mismatch");
    double out;
    kernels::potential_batch_serial(kind, ys.data(), size(), dim, logb.data(), v.data(), epsilon,
                                    x.data(), 1, &out);
    return out;
}

void PotentialFn::eval_batch(const double* queries, int nq, double* out) const {
    kernels::potential_batch(kind, ys.data(), size(), dim, logb.data(), v.data(), epsilon,
                             queries, nq, out);
}

PotentialFn potential_extend(const DiscreteMeasure& support, const std::vector<double>& dual_values,
                             double epsilon, const CostSpec& cost) {
    if (!cost.analytic())
        throw UnsupportedCost("potential_extend: user-matrix cost has no off-support extension");
    if (static_cast<int>(dual_values.size()) != support.size())
        throw DimensionMismatch("potential_extend: dual values length mismatch");
    PotentialFn fn;
    fn.dim = support.dim;
    fn.epsilon = epsilon;
    fn.kind = cost.kind;
    for (int i = 0; i < support.size(); ++i) {
        const double w = support.weights[static_cast<size_t>(i)];
        if (w <= 0.0)
            continue;
        for (int t = 0; t < support.dim; ++t)
            fn.ys.push_back(support.xs[static_cast<size_t>(i) * support.dim + t]);
        fn.logb.push_back(std::log(w));
        fn.v.push_back(dual_values[static_cast<size_t>(i)]);
    }
    if (fn.v.empty())
        throw EmptySupport("potential_extend: support has no mass");
    return fn;
}

std::vector<double> potential_gradient(const PotentialFn& fn, std::span<const double> x) {
    if (fn.kind == CostKind::user_matrix)
        throw UnsupportedCost("potential_gradient: user-matrix cost has no spatial gradient");
    if (static_cast<int>(x.size()) != fn.dim)
        throw DimensionMismatch("potential_gradient: query dimension mismatch");
    const int n = fn.size();
    const int d = fn.dim;
    const double inv_eps = 1.0 / fn.epsilon;
    std::vector<double> terms(static_cast<size_t>(n));
    double m = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double c = cost_point(fn.kind, x.data(), fn.ys.data() + static_cast<long>(i) * d, d);
        terms[static_cast<size_t>(i)] = fn.logb[static_cast<size_t>(i)] + (fn.v[static_cast<size_t>(i)] - c) * inv_eps;
        m = std::max(m, terms[static_cast<size_t>(i)]);
    }
    double z = 0.0;
    for (int i = 0; i < n; ++i) {
        terms[static_cast<size_t>(i)] = std::exp(terms[static_cast<size_t>(i)] - m);
        z += terms[static_cast<size_t>(i)];
    }
    std::vector<double> grad(static_cast<size_t>(d), 0.0);
    std::vector<double> g(static_cast<size_t>(d));
    for (int i = 0; i < n; ++i) {
        cost_grad(fn.kind, x.data(), fn.ys.data() + static_cast<long>(i) * d, d, g.data());
        const double w = terms[static_cast<size_t>(i)] / z;
        for (int t = 0; t < d; ++t)
            grad[static_cast<size_t>(t)] += w * g[static_cast<size_t>(t)];
    }
    return grad;
}

double ot_value(const SinkhornResult& r, const DiscreteMeasure& alpha, const DiscreteMeasure& beta) {
    double s = 0.0;
    for (int i = 0; i < alpha.size(); ++i)
        s += alpha.weights[static_cast<size_t>(i)] * r.u_values[static_cast<size_t>(i)];
    for (int j = 0; j < beta.size(); ++j)
        s += beta.weights[static_cast<size_t>(j)] * r.v_values[static_cast<size_t>(j)];
    return s;
}

double ot_eps(const DiscreteMeasure& alpha, const DiscreteMeasure& beta,
              const CostSpec& cost, const SinkhornConfig& cfg) {
    const SinkhornResult r = sinkhorn_knopp(alpha, beta, cost, cfg);
    return ot_value(r, alpha, beta);
}

double sinkhorn_divergence(const DiscreteMeasure& alpha, const DiscreteMeasure& beta,
                           const CostSpec& cost, const SinkhornConfig& cfg) {
    SinkhornConfig sym = cfg;
    sym.anchor_index = 0;
    const double ab = ot_eps(alpha, beta, cost, cfg);
    const double aa = ot_eps(alpha, alpha, cost, sym);
    const double bb = ot_eps(beta, beta, cost, sym);
    return ab - 0.5 * (aa + bb);
}

DivergenceGradient grad_divergence(const DiscreteMeasure& alpha, const DiscreteMeasure& beta,
                                   const CostSpec& cost, const SinkhornConfig& cfg) {
    const SinkhornResult ab = sinkhorn_knopp(alpha, beta, cost, cfg);
    const SinkhornResult aa = sinkhorn_knopp(alpha, alpha, cost, cfg);
    DivergenceGradient g;
    g.u_part = potential_extend(beta, ab.v_values, cfg.epsilon, cost);
    g.p_part = potential_extend(alpha, aa.v_values, cfg.epsilon, cost);
    return g;
}

} // namespace sinkbary
