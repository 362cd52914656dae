#include "sinkbary/kernels.hpp"

#include <cmath>
#include <limits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sinkbary/parallel.hpp"

namespace sinkbary {

namespace {
int g_workers = 0;
} // namespace

int worker_count() {
#ifdef _OPENMP
    if (g_workers <= 0)
        return omp_get_max_threads();
#else
    if (g_workers <= 0)
        return 1;
#endif
    return g_workers;
}

void set_worker_count(int n) { g_workers = n; }

} // namespace sinkbary

namespace sinkbary::kernels {

namespace {

// Shifted log-sum-exp over terms[i] = logw[i] + (pot[i] - C[idx(i)]) / eps,
// strided access into one row or column of C. neg_inf when every term is
// -inf (cannot happen for valid inputs: weights are positive).
inline double lse_term(const double* C, long stride, int n, const double* pot,
                       const double* logw, double inv_eps) {
    double m = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double t = logw[i] + (pot[i] - C[stride * i]) * inv_eps;
        if (t > m)
            m = t;
    }
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        s += std::exp(logw[i] + (pot[i] - C[stride * i]) * inv_eps - m);
    return m + std::log(s);
}

inline double cost_sq(const double* x, const double* y, int d) {
    double s = 0.0;
    for (int t = 0; t < d; ++t) {
        const double diff = x[t] - y[t];
        s += diff * diff;
    }
    return s;
}

} // namespace

void dual_colsweep_serial(const double* C, int n1, int n2, const double* pot,
                          const double* logw, double eps, double* out) {
    const double inv_eps = 1.0 / eps;
    for (int j = 0; j < n2; ++j)
        out[j] = -eps * lse_term(C + j, n2, n1, pot, logw, inv_eps);
}

void dual_colsweep(const double* C, int n1, int n2, const double* pot,
                   const double* logw, double eps, double* out) {
    const double inv_eps = 1.0 / eps;
#pragma omp parallel for schedule(static) num_threads(worker_count()) if (n2 > 16)
    for (int j = 0; j < n2; ++j)
        out[j] = -eps * lse_term(C + j, n2, n1, pot, logw, inv_eps);
}

void dual_rowsweep_serial(const double* C, int n1, int n2, const double* pot,
                          const double* logw, double eps, double* out) {
    const double inv_eps = 1.0 / eps;
    for (int i = 0; i < n1; ++i)
        out[i] = -eps * lse_term(C + static_cast<long>(i) * n2, 1, n2, pot, logw, inv_eps);
}

void dual_rowsweep(const double* C, int n1, int n2, const double* pot,
                   const double* logw, double eps, double* out) {
    const double inv_eps = 1.0 / eps;
#pragma omp parallel for schedule(static) num_threads(worker_count()) if (n1 > 16)
    for (int i = 0; i < n1; ++i)
        out[i] = -eps * lse_term(C + static_cast<long>(i) * n2, 1, n2, pot, logw, inv_eps);
}

void cost_fill_serial(CostKind kind, const double* X, int nx, const double* Y, int ny,
                      int d, double* C) {
    const bool sq = kind == CostKind::squared_euclidean;
    for (int i = 0; i < nx; ++i) {
        const double* x = X + static_cast<long>(i) * d;
        double* row = C + static_cast<long>(i) * ny;
        for (int j = 0; j < ny; ++j) {
            const double s = cost_sq(x, Y + static_cast<long>(j) * d, d);
            row[j] = sq ? s : std::sqrt(s);
        }
    }
}

void cost_fill(CostKind kind, const double* X, int nx, const double* Y, int ny,
               int d, double* C) {
    const bool sq = kind == CostKind::squared_euclidean;
#pragma omp parallel for schedule(static) num_threads(worker_count()) if (nx > 8)
    for (int i = 0; i < nx; ++i) {
        const double* x = X + static_cast<long>(i) * d;
        double* row = C + static_cast<long>(i) * ny;
        for (int j = 0; j < ny; ++j) {
            const double s = cost_sq(x, Y + static_cast<long>(j) * d, d);
            row[j] = sq ? s : std::sqrt(s);
        }
    }
}

namespace {

inline double potential_one(CostKind kind, const double* Y, int n, int d,
                            const double* logb, const double* v, double inv_eps,
                            double eps, const double* q) {
    const bool sq = kind == CostKind::squared_euclidean;
    double m = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double s = cost_sq(q, Y + static_cast<long>(i) * d, d);
        const double c = sq ? s : std::sqrt(s);
        const double t = logb[i] + (v[i] - c) * inv_eps;
        if (t > m)
            m = t;
    }
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double s = cost_sq(q, Y + static_cast<long>(i) * d, d);
        const double c = sq ? s : std::sqrt(s);
        acc += std::exp(logb[i] + (v[i] - c) * inv_eps - m);
    }
    return -eps * (m + std::log(acc));
}

} // namespace

void potential_batch_serial(CostKind kind, const double* Y, int n, int d,
                            const double* logb, const double* v, double eps,
                            const double* Q, int nq, double* out) {
    const double inv_eps = 1.0 / eps;
    for (int q = 0; q < nq; ++q)
        out[q] = potential_one(kind, Y, n, d, logb, v, inv_eps, eps,
                               Q + static_cast<long>(q) * d);
}

void potential_batch(CostKind kind, const double* Y, int n, int d,
                     const double* logb, const double* v, double eps,
                     const double* Q, int nq, double* out) {
    const double inv_eps = 1.0 / eps;
#pragma omp parallel for schedule(static) num_threads(worker_count()) if (nq > 8)
    for (int q = 0; q < nq; ++q)
        out[q] = potential_one(kind, Y, n, d, logb, v, inv_eps, eps,
                               Q + static_cast<long>(q) * d);
}

double rbf_weighted_sum_serial(const double* X, const double* wa, int nx,
                               const double* Y, const double* wb, int ny,
                               int d, double gamma) {
    // Two-phase even in serial: per-row partials, then a fixed-order sum,
    // so the parallel version reproduces the same rounding.
    std::vector<double> partial(static_cast<size_t>(nx));
    for (int i = 0; i < nx; ++i) {
        const double* x = X + static_cast<long>(i) * d;
        double s = 0.0;
        for (int j = 0; j < ny; ++j)
            s += wb[j] * std::exp(-gamma * cost_sq(x, Y + static_cast<long>(j) * d, d));
        partial[static_cast<size_t>(i)] = wa[i] * s;
    }
    double total = 0.0;
    for (int i = 0; i < nx; ++i)
        total += partial[static_cast<size_t>(i)];
    return total;
}

double rbf_weighted_sum(const double* X, const double* wa, int nx,
                        const double* Y, const double* wb, int ny,
                        int d, double gamma) {
    std::vector<double> partial(static_cast<size_t>(nx));
#pragma omp parallel for schedule(static) num_threads(worker_count()) if (nx > 8)
    for (int i = 0; i < nx; ++i) {
        const double* x = X + static_cast<long>(i) * d;
        double s = 0.0;
        for (int j = 0; j < ny; ++j)
            s += wb[j] * std::exp(-gamma * cost_sq(x, Y + static_cast<long>(j) * d, d));
        partial[static_cast<size_t>(i)] = wa[i] * s;
    }
    double total = 0.0;
    for (int i = 0; i < nx; ++i)
        total += partial[static_cast<size_t>(i)];
    return total;
}

} // namespace sinkbary::kernels
