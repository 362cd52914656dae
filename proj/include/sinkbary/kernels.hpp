#ifndef SINKBARY_KERNELS_HPP
#define SINKBARY_KERNELS_HPP

#include "sinkbary/cost.hpp"

namespace sinkbary::kernels {

// Data-parallel inner loops shared by the solvers. Every kernel has a
// *_serial twin with the identical per-element operation order; the parallel
// versions split work over independent output elements (or accumulate
// fixed-order partials for scalar reductions), so outputs are bitwise equal
// to the serial twins at any worker count.

// out[j] = -eps * logsumexp_i(logw[i] + (pot[i] - C[i*n2+j]) / eps),  j in [0, n2)
void dual_colsweep(const double* C, int n1, int n2, const double* pot,
                   const double* logw, double eps, double* out);
void dual_colsweep_serial(const double* C, int n1, int n2, const double* pot,
                          const double* logw, double eps, double* out);

// out[i] = -eps * logsumexp_j(logw[j] + (pot[j] - C[i*n2+j]) / eps),  i in [0, n1)
void dual_rowsweep(const double* C, int n1, int n2, const double* pot,
                   const double* logw, double eps, double* out);
void dual_rowsweep_serial(const double* C, int n1, int n2, const double* pot,
                          const double* logw, double eps, double* out);

// Row-major nx-by-ny cost matrix for an analytic cost kind.
void cost_fill(CostKind kind, const double* X, int nx, const double* Y, int ny,
               int d, double* C);
void cost_fill_serial(CostKind kind, const double* X, int nx, const double* Y, int ny,
                      int d, double* C);

// out[q] = -eps * logsumexp_i(logb[i] + (v[i] - c(Q_q, Y_i)) / eps) over query points.
void potential_batch(CostKind kind, const double* Y, int n, int d,
                     const double* logb, const double* v, double eps,
                     const double* Q, int nq, double* out);
void potential_batch_serial(CostKind kind, const double* Y, int n, int d,
                            const double* logb, const double* v, double eps,
                            const double* Q, int nq, double* out);

// sum_{i,j} wa[i] * wb[j] * exp(-gamma * |X_i - Y_j|^2)
double rbf_weighted_sum(const double* X, const double* wa, int nx,
                        const double* Y, const double* wb, int ny,
                        int d, double gamma);
double rbf_weighted_sum_serial(const double* X, const double* wa, int nx,
                               const double* Y, const double* wb, int ny,
                               int d, double gamma);

} // namespace sinkbary::kernels

#endif
