#ifndef SINKBARY_COST_HPP
#define SINKBARY_COST_HPP

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sinkbary/errors.hpp"

namespace sinkbary {

enum class CostKind { squared_euclidean, euclidean, user_matrix };

// Ground cost. For user_matrix the entries are keyed by atom index, so the
// cost is only defined on the fixed supports the matrix was built for.
struct CostSpec {
    CostKind kind = CostKind::squared_euclidean;
    std::optional<double> diameter;        // user override, must dominate every observed cost
    std::vector<double> matrix;            // row-major, user_matrix only
    int matrix_rows = 0;
    int matrix_cols = 0;

    bool analytic() const { return kind != CostKind::user_matrix; }
};

inline double cost_point(CostKind kind, const double* x, const double* y, int d) {
    double s = 0.0;
    for (int t = 0; t < d; ++t) {
        const double diff = x[t] - y[t];
        s += diff * diff;
    }
    return kind == CostKind::squared_euclidean ? s : std::sqrt(s);
}

// grad_x c(x, y); for the euclidean cost at x == y the zero subgradient is used.
inline void cost_grad(CostKind kind, const double* x, const double* y, int d, double* g) {
    if (kind == CostKind::user_matrix)
        throw UnsupportedCost("user-matrix cost has no spatial gradient");
    if (kind == CostKind::squared_euclidean) {
        for (int t = 0; t < d; ++t)
            g[t] = 2.0 * (x[t] - y[t]);
        return;
    }
    double s = 0.0;
    for (int t = 0; t < d; ++t) {
        const double diff = x[t] - y[t];
        s += diff * diff;
    }
    const double r = std::sqrt(s);
    if (r == 0.0) {
        for (int t = 0; t < d; ++t)
            g[t] = 0.0;
        return;
    }
    for (int t = 0; t < d; ++t)
        g[t] = (x[t] - y[t]) / r;
}

inline const char* cost_kind_name(CostKind k) {
    switch (k) {
    case CostKind::squared_euclidean: return "squared-euclidean";
    case CostKind::euclidean: return "euclidean";
    default: return "user-matrix";
    }
}

} // namespace sinkbary

#endif
