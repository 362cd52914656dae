#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "sinkbary/kernels.hpp"
#include "sinkbary/parallel.hpp"
#include "sinkbary/rng.hpp"

using namespace sinkbary;

namespace {

struct Instance {
    int n1, n2, d;
    std::vector<double> X, Y, C, pot, logw_rows, logw_cols, w_rows, w_cols;
};

Instance make_instance(std::uint64_t seed, int n1, int n2, int d) {
    Instance ins;
    ins.n1 = n1;
    ins.n2 = n2;
    ins.d = d;
    Rng rng(seed, "kernel-test");
    ins.X.resize(static_cast<size_t>(n1) * d);
    ins.Y.resize(static_cast<size_t>(n2) * d);
    for (double& x : ins.X)
        x = rng.uniform(-2.0, 2.0);
    for (double& y : ins.Y)
        y = rng.uniform(-2.0, 2.0);
    ins.C.resize(static_cast<size_t>(n1) * n2);
    kernels::cost_fill_serial(CostKind::squared_euclidean, ins.X.data(), n1, ins.Y.data(), n2, d,
                              ins.C.data());
    ins.pot.resize(static_cast<size_t>(std::max(n1, n2)));
    for (double& p : ins.pot)
        p = rng.uniform(-1.0, 1.0);
    auto weights = [&rng](int n, std::vector<double>& w, std::vector<double>& logw) {
        w.resize(static_cast<size_t>(n));
        double sum = 0.0;
        for (double& x : w) {
            x = rng.uniform(0.05, 1.0);
            sum += x;
        }
        for (double& x : w)
            x /= sum;
        logw.resize(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i)
            logw[static_cast<size_t>(i)] = std::log(w[static_cast<size_t>(i)]);
    };
    weights(n1, ins.w_rows, ins.logw_rows);
    weights(n2, ins.w_cols, ins.logw_cols);
    return ins;
}

} // namespace

TEST_CASE("parallel kernels are bitwise equal to their serial twins") {
    // Oversubscribed thread count exercises the parallel path even on one core.
    const int saved = worker_count();
    for (int workers : {1, 2, 4}) {
        set_worker_count(workers);
        for (int idx = 0; idx < 6; ++idx) {
            const Instance ins = make_instance(1000 + static_cast<std::uint64_t>(idx),
                                               30 + 17 * idx, 25 + 23 * idx, 1 + idx % 3);
            const double eps = 0.05 + 0.1 * idx;

            std::vector<double> out_p(static_cast<size_t>(ins.n2));
            std::vector<double> out_s(static_cast<size_t>(ins.n2));
            kernels::dual_colsweep(ins.C.data(), ins.n1, ins.n2, ins.pot.data(),
                                   ins.logw_rows.data(), eps, out_p.data());
            kernels::dual_colsweep_serial(ins.C.data(), ins.n1, ins.n2, ins.pot.data(),
                                          ins.logw_rows.data(), eps, out_s.data());
            CHECK(out_p == out_s);

            std::vector<double> row_p(static_cast<size_t>(ins.n1));
            std::vector<double> row_s(static_cast<size_t>(ins.n1));
            kernels::dual_rowsweep(ins.C.data(), ins.n1, ins.n2, ins.pot.data(),
                                   ins.logw_cols.data(), eps, row_p.data());
            kernels::dual_rowsweep_serial(ins.C.data(), ins.n1, ins.n2, ins.pot.data(),
                                          ins.logw_cols.data(), eps, row_s.data());
            CHECK(row_p == row_s);

            std::vector<double> cp(ins.C.size());
            std::vector<double> cs(ins.C.size());
            kernels::cost_fill(CostKind::squared_euclidean, ins.X.data(), ins.n1, ins.Y.data(),
                               ins.n2, ins.d, cp.data());
            kernels::cost_fill_serial(CostKind::squared_euclidean, ins.X.data(), ins.n1,
                                      ins.Y.data(), ins.n2, ins.d, cs.data());
            CHECK(cp == cs);
            kernels::cost_fill(CostKind::euclidean, ins.X.data(), ins.n1, ins.Y.data(), ins.n2,
                               ins.d, cp.data());
            kernels::cost_fill_serial(CostKind::euclidean, ins.X.data(), ins.n1, ins.Y.data(),
                                      ins.n2, ins.d, cs.data());
            CHECK(cp == cs);

            std::vector<double> q_p(static_cast<size_t>(ins.n1));
            std::vector<double> q_s(static_cast<size_t>(ins.n1));
            kernels::potential_batch(CostKind::squared_euclidean, ins.Y.data(), ins.n2, ins.d,
                                     ins.logw_cols.data(), ins.pot.data(), eps, ins.X.data(),
                                     ins.n1, q_p.data());
            kernels::potential_batch_serial(CostKind::squared_euclidean, ins.Y.data(), ins.n2,
                                            ins.d, ins.logw_cols.data(), ins.pot.data(), eps,
                                            ins.X.data(), ins.n1, q_s.data());
            CHECK(q_p == q_s);

            const double r_p = kernels::rbf_weighted_sum(ins.X.data(), ins.w_rows.data(), ins.n1,
                                                         ins.Y.data(), ins.w_cols.data(), ins.n2,
                                                         ins.d, 3.7);
            const double r_s = kernels::rbf_weighted_sum_serial(ins.X.data(), ins.w_rows.data(),
                                                                ins.n1, ins.Y.data(),
                                                                ins.w_cols.data(), ins.n2, ins.d,
                                                                3.7);
            CHECK(r_p == r_s);
        }
    }
    set_worker_count(saved);
}

TEST_CASE("colsweep matches a naive direct evaluation") {
    const Instance ins = make_instance(7, 12, 9, 2);
    const double eps = 0.3;
    std::vector<double> out(static_cast<size_t>(ins.n2));
    kernels::dual_colsweep_serial(ins.C.data(), ins.n1, ins.n2, ins.pot.data(),
                                  ins.logw_rows.data(), eps, out.data());
    for (int j = 0; j < ins.n2; ++j) {
        double s = 0.0;
        for (int i = 0; i < ins.n1; ++i)
            s += ins.w_rows[static_cast<size_t>(i)] *
                 std::exp((ins.pot[static_cast<size_t>(i)] -
                           ins.C[static_cast<size_t>(i) * ins.n2 + j]) /
                          eps);
        CHECK(out[static_cast<size_t>(j)] == doctest::Approx(-eps * std::log(s)).epsilon(1e-12));
    }
}

TEST_CASE("rbf_weighted_sum matches the double loop") {
    const Instance ins = make_instance(8, 10, 11, 3);
    const double gamma = 1.3;
    const double got = kernels::rbf_weighted_sum_serial(ins.X.data(), ins.w_rows.data(), ins.n1,
                                                        ins.Y.data(), ins.w_cols.data(), ins.n2,
                                                        ins.d, gamma);
    double want = 0.0;
    for (int i = 0; i < ins.n1; ++i)
        for (int j = 0; j < ins.n2; ++j) {
            double d2 = 0.0;
            for (int t = 0; t < ins.d; ++t) {
                const double d = ins.X[static_cast<size_t>(i) * ins.d + t] -
                                 ins.Y[static_cast<size_t>(j) * ins.d + t];
                d2 += d * d;
            }
            want += ins.w_rows[static_cast<size_t>(i)] * ins.w_cols[static_cast<size_t>(j)] *
                    std::exp(-gamma * d2);
        }
    CHECK(got == doctest::Approx(want).epsilon(1e-13));
}

TEST_CASE("sweeps stay finite under extreme scale separation") {
    // Saturating inputs overflow a naive exp sum; the shifted evaluation must
    // return finite values.
    const int n = 4;
    std::vector<double> C = {0.0, 1.0, 2.0, 3.0, 1.0, 0.0, 1.0, 2.0,
                             2.0, 1.0, 0.0, 1.0, 3.0, 2.0, 1.0, 0.0};
    std::vector<double> pot = {4000.0, -4000.0, 0.0, 2000.0};
    std::vector<double> logw(static_cast<size_t>(n), std::log(0.25));
    std::vector<double> out(static_cast<size_t>(n));
    kernels::dual_colsweep_serial(C.data(), n, n, pot.data(), logw.data(), 1e-3, out.data());
    for (double v : out)
        CHECK(std::isfinite(v));
}
