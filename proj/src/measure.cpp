#include "sinkbary/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>

#include "sinkbary/kernels.hpp"
#include "sinkbary/rng.hpp"

namespace sinkbary {

DiscreteMeasure new_measure(int dim, std::vector<double> points, std::vector<double> weights) {
    if (dim < 1)
        throw DimensionMismatch("dimension must be at least 1");
    if (weights.empty())
        throw EmptySupport("a measure needs at least one atom");
    if (points.size() != weights.size() * static_cast<size_t>(dim))
        throw DimensionMismatch("points array does not match n-atoms-by-dim");
    for (double w : weights)
        if (w < 0.0 || std::isnan(w))
            throw NegativeWeight("atom weights must be nonnegative");
    double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (std::abs(sum - 1.0) >= 1e-9) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "weights sum to %.17g, outside 1e-9 of 1", sum);
        throw WeightSumOutOfTolerance(buf);
    }
    if (sum != 1.0)
        for (double& w : weights)
            w /= sum;
    DiscreteMeasure m;
    m.dim = dim;
    m.xs = std::move(points);
    m.weights = std::move(weights);
    return m;
}

DiscreteMeasure new_measure_uniform(int dim, std::vector<double> points) {
    if (dim < 1)
        throw DimensionMismatch("dimension must be at least 1");
    if (points.empty() || points.size() % static_cast<size_t>(dim) != 0)
        throw DimensionMismatch("points array does not match n-atoms-by-dim");
    const size_t n = points.size() / static_cast<size_t>(dim);
    return new_measure(dim, std::move(points), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

DiscreteMeasure dirac(std::vector<double> point) {
    const int d = static_cast<int>(point.size());
    return new_measure(d, std::move(point), {1.0});
}

DiscreteMeasure consolidate(const DiscreteMeasure& m, double radius) {
    const int d = m.dim;
    std::vector<int> order;
    order.reserve(static_cast<size_t>(m.size()));
    for (int i = 0; i < m.size(); ++i)
        if (m.weights[static_cast<size_t>(i)] > 0.0)
            order.push_back(i);
    if (order.empty())
        throw EmptySupport("consolidate: measure has no mass");
    // Descending weight, index as the tie break.
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return m.weights[static_cast<size_t>(a)] > m.weights[static_cast<size_t>(b)];
    });

    std::vector<char> absorbed(static_cast<size_t>(m.size()), 0);
    DiscreteMeasure out;
    out.dim = d;
    const double r2 = radius * radius;
    for (int seed : order) {
        if (absorbed[static_cast<size_t>(seed)])
            continue;
        const double* sp = m.xs.data() + static_cast<long>(seed) * d;
        double wsum = 0.0;
        std::vector<double> centroid(static_cast<size_t>(d), 0.0);
        for (int j : order) {
            if (absorbed[static_cast<size_t>(j)])
                continue;
            const double* xp = m.xs.data() + static_cast<long>(j) * d;
            double dist2 = 0.0;
            for (int t = 0; t < d; ++t) {
                const double diff = sp[t] - xp[t];
                dist2 += diff * diff;
            }
            if (dist2 <= r2) {
                absorbed[static_cast<size_t>(j)] = 1;
                const double w = m.weights[static_cast<size_t>(j)];
                wsum += w;
                for (int t = 0; t < d; ++t)
                    centroid[static_cast<size_t>(t)] += w * xp[t];
            }
        }
        for (int t = 0; t < d; ++t)
            out.xs.push_back(centroid[static_cast<size_t>(t)] / wsum);
        out.weights.push_back(wsum);
    }
    return out;
}

double total_variation(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    if (a.dim != b.dim)
        throw DimensionMismatch("total_variation: dimension mismatch");
    const DiscreteMeasure ca = consolidate(a, 0.0);
    const DiscreteMeasure cb = consolidate(b, 0.0);
    std::map<std::vector<double>, double> delta;
    for (int i = 0; i < ca.size(); ++i) {
        std::vector<double> key(ca.xs.begin() + static_cast<long>(i) * ca.dim,
                                ca.xs.begin() + static_cast<long>(i + 1) * ca.dim);
        delta[key] += ca.weights[static_cast<size_t>(i)];
    }
    for (int i = 0; i < cb.size(); ++i) {
        std::vector<double> key(cb.xs.begin() + static_cast<long>(i) * cb.dim,
                                cb.xs.begin() + static_cast<long>(i + 1) * cb.dim);
        delta[key] -= cb.weights[static_cast<size_t>(i)];
    }
    double tv = 0.0;
    for (const auto& [key, diff] : delta)
        tv += std::abs(diff);
    return tv;
}

std::vector<double> cost_matrix(const DiscreteMeasure& a, const DiscreteMeasure& b,
                                const CostSpec& cost) {
    if (cost.kind == CostKind::user_matrix) {
        if (cost.matrix_rows != a.size() || cost.matrix_cols != b.size())
            throw DimensionMismatch("user cost matrix shape does not match the supports");
        return cost.matrix;
    }
    if (a.dim != b.dim)
        throw DimensionMismatch("cost_matrix: dimension mismatch");
    std::vector<double> C(static_cast<size_t>(a.size()) * static_cast<size_t>(b.size()));
    kernels::cost_fill(cost.kind, a.xs.data(), a.size(), b.xs.data(), b.size(), a.dim, C.data());
    return C;
}

DiscreteMeasure image_to_measure(const GrayImage& img, double pixel_extent) {
    if (img.width < 1 || img.height < 1 ||
        img.pixels.size() != static_cast<size_t>(img.width) * static_cast<size_t>(img.height))
        throw MalformedInput("image buffer does not match its dimensions");
    std::vector<double> pts;
    std::vector<double> ws;
    double sum = 0.0;
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            const double v = img.pixels[static_cast<size_t>(r) * img.width + c];
            if (v <= 0.0)
                continue;
            pts.push_back((r + 0.5) * pixel_extent);
            pts.push_back((c + 0.5) * pixel_extent);
            ws.push_back(v);
            sum += v;
        }
    }
    if (ws.empty())
        throw AllZeroImage("image has no nonzero pixel");
    for (double& w : ws)
        w /= sum;
    DiscreteMeasure m;
    m.dim = 2;
    m.xs = std::move(pts);
    m.weights = std::move(ws);
    return m;
}

namespace {

// Lower Cholesky factor of a d-by-d SPD matrix.
std::vector<double> cholesky(const std::vector<double>& cov, int d) {
    std::vector<double> L(static_cast<size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = cov[static_cast<size_t>(i) * d + j];
            for (int t = 0; t < j; ++t)
                s -= L[static_cast<size_t>(i) * d + t] * L[static_cast<size_t>(j) * d + t];
            if (i == j) {
                if (s <= 0.0)
                    throw NonPositiveDefiniteCovariance("covariance is not positive definite");
                L[static_cast<size_t>(i) * d + i] = std::sqrt(s);
            } else {
                L[static_cast<size_t>(i) * d + j] = s / L[static_cast<size_t>(j) * d + j];
            }
        }
    }
    return L;
}

void sample_gaussian_point(const GaussianSpec& g, const std::vector<double>& L, int d,
                           Rng& rng, double* out) {
    std::vector<double> z(static_cast<size_t>(d));
    for (int t = 0; t < d; ++t)
        z[static_cast<size_t>(t)] = rng.gaussian();
    for (int i = 0; i < d; ++i) {
        double s = g.mean[static_cast<size_t>(i)];
        for (int t = 0; t <= i; ++t)
            s += L[static_cast<size_t>(i) * d + t] * z[static_cast<size_t>(t)];
        out[i] = s;
    }
}

} // namespace

DiscreteMeasure sample_empirical(const SamplerSpec& spec, int n, std::uint64_t seed) {
    if (n < 1)
        throw EmptySupport("sample_empirical: n must be at least 1");
    Rng rng(seed, "sample-empirical");
    int d = 0;
    std::vector<double> pts;
    switch (spec.kind) {
    case SamplerSpec::Kind::gaussian: {
        d = static_cast<int>(spec.gaussian.mean.size());
        if (spec.gaussian.cov.size() != static_cast<size_t>(d) * d)
            throw DimensionMismatch("gaussian covariance shape mismatch");
        const auto L = cholesky(spec.gaussian.cov, d);
        pts.resize(static_cast<size_t>(n) * d);
        for (int i = 0; i < n; ++i)
            sample_gaussian_point(spec.gaussian, L, d, rng, pts.data() + static_cast<long>(i) * d);
        break;
    }
    case SamplerSpec::Kind::mixture: {
        const auto& mix = spec.mixture;
        if (mix.components.empty() || mix.components.size() != mix.weights.size())
            throw DimensionMismatch("mixture components and weights mismatch");
        d = static_cast<int>(mix.components.front().mean.size());
        std::vector<std::vector<double>> Ls;
        double wsum = 0.0;
        for (size_t c = 0; c < mix.components.size(); ++c) {
            if (mix.weights[c] < 0.0)
                throw NegativeWeight("mixture weights must be nonnegative");
            if (static_cast<int>(mix.components[c].mean.size()) != d ||
                mix.components[c].cov.size() != static_cast<size_t>(d) * d)
                throw DimensionMismatch("mixture component shape mismatch");
            Ls.push_back(cholesky(mix.components[c].cov, d));
            wsum += mix.weights[c];
        }
        pts.resize(static_cast<size_t>(n) * d);
        for (int i = 0; i < n; ++i) {
            const double u = rng.uniform() * wsum;
            size_t c = 0;
            double acc = mix.weights[0];
            while (c + 1 < mix.components.size() && u >= acc) {
                ++c;
                acc += mix.weights[c];
            }
            sample_gaussian_point(mix.components[c], Ls[c], d, rng,
                                  pts.data() + static_cast<long>(i) * d);
        }
        break;
    }
    case SamplerSpec::Kind::uniform_box: {
        d = spec.box.dim();
        if (d < 1 || spec.box.hi.size() != static_cast<size_t>(d))
            throw DimensionMismatch("uniform box shape mismatch");
        pts.resize(static_cast<size_t>(n) * d);
        for (int i = 0; i < n; ++i)
            for (int t = 0; t < d; ++t)
                pts[static_cast<size_t>(i) * d + t] =
                    rng.uniform(spec.box.lo[static_cast<size_t>(t)], spec.box.hi[static_cast<size_t>(t)]);
        break;
    }
    }
    return new_measure_uniform(d, std::move(pts));
}

Domain infer_domain(const std::vector<const DiscreteMeasure*>& measures) {
    int d = 0;
    for (const auto* m : measures)
        if (m && m->size() > 0) {
            d = m->dim;
            break;
        }
    if (d == 0)
        throw EmptySupport("infer_domain: no atoms");
    Domain box;
    box.lo.assign(static_cast<size_t>(d), std::numeric_limits<double>::infinity());
    box.hi.assign(static_cast<size_t>(d), -std::numeric_limits<double>::infinity());
    for (const auto* m : measures) {
        if (!m)
            continue;
        if (m->dim != d)
            throw DimensionMismatch("infer_domain: dimension mismatch");
        for (int i = 0; i < m->size(); ++i)
            for (int t = 0; t < d; ++t) {
                const double x = m->xs[static_cast<size_t>(i) * d + t];
                box.lo[static_cast<size_t>(t)] = std::min(box.lo[static_cast<size_t>(t)], x);
                box.hi[static_cast<size_t>(t)] = std::max(box.hi[static_cast<size_t>(t)], x);
            }
    }
    double max_extent = 0.0;
    for (int t = 0; t < d; ++t)
        max_extent = std::max(max_extent, box.hi[static_cast<size_t>(t)] - box.lo[static_cast<size_t>(t)]);
    const double base = max_extent > 0.0 ? max_extent : 10.0;
    for (int t = 0; t < d; ++t) {
        double pad = 0.05 * (box.hi[static_cast<size_t>(t)] - box.lo[static_cast<size_t>(t)]);
        if (pad <= 0.0)
            pad = 0.05 * base;
        box.lo[static_cast<size_t>(t)] -= pad;
        box.hi[static_cast<size_t>(t)] += pad;
    }
    return box;
}

std::vector<double> measure_mean(const DiscreteMeasure& m) {
    std::vector<double> mu(static_cast<size_t>(m.dim), 0.0);
    for (int i = 0; i < m.size(); ++i)
        for (int t = 0; t < m.dim; ++t)
            mu[static_cast<size_t>(t)] += m.weights[static_cast<size_t>(i)] * m.xs[static_cast<size_t>(i) * m.dim + t];
    return mu;
}

std::vector<double> measure_covariance(const DiscreteMeasure& m) {
    const auto mu = measure_mean(m);
    const int d = m.dim;
    std::vector<double> cov(static_cast<size_t>(d) * d, 0.0);
    for (int i = 0; i < m.size(); ++i) {
        const double w = m.weights[static_cast<size_t>(i)];
        for (int r = 0; r < d; ++r) {
            const double dr = m.xs[static_cast<size_t>(i) * d + r] - mu[static_cast<size_t>(r)];
            for (int c = 0; c < d; ++c) {
                const double dc = m.xs[static_cast<size_t>(i) * d + c] - mu[static_cast<size_t>(c)];
                cov[static_cast<size_t>(r) * d + c] += w * dr * dc;
            }
        }
    }
    return cov;
}

} // namespace sinkbary
