#ifndef SINKBARY_MEASURE_HPP
#define SINKBARY_MEASURE_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "sinkbary/cost.hpp"
#include "sinkbary/errors.hpp"

namespace sinkbary {

// Discrete probability measure: n atoms in R^d, nonnegative weights summing
// to 1 within 1e-12 after construction. Point i occupies xs[i*dim .. i*dim+d).
struct DiscreteMeasure {
    int dim = 0;
    std::vector<double> xs;      // n * dim, row-major
    std::vector<double> weights; // n

    int size() const { return static_cast<int>(weights.size()); }
    std::span<const double> point(int i) const {
        return {xs.data() + static_cast<long>(i) * dim, static_cast<size_t>(dim)};
    }
};

// Axis-aligned bounding box; the compact domain the continuous minimizer
// searches and uniform starts are drawn from.
struct Domain {
    std::vector<double> lo;
    std::vector<double> hi;

    int dim() const { return static_cast<int>(lo.size()); }
};

// Grayscale image buffer (row-major, top row first), intensities in [0, 255].
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> pixels; // height * width
};

// Validates and normalizes; rejects when |sum(w) - 1| >= 1e-9, renormalizes
// smaller deviations. Throws DimensionMismatch, NegativeWeight,
// WeightSumOutOfTolerance, EmptySupport.
DiscreteMeasure new_measure(int dim, std::vector<double> points, std::vector<double> weights);

// Uniform weights.
DiscreteMeasure new_measure_uniform(int dim, std::vector<double> points);

DiscreteMeasure dirac(std::vector<double> point);

// Total variation distance with TV(delta_x, delta_y) = 2 for x != y.
// Both sides are consolidated at radius 0 first, then atoms are matched by
// exact coordinates.
double total_variation(const DiscreteMeasure& a, const DiscreteMeasure& b);

// Greedy merge in descending weight order: the heaviest unmerged atom absorbs
// every atom within euclidean distance radius, replaced by their
// weight-weighted centroid. Exact-zero-weight atoms are dropped first.
// Total mass is preserved.
DiscreteMeasure consolidate(const DiscreteMeasure& m, double radius);

// Row-major cost matrix c(x_i, y_j). For user_matrix the stored matrix is
// returned after a shape check against the two supports.
std::vector<double> cost_matrix(const DiscreteMeasure& a, const DiscreteMeasure& b,
                                const CostSpec& cost);

// Pixel intensities to a measure: atom per nonzero pixel at the pixel center
// scaled by pixel_extent, weights proportional to intensity. Row r, column c
// maps to ((r + 0.5) * pixel_extent, (c + 0.5) * pixel_extent).
// Throws AllZeroImage when every pixel is zero.
DiscreteMeasure image_to_measure(const GrayImage& img, double pixel_extent);

struct GaussianSpec {
    std::vector<double> mean;
    std::vector<double> cov; // d * d row-major, symmetric positive definite
};

struct MixtureSpec {
    std::vector<GaussianSpec> components;
    std::vector<double> weights;
};

struct SamplerSpec {
    enum class Kind { gaussian, mixture, uniform_box } kind = Kind::gaussian;
    GaussianSpec gaussian;
    MixtureSpec mixture;
    Domain box;
};

// n atoms of weight 1/n; bit-reproducible for a fixed (spec, n, seed).
DiscreteMeasure sample_empirical(const SamplerSpec& spec, int n, std::uint64_t seed);

// Bounding box of a set of atom lists, padded by 5% of the per-axis extent.
Domain infer_domain(const std::vector<const DiscreteMeasure*>& measures);

// sum_i a_i f(x_i)
template <typename F>
double pairing(const DiscreteMeasure& m, F&& f) {
    double s = 0.0;
    for (int i = 0; i < m.size(); ++i)
        s += m.weights[static_cast<size_t>(i)] * f(m.point(i));
    return s;
}

// Weighted mean and covariance of the atom cloud.
std::vector<double> measure_mean(const DiscreteMeasure& m);
std::vector<double> measure_covariance(const DiscreteMeasure& m);

} // namespace sinkbary

#endif
