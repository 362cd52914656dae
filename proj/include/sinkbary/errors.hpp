#ifndef SINKBARY_ERRORS_HPP
#define SINKBARY_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sinkbary {

// Base class for input validation failures; the CLI maps these to exit code 2.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionMismatch : ValidationError {
    explicit DimensionMismatch(const std::string& msg) : ValidationError(msg) {}
};

struct NegativeWeight : ValidationError {
    explicit NegativeWeight(const std::string& msg) : ValidationError(msg) {}
};

struct WeightSumOutOfTolerance : ValidationError {
    explicit WeightSumOutOfTolerance(const std::string& msg) : ValidationError(msg) {}
};

struct EmptySupport : ValidationError {
    explicit EmptySupport(const std::string& msg) : ValidationError(msg) {}
};

struct AllZeroImage : ValidationError {
    explicit AllZeroImage(const std::string& msg) : ValidationError(msg) {}
};

struct NonPositiveDefiniteCovariance : ValidationError {
    explicit NonPositiveDefiniteCovariance(const std::string& msg) : ValidationError(msg) {}
};

struct UnsupportedCost : ValidationError {
    explicit UnsupportedCost(const std::string& msg) : ValidationError(msg) {}
};

struct DiameterTooSmall : ValidationError {
    explicit DiameterTooSmall(const std::string& msg) : ValidationError(msg) {}
};

struct EmptyCluster : ValidationError {
    explicit EmptyCluster(const std::string& msg) : ValidationError(msg) {}
};

struct DisconnectedUnknownVertex : ValidationError {
    explicit DisconnectedUnknownVertex(const std::string& msg) : ValidationError(msg) {}
};

struct MalformedInput : ValidationError {
    explicit MalformedInput(const std::string& msg) : ValidationError(msg) {}
};

} // namespace sinkbary

#endif
