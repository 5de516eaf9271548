#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Dense>

namespace factorbreak {

// Seed derivation for independent sub-streams.
//
// Every consumer of randomness draws from its own stream, identified by
// (base seed, purpose tag, optional indices).  Streams derived with
// different tags or indices are statistically independent, so e.g. the
// factor draws of a simulation do not move when the error draws change.
//
//   stream id = mix(base ^ fnv1a(tag), idx_a, idx_b)
//
// where mix is the splitmix64 output function applied to the running state.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::uint64_t idx_a = 0, std::uint64_t idx_b = 0);

// One reproducible random stream.
//
// The engine is std::mt19937_64 (its integer output is pinned down by the
// standard, hence identical on every platform).  Normal variates use the
// Marsaglia polar transform on top of 53-bit uniforms instead of
// std::normal_distribution, whose output is implementation-defined.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    // Uniform on [0, 1) with 53 random bits.
    double uniform01();

    // Standard normal variate.
    double normal();

    // rows x cols matrix of independent standard normals, filled row-major
    // so row t holds the t-th batch of draws.
    Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

}  // namespace factorbreak
