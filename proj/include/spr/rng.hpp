#pragma once

#include <cstdint>
#include <random>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace spr {

/// Reproducibility token. A seed never produces random numbers itself; it is
/// turned into a Stream, or into child seeds for independent substreams.
class Seed {
public:
    constexpr explicit Seed(std::uint64_t value) : value_(value) {}

    constexpr std::uint64_t value() const { return value_; }

    /// Deterministic child seed. Distinct indices give statistically
    /// independent streams; the mapping is fixed across platforms.
    Seed child(std::uint64_t index) const;

    friend constexpr bool operator==(Seed, Seed) = default;

private:
    std::uint64_t value_;
};

/// Named child-seed tags, so that different consumers of one master seed
/// never share a substream.
namespace stream_tag {
inline constexpr std::uint64_t draws = 0x6472617773ULL;
inline constexpr std::uint64_t resample = 0x7265736dULL;
inline constexpr std::uint64_t replicate = 0x7265706cULL;
inline constexpr std::uint64_t generate = 0x67656e65ULL;
inline constexpr std::uint64_t oracle = 0x6f72636cULL;
inline constexpr std::uint64_t setting = 0x73657474ULL;
} // namespace stream_tag

/// A single-owner pseudo-random stream (64-bit Mersenne Twister, ziggurat normals).
class Stream {
public:
    explicit Stream(Seed seed);

    double normal() { return normal_(engine_); }
    double normal(double mean, double sd) { return mean + sd * normal_(engine_); }

    /// Uniform index in [0, n).
    std::size_t index(std::size_t n);

private:
    boost::random::mt19937_64 engine_;
    boost::random::normal_distribution<double> normal_;
};

} // namespace spr
