#include "spr/rng.hpp"

namespace spr {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

Seed Seed::child(std::uint64_t index) const {
    return Seed(splitmix64(splitmix64(value_) ^ splitmix64(index + 0x5bd1e995ULL)));
}

Stream::Stream(Seed seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed.value() & 0xffffffffULL),
                      static_cast<std::uint32_t>(seed.value() >> 32)};
    engine_.seed(seq);
}

std::size_t Stream::index(std::size_t n) {
    boost::random::uniform_int_distribution<std::size_t> dist(0, n - 1);
    return dist(engine_);
}

} // namespace spr
