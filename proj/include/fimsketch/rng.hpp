#pragma once

#include <cstdint>
#include <random>

namespace fimsketch {

// splitmix64; used to hash (seed, stream ids) into an engine seed so that
// substreams indexed by loop position are independent of evaluation order.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed) { return splitmix64(seed); }

template <class... Ids>
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t id, Ids... rest) {
    return mix_seed(splitmix64(seed ^ splitmix64(id)), rest...);
}

// Counter-based substream: engine fully determined by (seed, ids...).
template <class... Ids>
std::mt19937_64 substream(std::uint64_t seed, Ids... ids) {
    return std::mt19937_64(mix_seed(seed, static_cast<std::uint64_t>(ids)...));
}

}  // namespace fimsketch
