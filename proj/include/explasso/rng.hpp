#pragma once

#include <cstdint>
#include <random>

namespace explasso {

// splitmix64 finalizer; used to turn (seed, index) pairs into well-mixed
// engine seeds so parallel workers get independent, reproducible streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic sub-stream seed. derive_seed(s, i) != derive_seed(s, j)
// for i != j with overwhelming probability; the result is itself a valid
// seed for further derivation, giving a tree of streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
    return std::mt19937_64(splitmix64(seed));
}

}  // namespace explasso
