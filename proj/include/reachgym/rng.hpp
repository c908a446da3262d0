#pragma once

#include <cstdint>
#include <random>

namespace reachgym {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Independent stream per (seed, instance, purpose).
enum class Stream : std::uint64_t { Env = 1, Agent = 2, Trainer = 3, Init = 4, Eval = 5 };

inline Rng make_rng(std::uint64_t seed, std::uint64_t instance_id, Stream stream) {
    std::uint64_t s = splitmix64(seed);
    s = splitmix64(s ^ (instance_id * 0xD1B54A32D192ED03ull));
    s = splitmix64(s ^ static_cast<std::uint64_t>(stream));
    return Rng(s);
}

}  // namespace reachgym
