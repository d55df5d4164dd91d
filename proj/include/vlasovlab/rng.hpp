#pragma once

// Reproducible random streams. A stream is identified by the master seed and
// a short path of indices (for example {scale index, replica index}); its
// 64-bit seed is obtained by folding each index into the master seed with
// the splitmix64 finalizer:
//
//   s = splitmix64(master)
//   for each index i:  s = splitmix64(s ^ splitmix64(i + 0x9e3779b97f4a7c15))
//
// and the engine is std::mt19937_64 seeded with s. Any implementation of
// this recipe reproduces the same streams.

#include <cstdint>
#include <initializer_list>
#include <random>

namespace vlasovlab {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t stream_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept
{
    std::uint64_t s = splitmix64(master);
    for (std::uint64_t i : path) s = splitmix64(s ^ splitmix64(i + 0x9e3779b97f4a7c15ULL));
    return s;
}

inline Rng make_stream(std::uint64_t master, std::initializer_list<std::uint64_t> path)
{
    return Rng(stream_seed(master, path));
}

}  // namespace vlasovlab
