#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace etpa {

using Rng = std::mt19937_64;

/// Independent generator keyed by (seed, tags...). Same key, same stream,
/// regardless of the order or thread in which streams are created.
inline Rng derive_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
    std::vector<std::uint32_t> words;
    words.reserve(2 + 2 * tags.size());
    auto push = [&](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(seed);
    for (auto t : tags)
        push(t);
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

// Stream tags.
namespace stream {
inline constexpr std::uint64_t system = 0x5359;
inline constexpr std::uint64_t noise = 0x4e4f;
inline constexpr std::uint64_t split = 0x5350;
inline constexpr std::uint64_t init = 0x494e;
inline constexpr std::uint64_t cell = 0x4345;
} // namespace stream

} // namespace etpa
