#pragma once

#include <cstdint>
#include <random>

namespace hwd {

/// SplitMix64 finaliser; used only to derive well-separated engine seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent random stream for replication `index` of stream family `stream`.
/// Results depend only on (seed, stream, index), never on scheduling.
inline std::mt19937_64 stream_for(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    const std::uint64_t key = mix64(mix64(seed ^ mix64(stream)) + index);
    std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index)};
    return std::mt19937_64(seq);
}

// Stream families, so that e.g. a redraw never reuses a replication stream.
namespace streams {
inline constexpr std::uint64_t ratio_test = 0x5241544fULL;
inline constexpr std::uint64_t ratio_redraw = 0x52445257ULL;
inline constexpr std::uint64_t sd_test = 0x53445453ULL;
inline constexpr std::uint64_t residual_sd = 0x52455344ULL;
inline constexpr std::uint64_t synth = 0x53594e54ULL;
inline constexpr std::uint64_t kmeans = 0x4b4d4e53ULL;
} // namespace streams

} // namespace hwd
