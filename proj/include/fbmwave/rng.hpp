#pragma once

#include <cstdint>
#include <random>

namespace fbmwave {

using Rng = std::mt19937_64;

/// Independent random streams used by one experiment. Every stream is keyed
/// by (master seed, purpose, index) so results never depend on scheduling.
enum class Stream : std::uint32_t {
  ensemble_path = 1,
  kernel_path = 2,
  pollution = 3,
  single_path = 4,
};

inline Rng make_rng(std::uint64_t master_seed, Stream stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

/// 64-bit seed for the index-th member of a stream.
inline std::uint64_t derive_seed(std::uint64_t master_seed, Stream stream, std::uint64_t index) {
  Rng rng = make_rng(master_seed, stream, index);
  return rng();
}

}  // namespace fbmwave
