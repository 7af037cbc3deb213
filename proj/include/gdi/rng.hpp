#pragma once

#include <cstdint>
#include <random>

namespace gdi {

// Role tags keep per-component RNG streams disjoint for a given run seed.
enum class Role : uint32_t {
  env = 1,
  actor = 2,
  learner = 3,
  controller = 4,
  harness = 5,
};

inline std::mt19937_64 make_stream(uint64_t seed, Role role, uint32_t id = 0) {
  std::seed_seq seq{static_cast<uint32_t>(seed & 0xffffffffu),
                    static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(role), id};
  return std::mt19937_64(seq);
}

}  // namespace gdi
