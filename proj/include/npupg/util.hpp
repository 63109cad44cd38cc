#pragma once
// Small shared helpers and error types.

#include <cstdint>
#include <stdexcept>
#include <string>

namespace npupg {

// Configuration / input errors: bad files, bad flag values. CLI maps these to exit 2.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Model invariant violations detected while building or running: CLI exit 3.
class SimError : public std::runtime_error {
public:
  explicit SimError(const std::string& msg) : std::runtime_error(msg) {}
};

inline uint64_t ceil_div_u64(uint64_t a, uint64_t b) { return (a + b - 1) / b; }

inline bool is_pow2_u64(uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

inline uint64_t floor_pow2_u64(uint64_t v) {
  if (v == 0) return 0;
  uint64_t p = 1;
  while (p * 2 != 0 && p * 2 <= v) p *= 2;
  return p;
}

inline uint64_t ceil_pow2_u64(uint64_t v) {
  if (v <= 1) return 1;
  uint64_t p = 1;
  while (p < v) p *= 2;
  return p;
}

inline uint64_t align_up_u64(uint64_t v, uint64_t a) { return ceil_div_u64(v, a) * a; }

// Deterministic xorshift-style generator for test pattern sweeps; independent of
// libc++ distribution details so frozen expected values stay stable everywhere.
struct SplitMix64 {
  uint64_t state = 0x9e3779b97f4a7c15ull;
  explicit SplitMix64(uint64_t seed) : state(seed) {}
  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  // Unbiased-enough range draw for test sweeps.
  uint64_t below(uint64_t n) { return n == 0 ? 0 : next() % n; }
  double unit() { return double(next() >> 11) * (1.0 / 9007199254740992.0); }
};

std::string format_double(double v);  // shortest round-trip decimal, deterministic

}  // namespace npupg
