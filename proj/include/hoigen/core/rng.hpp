#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hoigen {

/// Deterministic random stream. Uniform and normal draws are computed from the raw
/// 64-bit engine output so results do not depend on the standard library's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Mixes a root seed with a stream name into an independent sub-stream seed.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream);

/// Same, with an additional integer index (per-sequence, per-window, ...).
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream, std::uint64_t index);

}  // namespace hoigen
