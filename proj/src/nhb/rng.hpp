#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace nhb {

/// Philox4x32-10 counter-based generator.  A (key, counter) pair maps to
/// four 32-bit words; there is no sequential state, so draws can be
/// indexed by (chain, step, block) and reproduced under any scheduling.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// SplitMix64 finalizer, used to derive stream keys.
std::uint64_t splitmix64(std::uint64_t z);

/// Stateless stream of standard Gaussians keyed by (seed, chain).
/// Draws for a given (step, attempt) are independent of every other
/// (step, attempt) pair and of the order in which they are requested.
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint64_t chain);

  /// Fill `out` with standard normal draws for the given step.
  /// `attempt` distinguishes retries of the same step (boundary policy).
  void fill(std::uint64_t step, std::uint32_t attempt,
            std::span<double> out) const;

  /// Uniform draws in (0, 1), same keying scheme, separate block space.
  void fill_uniform(std::uint64_t step, std::uint32_t attempt,
                    std::span<double> out) const;

  std::uint64_t key() const { return key64_; }

 private:
  std::uint64_t key64_;
};

/// Small sequential PRNG for internal sampling tasks (certification sweeps,
/// roadmap construction) where only seedability matters.
class Pcg64 {
 public:
  explicit Pcg64(std::uint64_t seed);
  std::uint64_t next_u64();
  double uniform();                    // in (0, 1)
  double uniform(double a, double b);  // in (a, b)
  double normal();

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace nhb
