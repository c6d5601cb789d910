#include "nhb/rng.hpp"

#include <cmath>

namespace nhb {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& c,
                         const std::array<std::uint32_t, 2>& k) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * c[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * c[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

inline double u64_to_unit(std::uint64_t x) {
  // 53-bit mantissa, offset by half an ulp so the result is in (0, 1).
  return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    philox_round(counter, key);
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return counter;
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

GaussianStream::GaussianStream(std::uint64_t seed, std::uint64_t chain) {
  key64_ = splitmix64(splitmix64(seed) ^ splitmix64(chain + 0x632BE59BD9B4E019ull));
}

namespace {

// One philox block -> two uniforms in (0,1).
inline void block_uniforms(std::uint64_t key64, std::uint64_t step,
                           std::uint32_t attempt, std::uint32_t block,
                           std::uint32_t space, double& u0, double& u1) {
  const std::array<std::uint32_t, 2> key = {
      static_cast<std::uint32_t>(key64),
      static_cast<std::uint32_t>(key64 >> 32)};
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
      block, attempt ^ (space << 28)};
  const auto w = philox4x32(ctr, key);
  const std::uint64_t a = (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
  const std::uint64_t b = (static_cast<std::uint64_t>(w[2]) << 32) | w[3];
  u0 = u64_to_unit(a);
  u1 = u64_to_unit(b);
}

}  // namespace

void GaussianStream::fill(std::uint64_t step, std::uint32_t attempt,
                          std::span<double> out) const {
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; i += 2) {
    double u0, u1;
    block_uniforms(key64_, step, attempt, static_cast<std::uint32_t>(i / 2), 0u,
                   u0, u1);
    const double r = std::sqrt(-2.0 * std::log(u0));
    const double theta = 2.0 * M_PI * u1;
    out[i] = r * std::cos(theta);
    if (i + 1 < n) out[i + 1] = r * std::sin(theta);
  }
}

void GaussianStream::fill_uniform(std::uint64_t step, std::uint32_t attempt,
                                  std::span<double> out) const {
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; i += 2) {
    double u0, u1;
    block_uniforms(key64_, step, attempt, static_cast<std::uint32_t>(i / 2), 1u,
                   u0, u1);
    out[i] = u0;
    if (i + 1 < n) out[i + 1] = u1;
  }
}

Pcg64::Pcg64(std::uint64_t seed) : state_(splitmix64(seed)) {}

std::uint64_t Pcg64::next_u64() {
  state_ = state_ * 6364136223846793005ull + 1442695040888963407ull;
  std::uint64_t x = state_;
  x ^= x >> 32;
  x *= 0xd6e8feb86659fd93ull;
  x ^= x >> 32;
  x *= 0xd6e8feb86659fd93ull;
  x ^= x >> 32;
  return x;
}

double Pcg64::uniform() { return u64_to_unit(next_u64()); }

double Pcg64::uniform(double a, double b) { return a + (b - a) * uniform(); }

double Pcg64::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u0 = uniform();
  const double u1 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u0));
  const double theta = 2.0 * M_PI * u1;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

}  // namespace nhb
