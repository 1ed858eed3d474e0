#include "qtraj/rng.hpp"

#include <cmath>

namespace qtraj {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::uint32_t c[4], std::uint32_t k0, std::uint32_t k1) {
  std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
  std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
  std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  std::uint32_t out[4] = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
  c[0] = out[0];
  c[1] = out[1];
  c[2] = out[2];
  c[3] = out[3];
}

}  // namespace

void RngStream::refill() {
  std::uint32_t c[4] = {static_cast<std::uint32_t>(block_),
                        static_cast<std::uint32_t>(block_ >> 32), stream_lo_, stream_hi_};
  std::uint32_t k0 = key0_, k1 = key1_;
  for (int r = 0; r < 10; ++r) {
    philox_round(c, k0, k1);
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  buf_[0] = (static_cast<std::uint64_t>(c[1]) << 32) | c[0];
  buf_[1] = (static_cast<std::uint64_t>(c[3]) << 32) | c[2];
  buffered_ = 2;
  ++block_;
}

double RngStream::gaussian() {
  if (have_g_) {
    have_g_ = false;
    return g_cache_;
  }
  double u1 = uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log1p(-u1));  // u1 in [0,1) so 1-u1 in (0,1]
  double a = 6.283185307179586476925286766559 * u2;
  g_cache_ = r * std::sin(a);
  have_g_ = true;
  return r * std::cos(a);
}

}  // namespace qtraj
