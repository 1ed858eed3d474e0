#pragma once

#include <array>
#include <cstdint>

namespace qtraj {

/// Counter-based random stream (Philox 4x32-10). A stream is addressed by
/// (master_seed, stream_id); draws within a stream are addressed by a block
/// counter. Streams are independent by construction, so replicas can be
/// sampled in any order or in parallel and still produce identical output.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
      : key0_(static_cast<std::uint32_t>(master_seed)),
        key1_(static_cast<std::uint32_t>(master_seed >> 32)),
        stream_lo_(static_cast<std::uint32_t>(stream_id)),
        stream_hi_(static_cast<std::uint32_t>(stream_id >> 32)) {}

  std::uint64_t next_u64() {
    if (buffered_ == 0) refill();
    --buffered_;
    return buf_[buffered_];
  }

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; pairs are cached.
  double gaussian();

  std::uint64_t block_counter() const { return block_; }
  void skip_to_block(std::uint64_t block) {
    block_ = block;
    buffered_ = 0;
    have_g_ = false;
  }

 private:
  void refill();

  std::uint32_t key0_, key1_;
  std::uint32_t stream_lo_, stream_hi_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buf_{};
  int buffered_ = 0;
  bool have_g_ = false;
  double g_cache_ = 0.0;
};

}  // namespace qtraj
