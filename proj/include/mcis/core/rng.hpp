#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace mcis {

// Philox4x32-10 block function (Salmon et al. 2011). Stateless: maps a
// 128-bit counter and 64-bit key to 128 pseudo-random bits.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key);
};

// Purpose tags for substream derivation. The numeric values are part of the
// reproducibility contract: changing them changes every seeded result.
enum class StreamTag : std::uint64_t {
  kSimulate = 1,
  kPrior = 2,
  kProposal = 3,
  kAccept = 4,
  kFilter = 5,
  kApprox = 6,
  kStageTwo = 7,
  kAudit = 8,
  kPhaseTwo = 9,
  kLevel = 10,
  kLevelZero = 11,
  kReplicate = 12,
  kInit = 13,
  kDelta = 14,
  kChain = 15,
};

// Counter-based random stream. A stream is identified by a 64-bit key; child
// streams are derived from (parent key, tag, indices) only, so the values a
// child produces do not depend on how many draws the parent has made or on
// which worker thread runs it.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed);

  RngStream substream(std::initializer_list<std::uint64_t> keys) const;
  RngStream substream(StreamTag tag, std::uint64_t a = 0, std::uint64_t b = 0,
                      std::uint64_t c = 0) const {
    return substream({static_cast<std::uint64_t>(tag), a, b, c});
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  // Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  double normal();
  double exponential();
  // Uniform integer in [0, n), n > 0. Unbiased (rejection).
  std::uint64_t below(std::uint64_t n);

  std::uint64_t key() const { return key_; }

 private:
  struct FromKey {};
  RngStream(FromKey, std::uint64_t key);

  void refill();

  std::uint64_t key_;
  Philox4x32::Counter counter_{};
  std::array<std::uint64_t, 2> block_{};
  int used_ = 2;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace mcis
