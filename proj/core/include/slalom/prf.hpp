#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "slalom/field.hpp"

namespace slalom {

using PrfKey = std::array<uint8_t, 16>;

PrfKey key_from_seed(uint64_t seed, std::string_view label);
PrfKey key_from_bytes(std::span<const uint8_t> bytes);

// Deterministic keyed keystream (AES-128-CTR). The same (key, domain_tag,
// counter) always yields the same words; distinct tags give independent
// streams. The counter tracks 32-bit words consumed.
class PrfStream {
 public:
  PrfStream(const PrfKey& key, std::string_view domain_tag, uint64_t counter = 0);

  uint64_t counter() const { return word_pos_; }
  void seek(uint64_t word_counter);

  uint32_t next_word();

  // Uniform draw from [0, m) by rejection sampling on the low bits of
  // keystream words. No modulo bias.
  uint64_t uniform_below(uint64_t m);

  const std::string& domain_tag() const { return tag_; }

 private:
  void refill();

  PrfKey key_;
  std::string tag_;
  std::array<uint8_t, 8> iv_prefix_;
  uint64_t word_pos_ = 0;
  std::vector<uint32_t> buf_;
  size_t buf_off_ = 0;
  uint64_t buf_start_word_ = 0;
};

// count pseudorandom field elements, centered. full_field draws uniformly
// from Z_p, check_range from S = [-rho, rho].
FieldTensor prf_field_stream(PrfStream& stream, int64_t count, SampleRange range,
                             const FieldParams& params);

}  // namespace slalom
