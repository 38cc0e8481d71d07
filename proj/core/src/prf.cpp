#include "slalom/prf.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <bit>
#include <cstring>
#include <stdexcept>

namespace slalom {

namespace {

constexpr size_t kRefillWords = 1024;  // 4 KiB of keystream per cipher call

void sha256(std::span<const uint8_t> in, uint8_t out[32]) {
  SHA256(in.data(), in.size(), out);
}

}  // namespace

PrfKey key_from_seed(uint64_t seed, std::string_view label) {
  std::vector<uint8_t> msg(label.begin(), label.end());
  for (int i = 0; i < 8; ++i) msg.push_back(static_cast<uint8_t>(seed >> (8 * i)));
  uint8_t digest[32];
  sha256(msg, digest);
  PrfKey key;
  std::memcpy(key.data(), digest, key.size());
  return key;
}

PrfKey key_from_bytes(std::span<const uint8_t> bytes) {
  if (bytes.size() < 16) {
    throw std::invalid_argument("PRF key must be at least 128 bits");
  }
  PrfKey key;
  std::memcpy(key.data(), bytes.data(), key.size());
  return key;
}

PrfStream::PrfStream(const PrfKey& key, std::string_view domain_tag, uint64_t counter)
    : key_(key), tag_(domain_tag) {
  uint8_t digest[32];
  sha256(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(tag_.data()), tag_.size()),
         digest);
  std::memcpy(iv_prefix_.data(), digest, iv_prefix_.size());
  seek(counter);
}

void PrfStream::seek(uint64_t word_counter) {
  word_pos_ = word_counter;
  buf_.clear();
  buf_off_ = 0;
}

void PrfStream::refill() {
  // keystream = AES-CTR encryption of zeros; counter block is iv_prefix || block index
  uint64_t block = word_pos_ / 4;
  uint64_t skip_words = word_pos_ % 4;

  uint8_t iv[16];
  std::memcpy(iv, iv_prefix_.data(), 8);
  for (int i = 0; i < 8; ++i) iv[8 + i] = static_cast<uint8_t>(block >> (8 * (7 - i)));

  static thread_local std::vector<uint8_t> zeros(kRefillWords * 4, 0);
  std::vector<uint8_t> stream(kRefillWords * 4);

  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  if (!ctx) throw std::runtime_error("EVP_CIPHER_CTX_new failed");
  int out_len = 0;
  if (EVP_EncryptInit_ex(ctx, EVP_aes_128_ctr(), nullptr, key_.data(), iv) != 1 ||
      EVP_EncryptUpdate(ctx, stream.data(), &out_len, zeros.data(),
                        static_cast<int>(zeros.size())) != 1) {
    EVP_CIPHER_CTX_free(ctx);
    throw std::runtime_error("AES-CTR keystream generation failed");
  }
  EVP_CIPHER_CTX_free(ctx);

  buf_.resize(kRefillWords);
  for (size_t i = 0; i < kRefillWords; ++i) {
    uint32_t w;
    std::memcpy(&w, stream.data() + 4 * i, 4);
    if constexpr (std::endian::native == std::endian::big) w = __builtin_bswap32(w);
    buf_[i] = w;
  }
  buf_start_word_ = block * 4;
  buf_off_ = skip_words;
}

uint32_t PrfStream::next_word() {
  if (buf_off_ >= buf_.size() || buf_start_word_ + buf_off_ != word_pos_) refill();
  uint32_t w = buf_[buf_off_++];
  ++word_pos_;
  return w;
}

uint64_t PrfStream::uniform_below(uint64_t m) {
  if (m == 0) throw std::invalid_argument("uniform_below(0)");
  if (m == 1) return 0;
  int bits = 64 - std::countl_zero(m - 1);
  if (bits > 32) throw std::invalid_argument("uniform_below: range too large for 32-bit draws");
  const uint32_t mask = bits == 32 ? 0xffffffffu : ((uint32_t{1} << bits) - 1);
  for (;;) {
    uint32_t v = next_word() & mask;
    if (v < m) return v;
  }
}

FieldTensor prf_field_stream(PrfStream& stream, int64_t count, SampleRange range,
                             const FieldParams& params) {
  if (count < 0) throw std::invalid_argument("prf_field_stream: negative count");
  FieldTensor out({count});
  if (range == SampleRange::full_field) {
    const uint64_t p = static_cast<uint64_t>(params.p);
    const int64_t half = params.half();
    for (int64_t i = 0; i < count; ++i) {
      int64_t v = static_cast<int64_t>(stream.uniform_below(p));
      out[i] = static_cast<double>(v > half ? v - params.p : v);
    }
  } else {
    const uint64_t set = static_cast<uint64_t>(params.check_set_size());
    const int64_t rho = params.check_range_bound;
    for (int64_t i = 0; i < count; ++i) {
      int64_t v = static_cast<int64_t>(stream.uniform_below(set));
      out[i] = static_cast<double>(v - rho);
    }
  }
  return out;
}

}  // namespace slalom
