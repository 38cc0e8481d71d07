#include "slalom/blinding.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <cstring>
#include <stdexcept>

#include "plan.hpp"
#include "slalom/kernels.hpp"

namespace slalom {

// ---------------------------------------------------------------------------
// wire encoding

std::vector<uint8_t> encode_elems(std::span<const double> values) {
  std::vector<uint8_t> out;
  out.reserve(values.size() * kWireElemBytes);
  for (double v : values) {
    int32_t q = static_cast<int32_t>(v);
    uint32_t bits = static_cast<uint32_t>(q);
    out.push_back(static_cast<uint8_t>(bits));
    out.push_back(static_cast<uint8_t>(bits >> 8));
    out.push_back(static_cast<uint8_t>(bits >> 16));
    out.push_back(static_cast<uint8_t>(bits >> 24));
  }
  return out;
}

std::vector<double> decode_elems(std::span<const uint8_t> bytes) {
  if (bytes.size() % kWireElemBytes != 0) {
    throw std::invalid_argument("decode_elems: byte count not a multiple of 4");
  }
  std::vector<double> out(bytes.size() / kWireElemBytes);
  for (size_t i = 0; i < out.size(); ++i) {
    const uint8_t* p = bytes.data() + 4 * i;
    uint32_t bits = static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
                    (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
    out[i] = static_cast<double>(static_cast<int32_t>(bits));
  }
  return out;
}

std::string sha256_hex(std::span<const uint8_t> bytes) {
  uint8_t digest[32];
  SHA256(bytes.data(), bytes.size(), digest);
  static const char* hex = "0123456789abcdef";
  std::string out(64, '0');
  for (int i = 0; i < 32; ++i) {
    out[2 * i] = hex[digest[i] >> 4];
    out[2 * i + 1] = hex[digest[i] & 0xf];
  }
  return out;
}

// ---------------------------------------------------------------------------
// untrusted store / tape

void UntrustedStore::put(uint64_t run_id, int unit_index, std::vector<uint8_t> blob) {
  blobs[{run_id, unit_index}] = std::move(blob);
}

const std::vector<uint8_t>& UntrustedStore::fetch(uint64_t run_id, int unit_index) const {
  auto it = blobs.find({run_id, unit_index});
  if (it == blobs.end()) {
    throw std::runtime_error("untrusted store: no sealed record for run " +
                             std::to_string(run_id) + " unit " + std::to_string(unit_index));
  }
  return it->second;
}

int64_t UntrustedStore::total_bytes() const {
  int64_t n = 0;
  for (const auto& [k, v] : blobs) n += static_cast<int64_t>(v.size());
  return n;
}

TapeRecord& BlindingTape::claim(int unit_index) {
  for (auto& rec : records) {
    if (rec.unit_index == unit_index) {
      if (rec.used) {
        throw std::runtime_error("blinding tape: record for unit " + std::to_string(unit_index) +
                                 " already consumed (one-time use)");
      }
      rec.used = true;
      return rec;
    }
  }
  throw std::runtime_error("blinding tape: no record for unit " + std::to_string(unit_index));
}

int64_t BlindingTape::plaintext_elems() const {
  int64_t n = 0;
  for (const auto& rec : records) n += rec.u_size;
  return n;
}

namespace {

std::string blind_tag(uint64_t run_id) { return "blind/" + std::to_string(run_id); }

PrfKey derive_seal_key(const PrfKey& key) {
  uint8_t digest[32];
  std::vector<uint8_t> msg(key.begin(), key.end());
  const char* label = "seal";
  msg.insert(msg.end(), label, label + 4);
  SHA256(msg.data(), msg.size(), digest);
  PrfKey out;
  std::memcpy(out.data(), digest, out.size());
  return out;
}

}  // namespace

FieldTensor regen_blinding(const PrfKey& key, uint64_t run_id, const TapeRecord& record,
                           const FieldParams& params) {
  PrfStream stream(key, blind_tag(run_id), record.prf_counter);
  return prf_field_stream(stream, record.r_size, SampleRange::full_field, params);
}

FieldTensor blind(const FieldTensor& x, const FieldTensor& r, const FieldParams& params) {
  if (x.size() != r.size()) throw std::invalid_argument("blind: size mismatch");
  FieldTensor rr = r.reshaped(x.shape);
  return field_add(x, rr, params);
}

FieldTensor unblind(const FieldTensor& y_blinded, const FieldTensor& u, const FieldParams& params) {
  if (y_blinded.size() != u.size()) throw std::invalid_argument("unblind: size mismatch");
  FieldTensor uu = u.reshaped(y_blinded.shape);
  return field_sub(y_blinded, uu, params);
}

std::vector<uint8_t> seal(std::span<const double> u, const PrfKey& key, uint64_t run_id,
                          uint32_t unit_index, std::span<const uint8_t> nonce12) {
  if (nonce12.size() != 12) throw std::invalid_argument("seal: nonce must be 12 bytes");
  std::vector<uint8_t> plain = encode_elems(u);

  std::vector<uint8_t> blob(24 + plain.size() + 16);
  for (int i = 0; i < 8; ++i) blob[static_cast<size_t>(i)] = static_cast<uint8_t>(run_id >> (8 * i));
  for (int i = 0; i < 4; ++i) blob[8 + static_cast<size_t>(i)] = static_cast<uint8_t>(unit_index >> (8 * i));
  std::memcpy(blob.data() + 12, nonce12.data(), 12);

  PrfKey seal_key = derive_seal_key(key);
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  if (!ctx) throw std::runtime_error("EVP_CIPHER_CTX_new failed");
  int len = 0;
  bool ok = EVP_EncryptInit_ex(ctx, EVP_aes_128_gcm(), nullptr, nullptr, nullptr) == 1 &&
            EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_SET_IVLEN, 12, nullptr) == 1 &&
            EVP_EncryptInit_ex(ctx, nullptr, nullptr, seal_key.data(), blob.data() + 12) == 1 &&
            EVP_EncryptUpdate(ctx, nullptr, &len, blob.data(), 24) == 1 &&  // header as AAD
            EVP_EncryptUpdate(ctx, blob.data() + 24, &len, plain.data(),
                              static_cast<int>(plain.size())) == 1;
  int fin_len = 0;
  ok = ok && EVP_EncryptFinal_ex(ctx, blob.data() + 24 + plain.size(), &fin_len) == 1 &&
       EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_GET_TAG, 16, blob.data() + 24 + plain.size()) == 1;
  EVP_CIPHER_CTX_free(ctx);
  if (!ok) throw std::runtime_error("seal: AES-GCM encryption failed");
  return blob;
}

std::vector<double> open_sealed(std::span<const uint8_t> blob, const PrfKey& key,
                                uint64_t expected_run_id, uint32_t expected_unit_index) {
  if (blob.size() < 24 + 16) throw std::runtime_error("open_sealed: blob too short");
  uint64_t run_id = 0;
  for (int i = 0; i < 8; ++i) run_id |= static_cast<uint64_t>(blob[static_cast<size_t>(i)]) << (8 * i);
  uint32_t unit = 0;
  for (int i = 0; i < 4; ++i) unit |= static_cast<uint32_t>(blob[8 + static_cast<size_t>(i)]) << (8 * i);
  if (run_id != expected_run_id || unit != expected_unit_index) {
    throw std::runtime_error("open_sealed: sealed record header does not match request");
  }
  const size_t cipher_len = blob.size() - 24 - 16;

  PrfKey seal_key = derive_seal_key(key);
  std::vector<uint8_t> plain(cipher_len);
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  if (!ctx) throw std::runtime_error("EVP_CIPHER_CTX_new failed");
  int len = 0;
  std::vector<uint8_t> tag(blob.end() - 16, blob.end());
  bool ok = EVP_DecryptInit_ex(ctx, EVP_aes_128_gcm(), nullptr, nullptr, nullptr) == 1 &&
            EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_SET_IVLEN, 12, nullptr) == 1 &&
            EVP_DecryptInit_ex(ctx, nullptr, nullptr, seal_key.data(), blob.data() + 12) == 1 &&
            EVP_DecryptUpdate(ctx, nullptr, &len, blob.data(), 24) == 1 &&
            EVP_DecryptUpdate(ctx, plain.data(), &len, blob.data() + 24,
                              static_cast<int>(cipher_len)) == 1 &&
            EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_SET_TAG, 16, tag.data()) == 1;
  int fin_len = 0;
  ok = ok && EVP_DecryptFinal_ex(ctx, plain.data() + cipher_len, &fin_len) == 1;
  EVP_CIPHER_CTX_free(ctx);
  if (!ok) throw std::runtime_error("open_sealed: authentication failed");
  return decode_elems(plain);
}

BlindingTape precompute_tape(const ModelGraph& model, const PrfKey& key, uint64_t run_id,
                             UntrustedStore& store, const FieldParams& params,
                             bool fuse_separable) {
  if (!model.quantized) throw std::invalid_argument("precompute_tape: model not quantized");
  detail::Plan plan = detail::build_plan(model, fuse_separable);

  BlindingTape tape;
  tape.run_id = run_id;
  PrfStream nonce_stream(key, "seal-nonce/" + std::to_string(run_id));
  uint64_t counter = 0;
  PrfStream r_stream(key, blind_tag(run_id));

  for (const auto& unit : plan.units) {
    TapeRecord rec;
    rec.unit_index = unit.unit_index;
    rec.prf_counter = counter;
    rec.r_size = unit.x_size;
    rec.u_size = unit.y_size;

    r_stream.seek(counter);
    FieldTensor r = prf_field_stream(r_stream, unit.x_size, SampleRange::full_field, params);
    counter = r_stream.counter();

    // u = f(r) with the exact kernels, bias-free
    FieldTensor u = r.reshaped(unit.in_shape);
    for (const LayerSpec* op : unit.ops) {
      u = linear_forward(*op, u, /*with_bias=*/false, params);
    }

    std::array<uint8_t, 12> nonce{};
    for (int i = 0; i < 3; ++i) {
      uint32_t wv = nonce_stream.next_word();
      std::memcpy(nonce.data() + 4 * i, &wv, 4);
    }
    store.put(run_id, unit.unit_index,
              seal(std::span<const double>(u.ptr(), static_cast<size_t>(u.size())), key, run_id,
                   static_cast<uint32_t>(unit.unit_index), nonce));
    tape.records.push_back(rec);
  }
  return tape;
}

}  // namespace slalom
