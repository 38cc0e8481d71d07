#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "slalom/field.hpp"
#include "slalom/model.hpp"
#include "slalom/prf.hpp"
#include "slalom/wire.hpp"

namespace slalom {

// Keyed blob map owned by the untrusted side; holds sealed unblinding
// factors between the offline and online phases.
struct UntrustedStore {
  std::map<std::pair<uint64_t, int>, std::vector<uint8_t>> blobs;

  void put(uint64_t run_id, int unit_index, std::vector<uint8_t> blob);
  const std::vector<uint8_t>& fetch(uint64_t run_id, int unit_index) const;
  int64_t total_bytes() const;
};

struct TapeRecord {
  int unit_index = 0;
  uint64_t prf_counter = 0;  // anchor for regenerating the blinding factor r
  int64_t r_size = 0;        // |x| of the unit
  int64_t u_size = 0;        // |y| of the unit
  bool used = false;
};

// Trusted-side tape metadata for one inference: the blinding factors are
// regenerated from (key, run_id), never stored; the unblinding factors live
// sealed in the untrusted store.
struct BlindingTape {
  uint64_t run_id = 0;
  std::vector<TapeRecord> records;

  // one-time claim; throws on reuse
  TapeRecord& claim(int unit_index);
  int64_t plaintext_elems() const;  // sum of |y| across records
};

// Offline phase: generate per-unit blinding factors r, compute u = f(r) with
// the exact trusted kernels (bias-free), seal u and hand the blobs to the
// untrusted store.
BlindingTape precompute_tape(const ModelGraph& model, const PrfKey& key, uint64_t run_id,
                             UntrustedStore& store, const FieldParams& params,
                             bool fuse_separable = true);

// Regenerate the blinding factor of a claimed record.
FieldTensor regen_blinding(const PrfKey& key, uint64_t run_id, const TapeRecord& record,
                           const FieldParams& params);

FieldTensor blind(const FieldTensor& x, const FieldTensor& r, const FieldParams& params);
FieldTensor unblind(const FieldTensor& y_blinded, const FieldTensor& u, const FieldParams& params);

// Sealed-blob layout (byte-exact):
//   [0,8)   run_id, u64 LE
//   [8,12)  unit_index, u32 LE
//   [12,24) nonce, 12 bytes
//   [24,24+4n) AES-128-GCM ciphertext of the u elements (4-byte LE each)
//   [24+4n, 24+4n+16) GCM tag
// The 24-byte header is authenticated as associated data.
std::vector<uint8_t> seal(std::span<const double> u, const PrfKey& key, uint64_t run_id,
                          uint32_t unit_index, std::span<const uint8_t> nonce12);

// Throws on any authentication failure (flipped bit, wrong key, header
// mismatch).
std::vector<double> open_sealed(std::span<const uint8_t> blob, const PrfKey& key,
                                uint64_t expected_run_id, uint32_t expected_unit_index);

}  // namespace slalom
