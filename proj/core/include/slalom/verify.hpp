#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "slalom/field.hpp"
#include "slalom/kernels.hpp"
#include "slalom/model.hpp"
#include "slalom/prf.hpp"

namespace slalom {

struct SoundnessConfig {
  int k = 2;          // independent repetitions per check
  FieldParams field;  // modulus and check range S = [-rho, rho]

  int64_t rho() const { return field.check_range_bound; }
  int64_t set_size() const { return field.check_set_size(); }
  double per_layer_bound() const { return std::pow(static_cast<double>(set_size()), -k); }
  double run_bound(int64_t n_linear) const { return n_linear * per_layer_bound(); }
  double soundness_bits() const { return k * std::log2(static_cast<double>(set_size())); }

  void validate() const;  // k >= 1 and valid field params
  // at least 40 bits of statistical soundness per layer; tiny-S test
  // configurations fail this and are confined to experiment commands
  bool production_strength() const { return soundness_bits() >= 40.0; }
};

enum class Verdict { accept, reject };

// Freivalds check on a batched product Y = X * W, k repetitions with a fresh
// s in S^B each: accept iff (s^T X) W == s^T Y over Z_p.
// Multiplications per repetition: B*(m+n) + m*n.
Verdict check_plain_matmul(const FieldTensor& X, const FieldTensor& W, const FieldTensor& Y,
                           const SoundnessConfig& cfg, PrfStream& prf,
                           OpCounter* counter = nullptr, std::string_view label = "check/matmul");

// Kernel-folding check for a convolution: sample s in S^{c_out}, fold the
// kernel along output channels and compare Conv(x, W s) with y s.
// Multiplications per repetition: |y| + k^2*c_in*c_out + |x|*k^2 (k=1 for a
// pointwise convolution, where this reduces to |x| + |y| + c_in*c_out).
Verdict check_conv_folded(const FieldTensor& x, const FieldTensor& weight, const FieldTensor& y,
                          int64_t stride, const SoundnessConfig& cfg, PrfStream& prf,
                          OpCounter* counter = nullptr, std::string_view label = "check/conv");

// Depthwise layers have no channel mixing to fold, so reduce the batch with
// s in S^B and recompute once on the reduced input.
// Multiplications per repetition: B*(|x| + |y|) + |x|*k^2.
Verdict check_depthwise_folded(const std::vector<const FieldTensor*>& X,
                               const FieldTensor& weight,
                               const std::vector<const FieldTensor*>& Y, int64_t stride,
                               const SoundnessConfig& cfg, PrfStream& prf,
                               OpCounter* counter = nullptr,
                               std::string_view label = "check/depthwise");

// Per-run verification secrets: k master check vectors (reused across
// layers), plus folded vectors s~ = W^T s per checkable unit. A unit is one
// linear layer, or a depthwise+pointwise pair with no activation in between,
// verified as a single linear operator.
struct FreivaldsSecret {
  int k = 0;
  std::vector<FieldTensor> s;                      // [rep], length = max unit |y|
  std::vector<std::vector<FieldTensor>> s_tilde;   // [rep][unit], length |x_unit|
  std::vector<int64_t> x_sizes, y_sizes;           // per unit

  int64_t unit_count() const { return static_cast<int64_t>(x_sizes.size()); }
};

FreivaldsSecret precompute_secrets(const ModelGraph& model, const SoundnessConfig& cfg,
                                   PrfStream& prf, bool fuse_separable = true,
                                   OpCounter* counter = nullptr);

// Lemma-2 check with preprocessing: accept iff y^T s == x^T s~ for all k
// repetitions. Multiplications: k * (|x| + |y|).
Verdict check_preprocessed(const FieldTensor& x, const FieldTensor& y,
                           const FreivaldsSecret& secret, int64_t unit_index,
                           const SoundnessConfig& cfg, OpCounter* counter = nullptr,
                           std::string_view label = "check/preproc");

// Apply the transposed linear operator of a layer to a check vector:
// s~ = W^T s, exactly over Z_p. Used by precompute_secrets and validated
// against the explicit operator matrix in the tests.
FieldTensor transpose_apply(const LayerSpec& layer, const FieldTensor& s,
                            const FieldParams& params, OpCounter* counter = nullptr);

enum class TamperKind { none, single_entry, whole_row, scale, replace };
std::string tamper_kind_name(TamperKind t);

struct SoundnessResult {
  int64_t trials = 0;
  int64_t accepts = 0;
  double rate = 0;
  double ci_lo = 0, ci_hi = 0;   // 99% Clopper-Pearson interval
  double analytic_bound = 0;     // (1/|S|)^k
  bool pass = false;
  // exact acceptance fraction over every check-vector tuple; only filled for
  // exhaustive runs on small S
  int64_t exhaustive_accepts = -1;
  int64_t exhaustive_total = -1;
  double exhaustive_rate() const {
    return exhaustive_total > 0 ? static_cast<double>(exhaustive_accepts) / exhaustive_total : -1;
  }
};

// Monte-Carlo acceptance-rate measurement for a tampered (or honest) layer
// of the given kind under k-repetition checks with tiny S. With exhaustive
// set, additionally enumerates all of S^|y| per repetition on a small layer
// to obtain the exact acceptance fraction.
SoundnessResult soundness_experiment(LayerKind kind, TamperKind tamper,
                                     const SoundnessConfig& cfg, int64_t trials, uint64_t seed,
                                     bool exhaustive = false);

// 99% Clopper-Pearson interval for x successes in n trials.
void clopper_pearson_99(int64_t x, int64_t n, double* lo, double* hi);

}  // namespace slalom
