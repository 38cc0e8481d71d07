#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "slalom/field.hpp"
#include "slalom/model.hpp"
#include "slalom/quantize.hpp"

namespace slalom {

struct OpCounter {
  int64_t multiplications = 0;
  int64_t additions = 0;
  std::map<std::string, int64_t> per_layer;

  void add_mults(std::string_view label, int64_t m) {
    multiplications += m;
    per_layer[std::string(label)] += m;
  }
  void add_adds(int64_t a) { additions += a; }
  void reset() { *this = OpCounter{}; }
  void merge(const OpCounter& other);
};

// Exact Z_p matrix product a[r,k] * b[k,n] with blockwise deferred reduction.
// The block width is derived from the operands' actual magnitudes so no
// partial sum can leave the exact-double range.
FieldTensor field_matmul(const FieldTensor& a, const FieldTensor& b, const FieldParams& params,
                         OpCounter* counter = nullptr, std::string_view label = "matmul");

// Patch extraction for same-padding convolution: [h,w,c] -> [ho*wo, k*k*c].
FieldTensor im2col(const FieldTensor& x, int64_t k, int64_t stride);

// Forward kernels. Inputs at scale l, weights at scale l, bias at the scale
// of the produced pre-activation; pass bias = nullptr for the bias-free
// outsourced relation y = x * W.
FieldTensor fc_forward(const FieldTensor& x, const FieldTensor& weight, const FieldTensor* bias,
                       const FieldParams& params, OpCounter* counter = nullptr,
                       std::string_view label = "fc");
FieldTensor conv2d_forward(const FieldTensor& x, const FieldTensor& weight, const FieldTensor* bias,
                           int64_t stride, const FieldParams& params, OpCounter* counter = nullptr,
                           std::string_view label = "conv2d");
FieldTensor depthwise_forward(const FieldTensor& x, const FieldTensor& weight,
                              const FieldTensor* bias, int64_t stride, const FieldParams& params,
                              OpCounter* counter = nullptr,
                              std::string_view label = "depthwise");
FieldTensor pointwise_forward(const FieldTensor& x, const FieldTensor& weight,
                              const FieldTensor* bias, const FieldParams& params,
                              OpCounter* counter = nullptr, std::string_view label = "pointwise");

// Dispatch on a linear LayerSpec (quantized weights), bias optional.
FieldTensor linear_forward(const LayerSpec& layer, const FieldTensor& x, bool with_bias,
                           const FieldParams& params, OpCounter* counter = nullptr);

// Multiplication cost of evaluating a linear layer on one input.
int64_t linear_cost(const LayerSpec& layer);

FieldTensor add_bias(const FieldTensor& y, const FieldTensor& bias, const FieldParams& params);
FieldTensor lift_scale(const FieldTensor& t, int bits, const FieldParams& params);

// Requantize a scale-(l + shift_bits) pre-activation down to scale l, then
// apply the nonlinearity on the lifted integers.
FieldTensor activation_apply(const FieldTensor& y, ActKind kind, int shift_bits,
                             const QuantScheme& scheme);
FieldTensor pool_forward(const FieldTensor& x, PoolKind kind);

enum class UntrustedMode { unblinded_f32, blinded_f64 };

// The fast worker's bias-free linear evaluation. unblinded_f32 runs the
// whole product in single precision (exact while every partial sum stays
// below 2^24); blinded_f64 runs exactly over Z_p with deferred reduction.
FieldTensor untrusted_linear(const LayerSpec& layer, const FieldTensor& x, UntrustedMode mode,
                             const FieldParams& params, OpCounter* counter = nullptr);

}  // namespace slalom
