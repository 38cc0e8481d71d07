#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "slalom/field.hpp"

namespace slalom {

struct ModelGraph;

struct FloatTensor {
  std::vector<int64_t> shape;
  std::vector<float> data;

  FloatTensor() = default;
  explicit FloatTensor(std::vector<int64_t> s)
      : shape(std::move(s)), data(static_cast<size_t>(numel(shape)), 0.0f) {}

  int64_t size() const { return static_cast<int64_t>(data.size()); }
};

enum class TensorRole { weight, input, bias };

// Fixed-point scheme: weights and inputs at scale 2^l, biases at 2^(2l).
struct QuantScheme {
  int l = 8;
  FieldParams params;

  int64_t scale() const { return int64_t{1} << l; }
  int64_t bias_scale() const { return int64_t{1} << (2 * l); }
  void validate() const;
};

// round(2^l * x), ties away from zero.
int64_t fp_round(double x, int l);

double round_half_away(double v);

FieldTensor quantize_tensor(const FloatTensor& t, TensorRole role, const QuantScheme& scheme);

// Scale-down of an exact scale-2l accumulation back to scale l. Assumes the
// lifted values are wrap-free (range_check certifies this for a model).
FieldTensor requantize_output(const FieldTensor& y, const QuantScheme& scheme);

// General form used after fused linear pairs, where the accumulated scale is
// l * (1 + number of fused operators).
FieldTensor requantize_shift(const FieldTensor& y, int shift_bits, const QuantScheme& scheme);

std::vector<double> dequantize(const FieldTensor& t, int l);

struct RangeLayerEntry {
  int linear_index = 0;
  std::string label;
  double observed_max_abs = 0;  // max |pre-activation| over the probe set
  double analytic_bound = 0;    // sum |W~| * worst-case input magnitude
  bool observed_pass = false;
  bool analytic_pass = false;
};

struct RangeReport {
  std::vector<RangeLayerEntry> layers;
  int64_t limit = 0;  // (p-1)/2
  bool pass = false;  // every layer's observed maximum stays below the limit
  std::string to_string() const;
};

// Exact integer inference over the probe set with per-layer magnitude
// tracking. Wrap-free execution is what licenses requantize_output.
RangeReport range_check(const ModelGraph& model, const std::vector<FloatTensor>& probes,
                        const QuantScheme& scheme);

}  // namespace slalom
