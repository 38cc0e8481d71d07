#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slalom/field.hpp"
#include "slalom/quantize.hpp"

namespace slalom {

enum class LayerKind { fc, conv2d, depthwise_conv2d, pointwise_conv2d, activation, pool, residual_block };
enum class ActKind { relu, relu6, none };
enum class PoolKind { max, avg };

std::string layer_kind_name(LayerKind k);
std::string act_kind_name(ActKind k);

struct LayerSpec {
  LayerKind kind{};

  // fc
  int64_t h_in = 0, h_out = 0;
  // convolutions; same padding, spatial input h x w with c_in channels
  int64_t h = 0, w = 0, c_in = 0, c_out = 0, k = 0, stride = 1;
  // activation layers
  ActKind act = ActKind::none;
  // pool layers: fixed 2x2 window, stride 2
  PoolKind pool = PoolKind::max;
  // residual block: two branches merged by an activation; an empty branch is
  // the identity shortcut
  std::vector<LayerSpec> branch1, branch2;
  ActKind merge_act = ActKind::relu;

  FloatTensor weight, bias;
  FieldTensor qweight, qbias;

  bool is_linear() const {
    return kind == LayerKind::fc || kind == LayerKind::conv2d ||
           kind == LayerKind::depthwise_conv2d || kind == LayerKind::pointwise_conv2d;
  }
  // flat input/output sizes of a linear layer (|x|, |y|)
  int64_t input_size() const;
  int64_t output_size() const;
  std::vector<int64_t> output_shape(std::span<const int64_t> input_shape) const;
};

struct ModelGraph {
  std::string name;
  int format_version = 1;
  std::vector<int64_t> input_shape;  // [h, w, c] or [m]
  int quant_l = 8;
  std::vector<LayerSpec> layers;
  bool quantized = false;

  int64_t linear_layer_count() const;
};

// Empty result means every structural invariant holds.
std::vector<std::string> validate(const ModelGraph& model);

void quantize_model(ModelGraph& model, const QuantScheme& scheme);

// JSON manifest + raw little-endian float32 blob next to it (same stem, .bin).
void save_model(const ModelGraph& model, const std::string& manifest_path);
ModelGraph load_model(const std::string& manifest_path);

// Synthetic desk-scale presets: vgg_like_small, mobilenet_like_small,
// mobilenet_fused_small, resnet_like_small. Weights are deterministic in the
// seed and land exactly on the 2^-l grid so quantizing them is lossless.
ModelGraph make_preset(const std::string& name, uint64_t seed);
std::vector<std::string> preset_names();

}  // namespace slalom
