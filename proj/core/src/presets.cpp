#include <cmath>
#include <random>
#include <stdexcept>

#include "slalom/model.hpp"

namespace slalom {

namespace {

// Deterministic uniform in [-a, a], snapped to the 2^-grid_bits grid so the
// fixed-point embedding of preset weights is lossless.
class WeightGen {
 public:
  explicit WeightGen(uint64_t seed) : eng_(seed) {}

  float uniform(double a, int grid_bits) {
    uint64_t r = eng_();
    double u = static_cast<double>(r >> 11) * 0x1.0p-53;  // [0, 1)
    double v = (2.0 * u - 1.0) * a;
    double snapped = std::round(std::ldexp(v, grid_bits));
    return static_cast<float>(std::ldexp(snapped, -grid_bits));
  }

  FloatTensor tensor(std::vector<int64_t> shape, double a, int grid_bits) {
    FloatTensor t(std::move(shape));
    for (auto& v : t.data) v = uniform(a, grid_bits);
    return t;
  }

 private:
  std::mt19937_64 eng_;
};

constexpr int kGridL = 8;  // presets target l = 8

struct Builder {
  WeightGen gen;
  double gain = 1.0;

  explicit Builder(uint64_t seed) : gen(seed) {}

  double he_uniform(int64_t fan_in) const { return gain * std::sqrt(6.0 / static_cast<double>(fan_in)); }

  LayerSpec fc(int64_t h_in, int64_t h_out) {
    LayerSpec ls;
    ls.kind = LayerKind::fc;
    ls.h_in = h_in;
    ls.h_out = h_out;
    ls.weight = gen.tensor({h_in, h_out}, he_uniform(h_in), kGridL);
    ls.bias = gen.tensor({h_out}, 0.1, 2 * kGridL);
    return ls;
  }

  LayerSpec conv(int64_t h, int64_t w, int64_t c_in, int64_t c_out, int64_t k, int64_t stride) {
    LayerSpec ls;
    ls.kind = LayerKind::conv2d;
    ls.h = h; ls.w = w; ls.c_in = c_in; ls.c_out = c_out; ls.k = k; ls.stride = stride;
    ls.weight = gen.tensor({k, k, c_in, c_out}, he_uniform(k * k * c_in), kGridL);
    ls.bias = gen.tensor({c_out}, 0.1, 2 * kGridL);
    return ls;
  }

  LayerSpec depthwise(int64_t h, int64_t w, int64_t c, int64_t k, int64_t stride) {
    LayerSpec ls;
    ls.kind = LayerKind::depthwise_conv2d;
    ls.h = h; ls.w = w; ls.c_in = c; ls.c_out = c; ls.k = k; ls.stride = stride;
    ls.weight = gen.tensor({k, k, c}, he_uniform(k * k), kGridL);
    ls.bias = gen.tensor({c}, 0.05, 2 * kGridL);
    return ls;
  }

  LayerSpec pointwise(int64_t h, int64_t w, int64_t c_in, int64_t c_out) {
    LayerSpec ls;
    ls.kind = LayerKind::pointwise_conv2d;
    ls.h = h; ls.w = w; ls.c_in = c_in; ls.c_out = c_out; ls.k = 1;
    ls.weight = gen.tensor({c_in, c_out}, he_uniform(c_in), kGridL);
    ls.bias = gen.tensor({c_out}, 0.05, 2 * kGridL);
    return ls;
  }

  static LayerSpec act(ActKind a) {
    LayerSpec ls;
    ls.kind = LayerKind::activation;
    ls.act = a;
    return ls;
  }

  static LayerSpec pool(PoolKind p) {
    LayerSpec ls;
    ls.kind = LayerKind::pool;
    ls.pool = p;
    return ls;
  }
};

// 16x16x3 input, two conv blocks with 3x3 kernels, two dense layers.
ModelGraph vgg_like_small(uint64_t seed) {
  Builder b(seed);
  ModelGraph m;
  m.name = "vgg_like_small";
  m.input_shape = {16, 16, 3};
  m.layers.push_back(b.conv(16, 16, 3, 16, 3, 1));
  m.layers.push_back(Builder::act(ActKind::relu));
  m.layers.push_back(b.conv(16, 16, 16, 16, 3, 1));
  m.layers.push_back(Builder::act(ActKind::relu));
  m.layers.push_back(Builder::pool(PoolKind::max));
  m.layers.push_back(b.conv(8, 8, 16, 32, 3, 1));
  m.layers.push_back(Builder::act(ActKind::relu));
  m.layers.push_back(b.conv(8, 8, 32, 32, 3, 1));
  m.layers.push_back(Builder::act(ActKind::relu));
  m.layers.push_back(Builder::pool(PoolKind::max));
  m.layers.push_back(b.fc(4 * 4 * 32, 64));
  m.layers.push_back(Builder::act(ActKind::relu));
  m.layers.push_back(b.fc(64, 10));
  m.layers.push_back(Builder::act(ActKind::none));
  return m;
}

// separable convolutions with an activation between each depthwise and
// pointwise half
ModelGraph mobilenet_like_small(uint64_t seed) {
  Builder b(seed);
  ModelGraph m;
  m.name = "mobilenet_like_small";
  m.input_shape = {16, 16, 3};
  m.layers.push_back(b.conv(16, 16, 3, 8, 3, 1));
  m.layers.push_back(Builder::act(ActKind::relu6));
  m.layers.push_back(b.depthwise(16, 16, 8, 3, 1));
  m.layers.push_back(Builder::act(ActKind::relu6));
  m.layers.push_back(b.pointwise(16, 16, 8, 16));
  m.layers.push_back(Builder::act(ActKind::relu6));
  m.layers.push_back(b.depthwise(16, 16, 16, 3, 2));
  m.layers.push_back(Builder::act(ActKind::relu6));
  m.layers.push_back(b.pointwise(8, 8, 16, 32));
  m.layers.push_back(Builder::act(ActKind::relu6));
  m.layers.push_back(b.depthwise(8, 8, 32, 3, 1));
  m.layers.push_back(Builder::act(ActKind::relu6));
  m.layers.push_back(b.pointwise(8, 8, 32, 32));
  m.layers.push_back(Builder::act(ActKind::relu6));
  m.layers.push_back(Builder::pool(PoolKind::avg));
  m.layers.push_back(b.fc(4 * 4 * 32, 10));
  m.layers.push_back(Builder::act(ActKind::none));
  return m;
}

// no activation between the depthwise and pointwise halves, so each pair is
// a single linear operator; weights are scaled down since the pair output
// accumulates at scale 3l
ModelGraph mobilenet_fused_small(uint64_t seed) {
  Builder b(seed);
  b.gain = 0.35;
  ModelGraph m;
  m.name = "mobilenet_fused_small";
  m.input_shape = {16, 16, 3};
  m.layers.push_back(b.conv(16, 16, 3, 8, 3, 1));
  m.layers.push_back(Builder::act(ActKind::relu6));
  m.layers.push_back(b.depthwise(16, 16, 8, 3, 1));
  m.layers.push_back(b.pointwise(16, 16, 8, 16));
  m.layers.push_back(Builder::act(ActKind::relu6));
  m.layers.push_back(b.depthwise(16, 16, 16, 3, 2));
  m.layers.push_back(b.pointwise(8, 8, 16, 16));
  m.layers.push_back(Builder::act(ActKind::relu6));
  m.layers.push_back(b.depthwise(8, 8, 16, 3, 1));
  m.layers.push_back(b.pointwise(8, 8, 16, 16));
  m.layers.push_back(Builder::act(ActKind::relu6));
  m.layers.push_back(Builder::pool(PoolKind::avg));
  m.layers.push_back(b.fc(4 * 4 * 16, 10));
  m.layers.push_back(Builder::act(ActKind::none));
  return m;
}

// two residual blocks, the second with a strided 1x1 projection shortcut
ModelGraph resnet_like_small(uint64_t seed) {
  Builder b(seed);
  ModelGraph m;
  m.name = "resnet_like_small";
  m.input_shape = {16, 16, 3};
  m.layers.push_back(b.conv(16, 16, 3, 16, 3, 1));
  m.layers.push_back(Builder::act(ActKind::relu));

  LayerSpec rb1;
  rb1.kind = LayerKind::residual_block;
  rb1.merge_act = ActKind::relu;
  rb1.branch1.push_back(b.conv(16, 16, 16, 16, 3, 1));
  rb1.branch1.push_back(Builder::act(ActKind::relu));
  rb1.branch1.push_back(b.conv(16, 16, 16, 16, 3, 1));
  // branch2 empty: identity shortcut
  m.layers.push_back(rb1);

  LayerSpec rb2;
  rb2.kind = LayerKind::residual_block;
  rb2.merge_act = ActKind::relu;
  rb2.branch1.push_back(b.conv(16, 16, 16, 32, 3, 2));
  rb2.branch1.push_back(Builder::act(ActKind::relu));
  rb2.branch1.push_back(b.conv(8, 8, 32, 32, 3, 1));
  rb2.branch2.push_back(b.conv(16, 16, 16, 32, 1, 2));  // projection shortcut
  m.layers.push_back(rb2);

  m.layers.push_back(Builder::pool(PoolKind::avg));
  m.layers.push_back(b.fc(4 * 4 * 32, 10));
  m.layers.push_back(Builder::act(ActKind::none));
  return m;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"vgg_like_small", "mobilenet_like_small", "mobilenet_fused_small", "resnet_like_small"};
}

ModelGraph make_preset(const std::string& name, uint64_t seed) {
  ModelGraph m;
  if (name == "vgg_like_small") m = vgg_like_small(seed);
  else if (name == "mobilenet_like_small") m = mobilenet_like_small(seed);
  else if (name == "mobilenet_fused_small") m = mobilenet_fused_small(seed);
  else if (name == "resnet_like_small") m = resnet_like_small(seed);
  else throw std::invalid_argument("unknown preset: " + name);

  auto violations = validate(m);
  if (!violations.empty()) throw std::logic_error("preset " + name + " invalid: " + violations[0]);
  return m;
}

}  // namespace slalom
