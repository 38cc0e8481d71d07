#include "slalom/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"

namespace slalom {

using nlohmann::json;

std::string layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::fc: return "fc";
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::depthwise_conv2d: return "depthwise_conv2d";
    case LayerKind::pointwise_conv2d: return "pointwise_conv2d";
    case LayerKind::activation: return "activation";
    case LayerKind::pool: return "pool";
    case LayerKind::residual_block: return "residual_block";
  }
  return "?";
}

std::string act_kind_name(ActKind k) {
  switch (k) {
    case ActKind::relu: return "relu";
    case ActKind::relu6: return "relu6";
    case ActKind::none: return "none";
  }
  return "?";
}

namespace {

LayerKind layer_kind_from_name(const std::string& s) {
  for (LayerKind k : {LayerKind::fc, LayerKind::conv2d, LayerKind::depthwise_conv2d,
                      LayerKind::pointwise_conv2d, LayerKind::activation, LayerKind::pool,
                      LayerKind::residual_block}) {
    if (layer_kind_name(k) == s) return k;
  }
  throw std::invalid_argument("unknown layer kind: " + s);
}

ActKind act_kind_from_name(const std::string& s) {
  if (s == "relu") return ActKind::relu;
  if (s == "relu6") return ActKind::relu6;
  if (s == "none") return ActKind::none;
  throw std::invalid_argument("unknown activation kind: " + s);
}

int64_t ceil_div(int64_t a, int64_t b) { return (a + b - 1) / b; }

}  // namespace

int64_t LayerSpec::input_size() const {
  switch (kind) {
    case LayerKind::fc: return h_in;
    case LayerKind::conv2d:
    case LayerKind::depthwise_conv2d:
    case LayerKind::pointwise_conv2d: return h * w * c_in;
    default: return 0;
  }
}

int64_t LayerSpec::output_size() const {
  switch (kind) {
    case LayerKind::fc: return h_out;
    case LayerKind::conv2d: return ceil_div(h, stride) * ceil_div(w, stride) * c_out;
    case LayerKind::depthwise_conv2d: return ceil_div(h, stride) * ceil_div(w, stride) * c_in;
    case LayerKind::pointwise_conv2d: return h * w * c_out;
    default: return 0;
  }
}

std::vector<int64_t> LayerSpec::output_shape(std::span<const int64_t> input_shape) const {
  switch (kind) {
    case LayerKind::fc: return {h_out};
    case LayerKind::conv2d: return {ceil_div(h, stride), ceil_div(w, stride), c_out};
    case LayerKind::depthwise_conv2d: return {ceil_div(h, stride), ceil_div(w, stride), c_in};
    case LayerKind::pointwise_conv2d: return {h, w, c_out};
    case LayerKind::activation: return std::vector<int64_t>(input_shape.begin(), input_shape.end());
    case LayerKind::pool: return {input_shape[0] / 2, input_shape[1] / 2, input_shape[2]};
    case LayerKind::residual_block: {
      std::vector<int64_t> cur(input_shape.begin(), input_shape.end());
      const auto& branch = branch1.empty() ? branch2 : branch1;
      for (const auto& ls : branch) cur = ls.output_shape(cur);
      return cur;
    }
  }
  return {};
}

int64_t ModelGraph::linear_layer_count() const {
  std::function<int64_t(const std::vector<LayerSpec>&)> count =
      [&](const std::vector<LayerSpec>& seq) {
        int64_t n = 0;
        for (const auto& ls : seq) {
          if (ls.is_linear()) ++n;
          if (ls.kind == LayerKind::residual_block) n += count(ls.branch1) + count(ls.branch2);
        }
        return n;
      };
  return count(layers);
}

// ---------------------------------------------------------------------------
// validation

namespace {

std::vector<int64_t> expected_weight_shape(const LayerSpec& ls) {
  switch (ls.kind) {
    case LayerKind::fc: return {ls.h_in, ls.h_out};
    case LayerKind::conv2d: return {ls.k, ls.k, ls.c_in, ls.c_out};
    case LayerKind::depthwise_conv2d: return {ls.k, ls.k, ls.c_in};
    case LayerKind::pointwise_conv2d: return {ls.c_in, ls.c_out};
    default: return {};
  }
}

int64_t bias_len(const LayerSpec& ls) {
  switch (ls.kind) {
    case LayerKind::fc: return ls.h_out;
    case LayerKind::conv2d: return ls.c_out;
    case LayerKind::depthwise_conv2d: return ls.c_in;
    case LayerKind::pointwise_conv2d: return ls.c_out;
    default: return 0;
  }
}

void validate_sequence(const std::vector<LayerSpec>& seq, std::vector<int64_t> shape,
                       const std::string& path, std::vector<std::string>& out,
                       std::vector<int64_t>* final_shape) {
  for (size_t i = 0; i < seq.size(); ++i) {
    const LayerSpec& ls = seq[i];
    std::string where = path + "layer " + std::to_string(i) + " (" + layer_kind_name(ls.kind) + ")";
    switch (ls.kind) {
      case LayerKind::fc: {
        if (ls.h_in <= 0 || ls.h_out <= 0) out.push_back(where + ": nonpositive dimensions");
        if (numel(shape) != ls.h_in)
          out.push_back(where + ": expects flat input of " + std::to_string(ls.h_in) +
                        ", previous layer provides " + shape_str(shape));
        break;
      }
      case LayerKind::conv2d:
      case LayerKind::depthwise_conv2d:
      case LayerKind::pointwise_conv2d: {
        if (shape.size() != 3 || shape[0] != ls.h || shape[1] != ls.w || shape[2] != ls.c_in)
          out.push_back(where + ": declared input " + std::to_string(ls.h) + "x" +
                        std::to_string(ls.w) + "x" + std::to_string(ls.c_in) +
                        " but previous layer provides " + shape_str(shape));
        if (ls.kind == LayerKind::depthwise_conv2d && ls.c_out != ls.c_in)
          out.push_back(where + ": depthwise requires c_out == c_in");
        if (ls.kind == LayerKind::pointwise_conv2d && ls.stride != 1)
          out.push_back(where + ": pointwise convolution requires stride 1");
        if (ls.kind != LayerKind::pointwise_conv2d && (ls.k < 1 || ls.k % 2 == 0))
          out.push_back(where + ": kernel size must be odd and positive");
        if (ls.stride != 1 && ls.stride != 2) out.push_back(where + ": stride must be 1 or 2");
        break;
      }
      case LayerKind::activation:
        break;
      case LayerKind::pool: {
        if (shape.size() != 3 || shape[0] % 2 != 0 || shape[1] % 2 != 0)
          out.push_back(where + ": 2x2 pool needs even spatial dims, got " + shape_str(shape));
        break;
      }
      case LayerKind::residual_block: {
        std::vector<int64_t> s1 = shape, s2 = shape;
        if (!ls.branch1.empty()) validate_sequence(ls.branch1, shape, where + "/f1/", out, &s1);
        if (!ls.branch2.empty()) validate_sequence(ls.branch2, shape, where + "/f2/", out, &s2);
        if (s1 != s2)
          out.push_back(where + ": branch output shapes differ, " + shape_str(s1) + " vs " +
                        shape_str(s2));
        break;
      }
    }
    if (ls.is_linear()) {
      auto want = expected_weight_shape(ls);
      if (ls.weight.shape != want)
        out.push_back(where + ": weight shape " + shape_str(ls.weight.shape) + ", expected " +
                      shape_str(want));
      if (ls.bias.size() != 0 && ls.bias.size() != bias_len(ls))
        out.push_back(where + ": bias length " + std::to_string(ls.bias.size()) + ", expected " +
                      std::to_string(bias_len(ls)));
    }
    shape = ls.output_shape(shape);
  }
  if (final_shape) *final_shape = shape;
}

}  // namespace

std::vector<std::string> validate(const ModelGraph& model) {
  std::vector<std::string> out;
  if (model.input_shape.empty()) out.push_back("model has no input shape");
  if (model.layers.empty()) out.push_back("model has no layers");
  if (!out.empty()) return out;
  validate_sequence(model.layers, model.input_shape, "", out, nullptr);
  return out;
}

void quantize_model(ModelGraph& model, const QuantScheme& scheme) {
  scheme.validate();
  std::function<void(std::vector<LayerSpec>&)> walk = [&](std::vector<LayerSpec>& seq) {
    for (LayerSpec& ls : seq) {
      if (ls.is_linear()) {
        ls.qweight = quantize_tensor(ls.weight, TensorRole::weight, scheme);
        if (ls.bias.size() > 0) ls.qbias = quantize_tensor(ls.bias, TensorRole::bias, scheme);
      }
      if (ls.kind == LayerKind::residual_block) {
        walk(ls.branch1);
        walk(ls.branch2);
      }
    }
  };
  walk(model.layers);
  model.quant_l = scheme.l;
  model.quantized = true;
}

// ---------------------------------------------------------------------------
// on-disk format: JSON manifest plus one raw row-major little-endian float32
// blob holding all weight/bias tensors in manifest order

namespace {

void append_f32_le(std::vector<uint8_t>& blob, const FloatTensor& t) {
  for (float v : t.data) {
    uint32_t bits = std::bit_cast<uint32_t>(v);
    blob.push_back(static_cast<uint8_t>(bits));
    blob.push_back(static_cast<uint8_t>(bits >> 8));
    blob.push_back(static_cast<uint8_t>(bits >> 16));
    blob.push_back(static_cast<uint8_t>(bits >> 24));
  }
}

json tensor_ref(const FloatTensor& t, std::vector<uint8_t>& blob) {
  json j;
  j["shape"] = t.shape;
  j["offset_bytes"] = blob.size();
  j["count"] = t.size();
  append_f32_le(blob, t);
  return j;
}

json layer_to_json(const LayerSpec& ls, std::vector<uint8_t>& blob) {
  json j;
  j["kind"] = layer_kind_name(ls.kind);
  switch (ls.kind) {
    case LayerKind::fc:
      j["h_in"] = ls.h_in;
      j["h_out"] = ls.h_out;
      break;
    case LayerKind::conv2d:
      j["h"] = ls.h; j["w"] = ls.w; j["c_in"] = ls.c_in; j["c_out"] = ls.c_out;
      j["k"] = ls.k; j["stride"] = ls.stride;
      break;
    case LayerKind::depthwise_conv2d:
      j["h"] = ls.h; j["w"] = ls.w; j["c_in"] = ls.c_in; j["k"] = ls.k; j["stride"] = ls.stride;
      break;
    case LayerKind::pointwise_conv2d:
      j["h"] = ls.h; j["w"] = ls.w; j["c_in"] = ls.c_in; j["c_out"] = ls.c_out;
      break;
    case LayerKind::activation:
      j["act"] = act_kind_name(ls.act);
      break;
    case LayerKind::pool:
      j["pool"] = ls.pool == PoolKind::max ? "max" : "avg";
      break;
    case LayerKind::residual_block: {
      j["merge_act"] = act_kind_name(ls.merge_act);
      json f1 = json::array(), f2 = json::array();
      for (const auto& sub : ls.branch1) f1.push_back(layer_to_json(sub, blob));
      for (const auto& sub : ls.branch2) f2.push_back(layer_to_json(sub, blob));
      j["f1"] = f1;
      j["f2"] = f2;
      break;
    }
  }
  if (ls.is_linear()) {
    j["weight"] = tensor_ref(ls.weight, blob);
    if (ls.bias.size() > 0) j["bias"] = tensor_ref(ls.bias, blob);
  }
  return j;
}

FloatTensor tensor_from_ref(const json& j, const std::vector<uint8_t>& blob) {
  FloatTensor t;
  t.shape = j.at("shape").get<std::vector<int64_t>>();
  int64_t count = j.at("count").get<int64_t>();
  if (count != numel(t.shape)) throw std::runtime_error("tensor count does not match shape");
  size_t off = j.at("offset_bytes").get<size_t>();
  if (off + 4 * static_cast<size_t>(count) > blob.size()) {
    throw std::runtime_error("tensor offset outside blob (corrupt or truncated blob)");
  }
  t.data.resize(static_cast<size_t>(count));
  for (int64_t i = 0; i < count; ++i) {
    const uint8_t* p = blob.data() + off + 4 * static_cast<size_t>(i);
    uint32_t bits = static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
                    (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
    t.data[static_cast<size_t>(i)] = std::bit_cast<float>(bits);
  }
  return t;
}

LayerSpec layer_from_json(const json& j, const std::vector<uint8_t>& blob) {
  LayerSpec ls;
  ls.kind = layer_kind_from_name(j.at("kind").get<std::string>());
  switch (ls.kind) {
    case LayerKind::fc:
      ls.h_in = j.at("h_in"); ls.h_out = j.at("h_out");
      break;
    case LayerKind::conv2d:
      ls.h = j.at("h"); ls.w = j.at("w"); ls.c_in = j.at("c_in"); ls.c_out = j.at("c_out");
      ls.k = j.at("k"); ls.stride = j.value("stride", 1);
      break;
    case LayerKind::depthwise_conv2d:
      ls.h = j.at("h"); ls.w = j.at("w"); ls.c_in = j.at("c_in"); ls.c_out = ls.c_in;
      ls.k = j.at("k"); ls.stride = j.value("stride", 1);
      break;
    case LayerKind::pointwise_conv2d:
      ls.h = j.at("h"); ls.w = j.at("w"); ls.c_in = j.at("c_in"); ls.c_out = j.at("c_out");
      ls.k = 1;
      break;
    case LayerKind::activation:
      ls.act = act_kind_from_name(j.at("act").get<std::string>());
      break;
    case LayerKind::pool:
      ls.pool = j.at("pool").get<std::string>() == "max" ? PoolKind::max : PoolKind::avg;
      break;
    case LayerKind::residual_block:
      ls.merge_act = act_kind_from_name(j.at("merge_act").get<std::string>());
      for (const auto& sub : j.at("f1")) ls.branch1.push_back(layer_from_json(sub, blob));
      for (const auto& sub : j.at("f2")) ls.branch2.push_back(layer_from_json(sub, blob));
      break;
  }
  if (ls.is_linear()) {
    ls.weight = tensor_from_ref(j.at("weight"), blob);
    if (j.contains("bias")) ls.bias = tensor_from_ref(j.at("bias"), blob);
  }
  return ls;
}

std::string blob_path_for(const std::string& manifest_path) {
  std::string p = manifest_path;
  size_t dot = p.rfind('.');
  if (dot != std::string::npos && p.substr(dot) == ".json") p = p.substr(0, dot);
  return p + ".bin";
}

std::string blob_file_name(const std::string& path) {
  size_t slash = path.find_last_of('/');
  return slash == std::string::npos ? path : path.substr(slash + 1);
}

}  // namespace

void save_model(const ModelGraph& model, const std::string& manifest_path) {
  std::vector<uint8_t> blob;
  json j;
  j["format_version"] = model.format_version;
  j["name"] = model.name;
  j["input_shape"] = model.input_shape;
  j["quantization"] = {{"l", model.quant_l}};
  json layers = json::array();
  for (const auto& ls : model.layers) layers.push_back(layer_to_json(ls, blob));
  j["layers"] = layers;

  std::string blob_path = blob_path_for(manifest_path);
  j["blob"] = blob_file_name(blob_path);

  std::ofstream bf(blob_path, std::ios::binary);
  if (!bf) throw std::runtime_error("cannot write blob file " + blob_path);
  bf.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
  bf.close();

  std::ofstream mf(manifest_path);
  if (!mf) throw std::runtime_error("cannot write manifest " + manifest_path);
  mf << j.dump(2) << "\n";
}

ModelGraph load_model(const std::string& manifest_path) {
  std::ifstream mf(manifest_path);
  if (!mf) throw std::runtime_error("cannot open manifest " + manifest_path);
  json j;
  try {
    mf >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("manifest parse error: " + std::string(e.what()));
  }

  ModelGraph model;
  model.format_version = j.at("format_version");
  if (model.format_version != 1) {
    throw std::runtime_error("unsupported model format version " +
                             std::to_string(model.format_version));
  }
  model.name = j.value("name", "");
  model.input_shape = j.at("input_shape").get<std::vector<int64_t>>();
  model.quant_l = j.at("quantization").at("l");

  std::string dir;
  size_t slash = manifest_path.find_last_of('/');
  if (slash != std::string::npos) dir = manifest_path.substr(0, slash + 1);
  std::string blob_path = dir + j.at("blob").get<std::string>();
  std::ifstream bf(blob_path, std::ios::binary);
  if (!bf) throw std::runtime_error("manifest references missing blob " + blob_path);
  std::vector<uint8_t> blob((std::istreambuf_iterator<char>(bf)), std::istreambuf_iterator<char>());

  for (const auto& lj : j.at("layers")) model.layers.push_back(layer_from_json(lj, blob));

  auto violations = validate(model);
  if (!violations.empty()) {
    std::ostringstream os;
    os << "loaded model is invalid:";
    for (const auto& v : violations) os << "\n  " << v;
    throw std::runtime_error(os.str());
  }
  return model;
}

}  // namespace slalom
