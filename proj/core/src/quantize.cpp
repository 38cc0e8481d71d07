#include "slalom/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "slalom/model.hpp"

namespace slalom {

void QuantScheme::validate() const {
  if (l < 1) throw std::invalid_argument("quantization bit count l must be >= 1");
  if (2 * l >= 52) throw std::invalid_argument("quantization scale 2^(2l) too large for doubles");
  params.validate();
}

double round_half_away(double v) {
  // std::round ties away from zero
  return std::round(v);
}

int64_t fp_round(double x, int l) {
  double scaled = std::ldexp(x, l);
  if (!(std::fabs(scaled) < 4503599627370496.0)) {  // 2^52
    throw std::domain_error("fp_round: 2^l * x exceeds the exact double range");
  }
  return static_cast<int64_t>(round_half_away(scaled));
}

FieldTensor quantize_tensor(const FloatTensor& t, TensorRole role, const QuantScheme& scheme) {
  const int l = role == TensorRole::bias ? 2 * scheme.l : scheme.l;
  const int64_t half = scheme.params.half();
  FieldTensor out(t.shape);
  for (int64_t i = 0; i < t.size(); ++i) {
    float v = t.data[static_cast<size_t>(i)];
    if (!std::isfinite(v)) {
      throw std::invalid_argument("quantize_tensor: non-finite value at index " +
                                  std::to_string(i));
    }
    int64_t q = fp_round(v, l);
    if (std::llabs(q) >= half) {
      std::ostringstream os;
      os << "quantize_tensor: element " << i << " (value " << v << ", quantized " << q
         << ") exceeds centered field range +-" << half;
      throw std::range_error(os.str());
    }
    out[i] = static_cast<double>(q);
  }
  return out;
}

FieldTensor requantize_shift(const FieldTensor& y, int shift_bits, const QuantScheme& scheme) {
  FieldTensor out(y.shape);
  const double inv = std::ldexp(1.0, -shift_bits);
  const double half = static_cast<double>(scheme.params.half());
  for (int64_t i = 0; i < y.size(); ++i) {
    double v = round_half_away(y[i] * inv);
    (void)half;
    out[i] = v;  // |y| <= half implies |v| <= half
  }
  return out;
}

FieldTensor requantize_output(const FieldTensor& y, const QuantScheme& scheme) {
  return requantize_shift(y, scheme.l, scheme);
}

std::vector<double> dequantize(const FieldTensor& t, int l) {
  std::vector<double> out(t.data.begin(), t.data.end());
  const double inv = std::ldexp(1.0, -l);
  for (double& v : out) v *= inv;
  return out;
}

// ---------------------------------------------------------------------------
// Range certification: exact unreduced integer inference over a probe set,
// recording per-linear-layer peak magnitudes, plus an analytic worst-case
// bound propagated through the graph.

namespace {

struct RangeWalker {
  const QuantScheme& scheme;
  std::vector<RangeLayerEntry>& entries;
  int linear_idx = 0;

  struct Value {
    std::vector<int64_t> shape;
    std::vector<double> data;  // true integers, no modular wrap
    int scale_units = 1;       // multiples of l
    double bound = 0;          // analytic max magnitude at this point
  };

  static int64_t out_spatial(int64_t n, int64_t stride) { return (n + stride - 1) / stride; }

  double weight_abs_rowsum_max(const LayerSpec& ls) const {
    // max over outputs of sum_j |W~[j, out]|
    const FieldTensor& w = ls.qweight;
    double best = 0;
    switch (ls.kind) {
      case LayerKind::fc: {
        for (int64_t o = 0; o < ls.h_out; ++o) {
          double s = 0;
          for (int64_t i = 0; i < ls.h_in; ++i) s += std::fabs(w[i * ls.h_out + o]);
          best = std::max(best, s);
        }
        break;
      }
      case LayerKind::conv2d: {
        for (int64_t o = 0; o < ls.c_out; ++o) {
          double s = 0;
          for (int64_t t = 0; t < ls.k * ls.k * ls.c_in; ++t) s += std::fabs(w[t * ls.c_out + o]);
          best = std::max(best, s);
        }
        break;
      }
      case LayerKind::depthwise_conv2d: {
        for (int64_t c = 0; c < ls.c_in; ++c) {
          double s = 0;
          for (int64_t t = 0; t < ls.k * ls.k; ++t) s += std::fabs(w[t * ls.c_in + c]);
          best = std::max(best, s);
        }
        break;
      }
      case LayerKind::pointwise_conv2d: {
        for (int64_t o = 0; o < ls.c_out; ++o) {
          double s = 0;
          for (int64_t i = 0; i < ls.c_in; ++i) s += std::fabs(w[i * ls.c_out + o]);
          best = std::max(best, s);
        }
        break;
      }
      default:
        break;
    }
    return best;
  }

  Value linear(const LayerSpec& ls, const Value& in) {
    Value out;
    out.scale_units = in.scale_units + 1;

    double bias_max = 0;
    const bool has_bias = ls.qbias.size() > 0;
    const double bias_lift = std::ldexp(1.0, (in.scale_units - 1) * scheme.l);
    if (has_bias) bias_max = ls.qbias.max_abs() * bias_lift;
    out.bound = weight_abs_rowsum_max(ls) * in.bound + bias_max;

    auto record = [&](double observed) {
      RangeLayerEntry e;
      e.linear_index = linear_idx++;
      e.label = layer_kind_name(ls.kind);
      e.observed_max_abs = observed;
      e.analytic_bound = out.bound;
      e.observed_pass = observed < static_cast<double>(scheme.params.half());
      e.analytic_pass = out.bound < static_cast<double>(scheme.params.half());
      entries.push_back(e);
    };

    // exact integer forward, naive loops, no reduction
    if (ls.kind == LayerKind::fc) {
      out.shape = {ls.h_out};
      out.data.assign(static_cast<size_t>(ls.h_out), 0.0);
      for (int64_t o = 0; o < ls.h_out; ++o) {
        double acc = 0;
        for (int64_t i = 0; i < ls.h_in; ++i) acc += in.data[i] * ls.qweight[i * ls.h_out + o];
        if (has_bias) acc += ls.qbias[o] * bias_lift;
        out.data[o] = acc;
      }
    } else {
      const int64_t h = ls.h, w = ls.w;
      const int64_t ho = ls.kind == LayerKind::pointwise_conv2d ? h : out_spatial(h, ls.stride);
      const int64_t wo = ls.kind == LayerKind::pointwise_conv2d ? w : out_spatial(w, ls.stride);
      const int64_t co = ls.kind == LayerKind::depthwise_conv2d ? ls.c_in : ls.c_out;
      const int64_t kk = ls.kind == LayerKind::pointwise_conv2d ? 1 : ls.k;
      const int64_t pad_h = std::max<int64_t>(0, (ho - 1) * ls.stride + kk - h) / 2;
      const int64_t pad_w = std::max<int64_t>(0, (wo - 1) * ls.stride + kk - w) / 2;
      out.shape = {ho, wo, co};
      out.data.assign(static_cast<size_t>(ho * wo * co), 0.0);
      for (int64_t oy = 0; oy < ho; ++oy) {
        for (int64_t ox = 0; ox < wo; ++ox) {
          for (int64_t oc = 0; oc < co; ++oc) {
            double acc = 0;
            for (int64_t ky = 0; ky < kk; ++ky) {
              for (int64_t kx = 0; kx < kk; ++kx) {
                int64_t iy = oy * ls.stride + ky - pad_h;
                int64_t ix = ox * ls.stride + kx - pad_w;
                if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                if (ls.kind == LayerKind::depthwise_conv2d) {
                  acc += in.data[(iy * w + ix) * ls.c_in + oc] *
                         ls.qweight[(ky * kk + kx) * ls.c_in + oc];
                } else {
                  for (int64_t ic = 0; ic < ls.c_in; ++ic) {
                    acc += in.data[(iy * w + ix) * ls.c_in + ic] *
                           ls.qweight[((ky * kk + kx) * ls.c_in + ic) * ls.c_out + oc];
                  }
                }
              }
            }
            if (has_bias) acc += ls.qbias[oc] * bias_lift;
            out.data[(oy * wo + ox) * co + oc] = acc;
          }
        }
      }
    }
    double observed = 0;
    for (double v : out.data) observed = std::max(observed, std::fabs(v));
    record(observed);
    return out;
  }

  Value activation(ActKind act, const Value& in) {
    Value out;
    out.shape = in.shape;
    out.scale_units = 1;
    const int shift = (in.scale_units - 1) * scheme.l;
    const double inv = std::ldexp(1.0, -shift);
    const double six = 6.0 * std::ldexp(1.0, scheme.l);
    out.data.resize(in.data.size());
    for (size_t i = 0; i < in.data.size(); ++i) {
      double v = round_half_away(in.data[i] * inv);
      if (act == ActKind::relu) v = std::max(0.0, v);
      if (act == ActKind::relu6) v = std::clamp(v, 0.0, six);
      out.data[i] = v;
    }
    out.bound = in.bound * inv + 0.5;
    if (act == ActKind::relu6) out.bound = std::min(out.bound, six);
    return out;
  }

  Value pool(PoolKind kind, const Value& in) {
    Value out;
    const int64_t h = in.shape[0], w = in.shape[1], c = in.shape[2];
    out.shape = {h / 2, w / 2, c};
    out.scale_units = in.scale_units;
    out.bound = in.bound;
    out.data.assign(static_cast<size_t>(numel(out.shape)), 0.0);
    for (int64_t oy = 0; oy < h / 2; ++oy) {
      for (int64_t ox = 0; ox < w / 2; ++ox) {
        for (int64_t ch = 0; ch < c; ++ch) {
          double a = in.data[((2 * oy) * w + 2 * ox) * c + ch];
          double b = in.data[((2 * oy) * w + 2 * ox + 1) * c + ch];
          double d = in.data[((2 * oy + 1) * w + 2 * ox) * c + ch];
          double e = in.data[((2 * oy + 1) * w + 2 * ox + 1) * c + ch];
          out.data[(oy * (w / 2) + ox) * c + ch] =
              kind == PoolKind::max ? std::max({a, b, d, e})
                                    : round_half_away((a + b + d + e) / 4.0);
        }
      }
    }
    return out;
  }

  Value run_sequence(const std::vector<LayerSpec>& layers, Value v) {
    for (const LayerSpec& ls : layers) {
      switch (ls.kind) {
        case LayerKind::activation:
          v = activation(ls.act, v);
          break;
        case LayerKind::pool:
          v = pool(ls.pool, v);
          break;
        case LayerKind::residual_block: {
          Value b1 = ls.branch1.empty() ? v : run_sequence(ls.branch1, v);
          Value b2 = ls.branch2.empty() ? v : run_sequence(ls.branch2, v);
          int target = std::max(b1.scale_units, b2.scale_units);
          auto lift = [&](Value& bv) {
            double f = std::ldexp(1.0, (target - bv.scale_units) * scheme.l);
            for (double& x : bv.data) x *= f;
            bv.bound *= f;
            bv.scale_units = target;
          };
          lift(b1);
          lift(b2);
          Value merged;
          merged.shape = b1.shape;
          merged.scale_units = target;
          merged.bound = b1.bound + b2.bound;
          merged.data.resize(b1.data.size());
          for (size_t i = 0; i < b1.data.size(); ++i) merged.data[i] = b1.data[i] + b2.data[i];
          v = activation(ls.merge_act, merged);
          break;
        }
        default:
          v = linear(ls, v);
          break;
      }
    }
    return v;
  }
};

}  // namespace

RangeReport range_check(const ModelGraph& model, const std::vector<FloatTensor>& probes,
                        const QuantScheme& scheme) {
  if (probes.empty()) throw std::invalid_argument("range_check: probe set must be nonempty");
  if (!model.quantized) throw std::invalid_argument("range_check: model is not quantized");

  RangeReport report;
  report.limit = scheme.params.half();

  for (size_t pi = 0; pi < probes.size(); ++pi) {
    std::vector<RangeLayerEntry> entries;
    RangeWalker walker{scheme, entries};
    RangeWalker::Value v;
    v.shape = model.input_shape;
    FieldTensor qin = quantize_tensor(probes[pi], TensorRole::input, scheme);
    v.data = qin.data;
    v.scale_units = 1;
    v.bound = qin.max_abs();
    walker.run_sequence(model.layers, v);

    if (pi == 0) {
      report.layers = entries;
    } else {
      for (size_t i = 0; i < entries.size(); ++i) {
        auto& agg = report.layers[i];
        agg.observed_max_abs = std::max(agg.observed_max_abs, entries[i].observed_max_abs);
        agg.analytic_bound = std::max(agg.analytic_bound, entries[i].analytic_bound);
        agg.observed_pass = agg.observed_pass && entries[i].observed_pass;
        agg.analytic_pass = agg.analytic_pass && entries[i].analytic_pass;
      }
    }
  }

  report.pass = true;
  for (const auto& e : report.layers) report.pass = report.pass && e.observed_pass;
  return report;
}

std::string RangeReport::to_string() const {
  std::ostringstream os;
  os << "range certification (limit " << limit << ")\n";
  for (const auto& e : layers) {
    os << "  layer " << e.linear_index << " [" << e.label << "] observed " << e.observed_max_abs
       << (e.observed_pass ? " ok" : " FAIL") << ", analytic " << e.analytic_bound
       << (e.analytic_pass ? " ok" : " over") << "\n";
  }
  os << (pass ? "PASS" : "FAIL") << "\n";
  return os.str();
}

}  // namespace slalom
