#include "slalom/kernels.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cassert>
#include <cmath>

namespace slalom {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMajorMatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajorMatrix>;
using Map = Eigen::Map<RowMajorMatrix>;

int64_t out_spatial(int64_t n, int64_t stride) { return (n + stride - 1) / stride; }

int64_t pad_before(int64_t n, int64_t k, int64_t stride) {
  int64_t total = std::max<int64_t>(0, (out_spatial(n, stride) - 1) * stride + k - n);
  return total / 2;
}

void check_shape(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("shape mismatch: " + what);
}

}  // namespace

void OpCounter::merge(const OpCounter& other) {
  multiplications += other.multiplications;
  additions += other.additions;
  for (const auto& [k, v] : other.per_layer) per_layer[k] += v;
}

FieldTensor field_matmul(const FieldTensor& a, const FieldTensor& b, const FieldParams& params,
                         OpCounter* counter, std::string_view label) {
  check_shape(a.shape.size() == 2 && b.shape.size() == 2 && a.shape[1] == b.shape[0],
              "matmul " + shape_str(a.shape) + " * " + shape_str(b.shape));
  const int64_t r = a.shape[0], kk = a.shape[1], c = b.shape[1];
  FieldTensor y({r, c});
  if (r == 0 || c == 0) return y;

  if (counter) counter->add_mults(label, r * kk * c);

  const int64_t bound_a = static_cast<int64_t>(a.max_abs());
  const int64_t bound_b = static_cast<int64_t>(b.max_abs());
  const int64_t window = safe_window(bound_a, bound_b);

  ConstMap ma(a.ptr(), r, kk);
  ConstMap mb(b.ptr(), kk, c);
  Map my(y.ptr(), r, c);

  if (kk == 0) return y;
  if (window >= kk) {
    my.noalias() = ma * mb;
    mod_reduce_buffer(y.ptr(), y.size(), params);
    return y;
  }

  my.setZero();
  for (int64_t start = 0; start < kk; start += window) {
    int64_t len = std::min(window, kk - start);
    my.noalias() += ma.middleCols(start, len) * mb.middleRows(start, len);
    mod_reduce_buffer(y.ptr(), y.size(), params);
  }
  return y;
}

FieldTensor im2col(const FieldTensor& x, int64_t k, int64_t stride) {
  check_shape(x.shape.size() == 3, "im2col expects [h,w,c], got " + shape_str(x.shape));
  const int64_t h = x.shape[0], w = x.shape[1], c = x.shape[2];
  const int64_t ho = out_spatial(h, stride), wo = out_spatial(w, stride);
  const int64_t ph = pad_before(h, k, stride), pw = pad_before(w, k, stride);
  FieldTensor out({ho * wo, k * k * c});
  for (int64_t oy = 0; oy < ho; ++oy) {
    for (int64_t ox = 0; ox < wo; ++ox) {
      double* row = out.ptr() + (oy * wo + ox) * k * k * c;
      for (int64_t ky = 0; ky < k; ++ky) {
        int64_t iy = oy * stride + ky - ph;
        for (int64_t kx = 0; kx < k; ++kx) {
          int64_t ix = ox * stride + kx - pw;
          double* dst = row + (ky * k + kx) * c;
          if (iy < 0 || iy >= h || ix < 0 || ix >= w) {
            std::fill(dst, dst + c, 0.0);
          } else {
            const double* src = x.ptr() + (iy * w + ix) * c;
            std::copy(src, src + c, dst);
          }
        }
      }
    }
  }
  return out;
}

FieldTensor add_bias(const FieldTensor& y, const FieldTensor& bias, const FieldParams& params) {
  const int64_t n = bias.size();
  check_shape(n > 0 && y.size() % n == 0 && y.shape.back() == n,
              "bias of length " + std::to_string(n) + " against " + shape_str(y.shape));
  FieldTensor out = y;
  const double p = static_cast<double>(params.p);
  const double half = static_cast<double>(params.half());
  for (int64_t i = 0; i < y.size(); ++i) {
    double v = out[i] + bias[i % n];
    if (v > half) v -= p;
    if (v < -half) v += p;
    out[i] = v;
  }
  return out;
}

FieldTensor lift_scale(const FieldTensor& t, int bits, const FieldParams& params) {
  if (bits == 0) return t;
  FieldTensor out(t.shape);
  const double f = std::ldexp(1.0, bits);
  for (int64_t i = 0; i < t.size(); ++i) out[i] = mod_reduce(t[i] * f, params);
  return out;
}

FieldTensor fc_forward(const FieldTensor& x, const FieldTensor& weight, const FieldTensor* bias,
                       const FieldParams& params, OpCounter* counter, std::string_view label) {
  check_shape(weight.shape.size() == 2, "fc weight " + shape_str(weight.shape));
  const int64_t m = weight.shape[0], n = weight.shape[1];
  const bool batched = x.shape.size() == 2;
  check_shape(batched ? x.shape[1] == m : x.size() == m,
              "fc input " + shape_str(x.shape) + " against weight " + shape_str(weight.shape));
  FieldTensor xin = batched ? x : x.reshaped({1, m});
  FieldTensor y = field_matmul(xin, weight, params, counter, label);
  if (bias) y = add_bias(y, *bias, params);
  return batched ? y : y.reshaped({n});
}

FieldTensor conv2d_forward(const FieldTensor& x, const FieldTensor& weight, const FieldTensor* bias,
                           int64_t stride, const FieldParams& params, OpCounter* counter,
                           std::string_view label) {
  check_shape(weight.shape.size() == 4 && x.shape.size() == 3 && x.shape[2] == weight.shape[2],
              "conv input " + shape_str(x.shape) + " weight " + shape_str(weight.shape));
  const int64_t k = weight.shape[0], c_in = weight.shape[2], c_out = weight.shape[3];
  const int64_t ho = out_spatial(x.shape[0], stride), wo = out_spatial(x.shape[1], stride);
  FieldTensor patches = im2col(x, k, stride);
  FieldTensor y = field_matmul(patches, weight.reshaped({k * k * c_in, c_out}), params, counter,
                               label);
  y = y.reshaped({ho, wo, c_out});
  if (bias) y = add_bias(y, *bias, params);
  return y;
}

FieldTensor depthwise_forward(const FieldTensor& x, const FieldTensor& weight,
                              const FieldTensor* bias, int64_t stride, const FieldParams& params,
                              OpCounter* counter, std::string_view label) {
  check_shape(weight.shape.size() == 3 && x.shape.size() == 3 && x.shape[2] == weight.shape[2],
              "depthwise input " + shape_str(x.shape) + " weight " + shape_str(weight.shape));
  const int64_t h = x.shape[0], w = x.shape[1], c = x.shape[2], k = weight.shape[0];
  const int64_t ho = out_spatial(h, stride), wo = out_spatial(w, stride);
  const int64_t ph = pad_before(h, k, stride), pw = pad_before(w, k, stride);
  FieldTensor y({ho, wo, c});
  if (counter) counter->add_mults(label, ho * wo * k * k * c);

  const int64_t window =
      safe_window(static_cast<int64_t>(x.max_abs()), static_cast<int64_t>(weight.max_abs()));
  for (int64_t oy = 0; oy < ho; ++oy) {
    for (int64_t ox = 0; ox < wo; ++ox) {
      for (int64_t ch = 0; ch < c; ++ch) {
        double acc = 0;
        int64_t terms = 0;
        for (int64_t ky = 0; ky < k; ++ky) {
          int64_t iy = oy * stride + ky - ph;
          if (iy < 0 || iy >= h) continue;
          for (int64_t kx = 0; kx < k; ++kx) {
            int64_t ix = ox * stride + kx - pw;
            if (ix < 0 || ix >= w) continue;
            acc += x[(iy * w + ix) * c + ch] * weight[(ky * k + kx) * c + ch];
            if (++terms == window) {
              acc = mod_reduce(acc, params);
              terms = 0;
            }
          }
        }
        y[(oy * wo + ox) * c + ch] = mod_reduce(acc, params);
      }
    }
  }
  if (bias) y = add_bias(y, *bias, params);
  return y;
}

FieldTensor pointwise_forward(const FieldTensor& x, const FieldTensor& weight,
                              const FieldTensor* bias, const FieldParams& params,
                              OpCounter* counter, std::string_view label) {
  check_shape(weight.shape.size() == 2 && x.shape.size() == 3 && x.shape[2] == weight.shape[0],
              "pointwise input " + shape_str(x.shape) + " weight " + shape_str(weight.shape));
  const int64_t h = x.shape[0], w = x.shape[1];
  const int64_t c_in = weight.shape[0], c_out = weight.shape[1];
  FieldTensor y =
      field_matmul(x.reshaped({h * w, c_in}), weight, params, counter, label);
  y = y.reshaped({h, w, c_out});
  if (bias) y = add_bias(y, *bias, params);
  return y;
}

FieldTensor linear_forward(const LayerSpec& layer, const FieldTensor& x, bool with_bias,
                           const FieldParams& params, OpCounter* counter) {
  const FieldTensor* bias = with_bias && layer.qbias.size() > 0 ? &layer.qbias : nullptr;
  switch (layer.kind) {
    case LayerKind::fc:
      return fc_forward(x.size() == layer.h_in && x.shape.size() != 2 ? x.reshaped({layer.h_in}) : x,
                        layer.qweight, bias, params, counter, "fc");
    case LayerKind::conv2d:
      return conv2d_forward(x, layer.qweight, bias, layer.stride, params, counter, "conv2d");
    case LayerKind::depthwise_conv2d:
      return depthwise_forward(x, layer.qweight, bias, layer.stride, params, counter, "depthwise");
    case LayerKind::pointwise_conv2d:
      return pointwise_forward(x, layer.qweight, bias, params, counter, "pointwise");
    default:
      throw std::invalid_argument("linear_forward on non-linear layer");
  }
}

int64_t linear_cost(const LayerSpec& layer) {
  switch (layer.kind) {
    case LayerKind::fc:
      return layer.h_in * layer.h_out;
    case LayerKind::conv2d:
      return out_spatial(layer.h, layer.stride) * out_spatial(layer.w, layer.stride) *
             layer.k * layer.k * layer.c_in * layer.c_out;
    case LayerKind::depthwise_conv2d:
      return out_spatial(layer.h, layer.stride) * out_spatial(layer.w, layer.stride) *
             layer.k * layer.k * layer.c_in;
    case LayerKind::pointwise_conv2d:
      return layer.h * layer.w * layer.c_in * layer.c_out;
    default:
      return 0;
  }
}

FieldTensor activation_apply(const FieldTensor& y, ActKind kind, int shift_bits,
                             const QuantScheme& scheme) {
  FieldTensor x = requantize_shift(y, shift_bits, scheme);
  const double six = 6.0 * static_cast<double>(scheme.scale());
  switch (kind) {
    case ActKind::relu:
      for (auto& v : x.data) v = std::max(0.0, v);
      break;
    case ActKind::relu6:
      for (auto& v : x.data) v = std::clamp(v, 0.0, six);
      break;
    case ActKind::none:
      break;
  }
  return x;
}

FieldTensor pool_forward(const FieldTensor& x, PoolKind kind) {
  check_shape(x.shape.size() == 3 && x.shape[0] % 2 == 0 && x.shape[1] % 2 == 0,
              "2x2 pool input " + shape_str(x.shape));
  const int64_t h = x.shape[0], w = x.shape[1], c = x.shape[2];
  FieldTensor out({h / 2, w / 2, c});
  for (int64_t oy = 0; oy < h / 2; ++oy) {
    for (int64_t ox = 0; ox < w / 2; ++ox) {
      for (int64_t ch = 0; ch < c; ++ch) {
        double a = x[((2 * oy) * w + 2 * ox) * c + ch];
        double b = x[((2 * oy) * w + 2 * ox + 1) * c + ch];
        double d = x[((2 * oy + 1) * w + 2 * ox) * c + ch];
        double e = x[((2 * oy + 1) * w + 2 * ox + 1) * c + ch];
        out[(oy * (w / 2) + ox) * c + ch] = kind == PoolKind::max
                                                ? std::max({a, b, d, e})
                                                : round_half_away((a + b + d + e) / 4.0);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// untrusted fast paths

namespace {

RowMajorMatrixF to_f32(const FieldTensor& t, int64_t rows, int64_t cols) {
  RowMajorMatrixF m(rows, cols);
  for (int64_t i = 0; i < rows * cols; ++i) m.data()[i] = static_cast<float>(t[i]);
  return m;
}

FieldTensor f32_matmul(const FieldTensor& a, const FieldTensor& b, OpCounter* counter,
                       std::string_view label) {
  const int64_t r = a.shape[0], kk = a.shape[1], c = b.shape[1];
  if (counter) counter->add_mults(label, r * kk * c);
  RowMajorMatrixF ma = to_f32(a, r, kk);
  RowMajorMatrixF mb = to_f32(b, kk, c);
  RowMajorMatrixF my = ma * mb;
  FieldTensor y({r, c});
  for (int64_t i = 0; i < r * c; ++i) y.data[static_cast<size_t>(i)] = static_cast<double>(my.data()[i]);
  return y;
}

}  // namespace

FieldTensor untrusted_linear(const LayerSpec& layer, const FieldTensor& x, UntrustedMode mode,
                             const FieldParams& params, OpCounter* counter) {
  if (mode == UntrustedMode::blinded_f64) {
    return linear_forward(layer, x, /*with_bias=*/false, params, counter);
  }
  // single-precision path: exact as long as all partial sums stay below 2^24
  switch (layer.kind) {
    case LayerKind::fc: {
      FieldTensor xin = x.shape.size() == 2 ? x : x.reshaped({1, layer.h_in});
      FieldTensor y = f32_matmul(xin, layer.qweight, counter, "fc");
      return x.shape.size() == 2 ? y : y.reshaped({layer.h_out});
    }
    case LayerKind::conv2d: {
      FieldTensor patches = im2col(x, layer.k, layer.stride);
      FieldTensor y = f32_matmul(
          patches, layer.qweight.reshaped({layer.k * layer.k * layer.c_in, layer.c_out}), counter,
          "conv2d");
      return y.reshaped({out_spatial(layer.h, layer.stride), out_spatial(layer.w, layer.stride),
                         layer.c_out});
    }
    case LayerKind::depthwise_conv2d: {
      // k^2 taps per output; f32 accumulation, no reductions
      const int64_t h = layer.h, w = layer.w, c = layer.c_in, k = layer.k, stride = layer.stride;
      const int64_t ho = out_spatial(h, stride), wo = out_spatial(w, stride);
      const int64_t ph = pad_before(h, k, stride), pw = pad_before(w, k, stride);
      FieldTensor y({ho, wo, c});
      if (counter) counter->add_mults("depthwise", ho * wo * k * k * c);
      for (int64_t oy = 0; oy < ho; ++oy) {
        for (int64_t ox = 0; ox < wo; ++ox) {
          for (int64_t ch = 0; ch < c; ++ch) {
            float acc = 0.0f;
            for (int64_t ky = 0; ky < k; ++ky) {
              int64_t iy = oy * stride + ky - ph;
              if (iy < 0 || iy >= h) continue;
              for (int64_t kx = 0; kx < k; ++kx) {
                int64_t ix = ox * stride + kx - pw;
                if (ix < 0 || ix >= w) continue;
                acc += static_cast<float>(x[(iy * w + ix) * c + ch]) *
                       static_cast<float>(layer.qweight[(ky * k + kx) * c + ch]);
              }
            }
            y[(oy * wo + ox) * c + ch] = static_cast<double>(acc);
          }
        }
      }
      return y;
    }
    case LayerKind::pointwise_conv2d: {
      FieldTensor y = f32_matmul(x.reshaped({layer.h * layer.w, layer.c_in}), layer.qweight,
                                 counter, "pointwise");
      return y.reshaped({layer.h, layer.w, layer.c_out});
    }
    default:
      throw std::invalid_argument("untrusted_linear on non-linear layer");
  }
}

}  // namespace slalom
