#include "slalom/verify.hpp"

#include <boost/math/distributions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "plan.hpp"

namespace slalom {

namespace {

int64_t out_spatial(int64_t n, int64_t stride) { return (n + stride - 1) / stride; }

int64_t pad_before(int64_t n, int64_t k, int64_t stride) {
  int64_t total = std::max<int64_t>(0, (out_spatial(n, stride) - 1) * stride + k - n);
  return total / 2;
}

bool equal_mod_p(const FieldTensor& a, const FieldTensor& b) {
  return a.data == b.data;  // both sides hold reduced centered residues
}

// acc = sum_b s[b] * rows[b] over Z_p, with windowed reduction
FieldTensor reduce_rows(const std::vector<const FieldTensor*>& rows, const FieldTensor& s,
                        const FieldParams& params) {
  const int64_t b_count = static_cast<int64_t>(rows.size());
  const int64_t n = rows.empty() ? 0 : rows[0]->size();
  FieldTensor acc({n});
  const int64_t window = safe_window(params.half(), params.check_range_bound);
  int64_t in_window = 0;
  for (int64_t b = 0; b < b_count; ++b) {
    const double sb = s[b];
    const double* src = rows[b]->ptr();
    for (int64_t i = 0; i < n; ++i) acc[i] += sb * src[i];
    if (++in_window == window) {
      mod_reduce_tensor(acc, params);
      in_window = 0;
    }
  }
  mod_reduce_tensor(acc, params);
  return acc;
}

}  // namespace

void SoundnessConfig::validate() const {
  if (k < 1) throw std::invalid_argument("soundness config: repetitions k must be >= 1");
  field.validate();
}

Verdict check_plain_matmul(const FieldTensor& X, const FieldTensor& W, const FieldTensor& Y,
                           const SoundnessConfig& cfg, PrfStream& prf, OpCounter* counter,
                           std::string_view label) {
  cfg.validate();
  if (X.shape.size() != 2 || W.shape.size() != 2 || Y.shape.size() != 2 ||
      X.shape[1] != W.shape[0] || Y.shape[0] != X.shape[0] || Y.shape[1] != W.shape[1]) {
    throw std::invalid_argument("check_plain_matmul: inconsistent shapes " + shape_str(X.shape) +
                                " * " + shape_str(W.shape) + " = " + shape_str(Y.shape));
  }
  const int64_t B = X.shape[0], m = W.shape[0], n = W.shape[1];

  std::vector<const FieldTensor*> x_rows, y_rows;
  std::vector<FieldTensor> x_store, y_store;
  x_store.reserve(static_cast<size_t>(B));
  y_store.reserve(static_cast<size_t>(B));
  for (int64_t b = 0; b < B; ++b) {
    FieldTensor xr({m}), yr({n});
    std::copy(X.ptr() + b * m, X.ptr() + (b + 1) * m, xr.ptr());
    std::copy(Y.ptr() + b * n, Y.ptr() + (b + 1) * n, yr.ptr());
    x_store.push_back(std::move(xr));
    y_store.push_back(std::move(yr));
  }
  for (int64_t b = 0; b < B; ++b) {
    x_rows.push_back(&x_store[static_cast<size_t>(b)]);
    y_rows.push_back(&y_store[static_cast<size_t>(b)]);
  }

  for (int rep = 0; rep < cfg.k; ++rep) {
    FieldTensor s = prf_field_stream(prf, B, SampleRange::check_range, cfg.field);
    FieldTensor sx = reduce_rows(x_rows, s, cfg.field);  // B*m mults
    FieldTensor sy = reduce_rows(y_rows, s, cfg.field);  // B*n mults
    if (counter) counter->add_mults(label, B * (m + n));
    FieldTensor lhs = field_matmul(sx.reshaped({1, m}), W, cfg.field, counter, label);  // m*n
    if (!equal_mod_p(lhs.reshaped({n}), sy)) return Verdict::reject;
  }
  return Verdict::accept;
}

Verdict check_conv_folded(const FieldTensor& x, const FieldTensor& weight, const FieldTensor& y,
                          int64_t stride, const SoundnessConfig& cfg, PrfStream& prf,
                          OpCounter* counter, std::string_view label) {
  cfg.validate();
  if (weight.shape.size() != 2 && weight.shape.size() != 4) {
    throw std::invalid_argument("check_conv_folded: weight must be [k,k,c_in,c_out] or [c_in,c_out]");
  }
  const bool pointwise = weight.shape.size() == 2;
  const int64_t k = pointwise ? 1 : weight.shape[0];
  const int64_t c_in = pointwise ? weight.shape[0] : weight.shape[2];
  const int64_t c_out = pointwise ? weight.shape[1] : weight.shape[3];
  if (x.shape.size() != 3 || x.shape[2] != c_in) {
    throw std::invalid_argument("check_conv_folded: input " + shape_str(x.shape) +
                                " incompatible with kernel");
  }
  const int64_t h = x.shape[0], w = x.shape[1];
  const int64_t ho = out_spatial(h, stride), wo = out_spatial(w, stride);
  if (y.shape.size() != 3 || y.shape[0] != ho || y.shape[1] != wo || y.shape[2] != c_out) {
    throw std::invalid_argument("check_conv_folded: output " + shape_str(y.shape) +
                                " has wrong shape");
  }
  const int64_t ph = pad_before(h, k, stride), pw = pad_before(w, k, stride);

  for (int rep = 0; rep < cfg.k; ++rep) {
    FieldTensor s = prf_field_stream(prf, c_out, SampleRange::check_range, cfg.field);

    // fold the kernel along output channels: k^2 * c_in * c_out mults
    FieldTensor folded({k, k, c_in});
    {
      const int64_t window = safe_window(cfg.field.half(), cfg.field.check_range_bound);
      for (int64_t t = 0; t < k * k * c_in; ++t) {
        double acc = 0;
        int64_t in_window = 0;
        for (int64_t oc = 0; oc < c_out; ++oc) {
          acc += weight[t * c_out + oc] * s[oc];
          if (++in_window == window) {
            acc = mod_reduce(acc, cfg.field);
            in_window = 0;
          }
        }
        folded[t] = mod_reduce(acc, cfg.field);
      }
      if (counter) counter->add_mults(label, k * k * c_in * c_out);
    }

    // y s: one channel reduction per output position, |y| mults
    FieldTensor ys({ho, wo});
    {
      for (int64_t pos = 0; pos < ho * wo; ++pos) {
        double acc = 0;
        int64_t in_window = 0;
        const int64_t window = safe_window(cfg.field.half(), cfg.field.check_range_bound);
        for (int64_t oc = 0; oc < c_out; ++oc) {
          acc += y[pos * c_out + oc] * s[oc];
          if (++in_window == window) {
            acc = mod_reduce(acc, cfg.field);
            in_window = 0;
          }
        }
        ys[pos] = mod_reduce(acc, cfg.field);
      }
      if (counter) counter->add_mults(label, ho * wo * c_out);
    }

    // single-output-channel convolution with the folded kernel:
    // ho*wo*k^2*c_in mults (folded values are full-field residues)
    FieldTensor conv({ho, wo});
    {
      const int64_t window = safe_window(cfg.field.half(), cfg.field.half());
      for (int64_t oy = 0; oy < ho; ++oy) {
        for (int64_t ox = 0; ox < wo; ++ox) {
          double acc = 0;
          int64_t in_window = 0;
          for (int64_t ky = 0; ky < k; ++ky) {
            int64_t iy = oy * stride + ky - ph;
            if (iy < 0 || iy >= h) continue;
            for (int64_t kx = 0; kx < k; ++kx) {
              int64_t ix = ox * stride + kx - pw;
              if (ix < 0 || ix >= w) continue;
              for (int64_t ic = 0; ic < c_in; ++ic) {
                acc += x[(iy * w + ix) * c_in + ic] * folded[(ky * k + kx) * c_in + ic];
                if (++in_window == window) {
                  acc = mod_reduce(acc, cfg.field);
                  in_window = 0;
                }
              }
            }
          }
          conv[oy * wo + ox] = mod_reduce(acc, cfg.field);
        }
      }
      if (counter) counter->add_mults(label, ho * wo * k * k * c_in);
    }

    if (!equal_mod_p(conv, ys)) return Verdict::reject;
  }
  return Verdict::accept;
}

Verdict check_depthwise_folded(const std::vector<const FieldTensor*>& X,
                               const FieldTensor& weight, const std::vector<const FieldTensor*>& Y,
                               int64_t stride, const SoundnessConfig& cfg, PrfStream& prf,
                               OpCounter* counter, std::string_view label) {
  cfg.validate();
  if (X.empty() || X.size() != Y.size()) {
    throw std::invalid_argument("check_depthwise_folded: batch mismatch");
  }
  const int64_t B = static_cast<int64_t>(X.size());
  const std::vector<int64_t> in_shape = X[0]->shape;

  for (int rep = 0; rep < cfg.k; ++rep) {
    FieldTensor s = prf_field_stream(prf, B, SampleRange::check_range, cfg.field);
    FieldTensor xb = reduce_rows(X, s, cfg.field).reshaped(in_shape);
    FieldTensor yb = reduce_rows(Y, s, cfg.field).reshaped(Y[0]->shape);
    if (counter) counter->add_mults(label, B * (X[0]->size() + Y[0]->size()));
    FieldTensor recomputed =
        depthwise_forward(xb, weight, nullptr, stride, cfg.field, counter, label);
    if (!equal_mod_p(recomputed, yb)) return Verdict::reject;
  }
  return Verdict::accept;
}

// ---------------------------------------------------------------------------
// preprocessing (Lemma-2 style checks)

FieldTensor transpose_apply(const LayerSpec& layer, const FieldTensor& s, const FieldParams& params,
                            OpCounter* counter) {
  switch (layer.kind) {
    case LayerKind::fc: {
      if (s.size() != layer.h_out) throw std::invalid_argument("transpose_apply: fc size mismatch");
      FieldTensor out =
          field_matmul(layer.qweight, s.reshaped({layer.h_out, 1}), params, counter, "preproc");
      return out.reshaped({layer.h_in});
    }
    case LayerKind::pointwise_conv2d: {
      FieldTensor g = s.reshaped({layer.h * layer.w, layer.c_out});
      FieldTensor wt({layer.c_out, layer.c_in});
      for (int64_t i = 0; i < layer.c_in; ++i)
        for (int64_t o = 0; o < layer.c_out; ++o) wt[o * layer.c_in + i] = layer.qweight[i * layer.c_out + o];
      FieldTensor out = field_matmul(g, wt, params, counter, "preproc");
      return out.reshaped({layer.h * layer.w * layer.c_in});
    }
    case LayerKind::conv2d: {
      const int64_t k = layer.k, c_in = layer.c_in, c_out = layer.c_out;
      const int64_t h = layer.h, w = layer.w, stride = layer.stride;
      const int64_t ho = out_spatial(h, stride), wo = out_spatial(w, stride);
      const int64_t ph = pad_before(h, k, stride), pw = pad_before(w, k, stride);
      FieldTensor g = s.reshaped({ho * wo, c_out});
      FieldTensor wt({c_out, k * k * c_in});
      for (int64_t t = 0; t < k * k * c_in; ++t)
        for (int64_t o = 0; o < c_out; ++o) wt[o * k * k * c_in + t] = layer.qweight[t * c_out + o];
      FieldTensor a = field_matmul(g, wt, params, counter, "preproc");  // [ho*wo, k^2*c_in]
      // scatter-add the patch gradients back onto the input grid (col2im)
      FieldTensor out({h * w * c_in});
      for (int64_t oy = 0; oy < ho; ++oy) {
        for (int64_t ox = 0; ox < wo; ++ox) {
          const double* row = a.ptr() + (oy * wo + ox) * k * k * c_in;
          for (int64_t ky = 0; ky < k; ++ky) {
            int64_t iy = oy * stride + ky - ph;
            if (iy < 0 || iy >= h) continue;
            for (int64_t kx = 0; kx < k; ++kx) {
              int64_t ix = ox * stride + kx - pw;
              if (ix < 0 || ix >= w) continue;
              for (int64_t ic = 0; ic < c_in; ++ic) {
                out[(iy * w + ix) * c_in + ic] += row[(ky * k + kx) * c_in + ic];
              }
            }
          }
        }
      }
      mod_reduce_tensor(out, params);
      return out;
    }
    case LayerKind::depthwise_conv2d: {
      const int64_t k = layer.k, c = layer.c_in;
      const int64_t h = layer.h, w = layer.w, stride = layer.stride;
      const int64_t ho = out_spatial(h, stride), wo = out_spatial(w, stride);
      const int64_t ph = pad_before(h, k, stride), pw = pad_before(w, k, stride);
      if (counter) counter->add_mults("preproc", ho * wo * k * k * c);
      FieldTensor out({h * w * c});
      const int64_t window = safe_window(params.half(), params.half());
      int64_t since_reduce = 0;
      for (int64_t oy = 0; oy < ho; ++oy) {
        for (int64_t ox = 0; ox < wo; ++ox) {
          for (int64_t ky = 0; ky < k; ++ky) {
            int64_t iy = oy * stride + ky - ph;
            if (iy < 0 || iy >= h) continue;
            for (int64_t kx = 0; kx < k; ++kx) {
              int64_t ix = ox * stride + kx - pw;
              if (ix < 0 || ix >= w) continue;
              for (int64_t ch = 0; ch < c; ++ch) {
                out[(iy * w + ix) * c + ch] +=
                    s[(oy * wo + ox) * c + ch] * layer.qweight[(ky * k + kx) * c + ch];
              }
            }
          }
          if (++since_reduce * k * k >= window) {
            mod_reduce_tensor(out, params);
            since_reduce = 0;
          }
        }
      }
      mod_reduce_tensor(out, params);
      return out;
    }
    default:
      throw std::invalid_argument("transpose_apply on non-linear layer");
  }
}

FreivaldsSecret precompute_secrets(const ModelGraph& model, const SoundnessConfig& cfg,
                                   PrfStream& prf, bool fuse_separable, OpCounter* counter) {
  cfg.validate();
  if (!model.quantized) throw std::invalid_argument("precompute_secrets: model not quantized");
  detail::Plan plan = detail::build_plan(model, fuse_separable);

  FreivaldsSecret secret;
  secret.k = cfg.k;
  int64_t max_y = 0;
  for (const auto& u : plan.units) {
    secret.x_sizes.push_back(u.x_size);
    secret.y_sizes.push_back(u.y_size);
    max_y = std::max(max_y, u.y_size);
  }
  for (int rep = 0; rep < cfg.k; ++rep) {
    FieldTensor master = prf_field_stream(prf, max_y, SampleRange::check_range, cfg.field);
    std::vector<FieldTensor> folded;
    for (const auto& u : plan.units) {
      FieldTensor su({u.y_size});
      std::copy(master.ptr(), master.ptr() + u.y_size, su.ptr());
      // walk the unit's operators back to front
      FieldTensor cur = su;
      for (auto it = u.ops.rbegin(); it != u.ops.rend(); ++it) {
        cur = transpose_apply(**it, cur, cfg.field, counter);
      }
      folded.push_back(std::move(cur));
    }
    secret.s.push_back(std::move(master));
    secret.s_tilde.push_back(std::move(folded));
  }
  return secret;
}

Verdict check_preprocessed(const FieldTensor& x, const FieldTensor& y,
                           const FreivaldsSecret& secret, int64_t unit_index,
                           const SoundnessConfig& cfg, OpCounter* counter,
                           std::string_view label) {
  cfg.validate();
  if (secret.k != cfg.k || unit_index < 0 || unit_index >= secret.unit_count()) {
    throw std::invalid_argument("check_preprocessed: no secret prepared for unit " +
                                std::to_string(unit_index));
  }
  const size_t ui = static_cast<size_t>(unit_index);
  if (x.size() != secret.x_sizes[ui] || y.size() != secret.y_sizes[ui]) {
    throw std::invalid_argument("check_preprocessed: tensor sizes do not match unit " +
                                std::to_string(unit_index));
  }
  for (int rep = 0; rep < cfg.k; ++rep) {
    std::span<const double> s(secret.s[static_cast<size_t>(rep)].ptr(),
                              static_cast<size_t>(y.size()));
    const FieldTensor& st = secret.s_tilde[static_cast<size_t>(rep)][ui];
    double ys = inner_product_deferred(std::span<const double>(y.ptr(), static_cast<size_t>(y.size())),
                                       s, cfg.field, SampleRange::check_range);
    double xs = inner_product_deferred(std::span<const double>(x.ptr(), static_cast<size_t>(x.size())),
                                       std::span<const double>(st.ptr(), static_cast<size_t>(st.size())),
                                       cfg.field, SampleRange::full_field);
    if (counter) counter->add_mults(label, x.size() + y.size());
    if (ys != xs) return Verdict::reject;
  }
  return Verdict::accept;
}

// ---------------------------------------------------------------------------
// soundness experiments

std::string tamper_kind_name(TamperKind t) {
  switch (t) {
    case TamperKind::none: return "none";
    case TamperKind::single_entry: return "single_entry";
    case TamperKind::whole_row: return "whole_row";
    case TamperKind::scale: return "scale";
    case TamperKind::replace: return "replace";
  }
  return "?";
}

void clopper_pearson_99(int64_t x, int64_t n, double* lo, double* hi) {
  const double alpha = 0.01;
  if (n <= 0) {
    *lo = 0;
    *hi = 1;
    return;
  }
  if (x <= 0) {
    *lo = 0;
  } else {
    boost::math::beta_distribution<double> d(static_cast<double>(x),
                                             static_cast<double>(n - x + 1));
    *lo = boost::math::quantile(d, alpha / 2);
  }
  if (x >= n) {
    *hi = 1;
  } else {
    boost::math::beta_distribution<double> d(static_cast<double>(x + 1),
                                             static_cast<double>(n - x));
    *hi = boost::math::quantile(d, 1 - alpha / 2);
  }
}

namespace {

struct ExperimentLayer {
  LayerSpec layer;
  FieldTensor x;
  FieldTensor y_honest;
  FieldTensor y_tampered;
};

FieldTensor random_field_tensor(PrfStream& prf, std::vector<int64_t> shape,
                                const FieldParams& params) {
  FieldTensor t = prf_field_stream(prf, numel(shape), SampleRange::full_field, params);
  return t.reshaped(std::move(shape));
}

ExperimentLayer make_experiment_layer(LayerKind kind, TamperKind tamper,
                                      const SoundnessConfig& cfg, uint64_t seed) {
  PrfKey key = key_from_seed(seed, "soundness-layer");
  PrfStream prf(key, "layer");
  ExperimentLayer e;
  LayerSpec& ls = e.layer;
  ls.kind = kind;
  switch (kind) {
    case LayerKind::fc:
      ls.h_in = 2; ls.h_out = 2;
      ls.qweight = random_field_tensor(prf, {2, 2}, cfg.field);
      e.x = random_field_tensor(prf, {2}, cfg.field);
      break;
    case LayerKind::conv2d:
      ls.h = 4; ls.w = 4; ls.c_in = 2; ls.c_out = 3; ls.k = 3; ls.stride = 1;
      ls.qweight = random_field_tensor(prf, {3, 3, 2, 3}, cfg.field);
      e.x = random_field_tensor(prf, {4, 4, 2}, cfg.field);
      break;
    case LayerKind::depthwise_conv2d:
      ls.h = 4; ls.w = 4; ls.c_in = 3; ls.c_out = 3; ls.k = 3; ls.stride = 1;
      ls.qweight = random_field_tensor(prf, {3, 3, 3}, cfg.field);
      e.x = random_field_tensor(prf, {4, 4, 3}, cfg.field);
      break;
    case LayerKind::pointwise_conv2d:
      ls.h = 3; ls.w = 3; ls.c_in = 2; ls.c_out = 3; ls.k = 1; ls.stride = 1;
      ls.qweight = random_field_tensor(prf, {2, 3}, cfg.field);
      e.x = random_field_tensor(prf, {3, 3, 2}, cfg.field);
      break;
    default:
      throw std::invalid_argument("soundness_experiment: not a linear layer kind");
  }
  e.y_honest = linear_forward(ls, e.x, /*with_bias=*/false, cfg.field);

  FieldTensor& y = e.y_tampered;
  y = e.y_honest;
  const int64_t n = y.size();
  auto nonzero_delta = [&]() {
    return 1.0 + static_cast<double>(prf.uniform_below(static_cast<uint64_t>(cfg.field.p - 1)));
  };
  switch (tamper) {
    case TamperKind::none:
      break;
    case TamperKind::single_entry: {
      int64_t j = static_cast<int64_t>(prf.uniform_below(static_cast<uint64_t>(n)));
      y[j] = mod_reduce(y[j] + nonzero_delta(), cfg.field);
      break;
    }
    case TamperKind::whole_row: {
      for (int64_t j = 0; j < n; ++j) y[j] = mod_reduce(y[j] + nonzero_delta(), cfg.field);
      break;
    }
    case TamperKind::scale: {
      double c = 2.0 + static_cast<double>(prf.uniform_below(16));
      bool any = false;
      for (int64_t j = 0; j < n; ++j) {
        y[j] = mod_reduce(y[j] * c, cfg.field);
        any = any || y[j] != e.y_honest[j];
      }
      if (!any) y[0] = mod_reduce(y[0] + 1.0, cfg.field);  // degenerate all-zero output
      break;
    }
    case TamperKind::replace: {
      y = random_field_tensor(prf, y.shape, cfg.field);
      if (y.data == e.y_honest.data) y[0] = mod_reduce(y[0] + 1.0, cfg.field);
      break;
    }
  }
  return e;
}

}  // namespace

SoundnessResult soundness_experiment(LayerKind kind, TamperKind tamper,
                                     const SoundnessConfig& cfg, int64_t trials, uint64_t seed,
                                     bool exhaustive) {
  cfg.validate();
  if (trials < 1000) throw std::invalid_argument("soundness_experiment: need at least 10^3 trials");
  ExperimentLayer e = make_experiment_layer(kind, tamper, cfg, seed);

  // precomputed folded secrets depend only on s, so draw s fresh per trial
  // and apply the Lemma-2 relation y^T s == x^T (W^T s)
  const int64_t ny = e.y_honest.size();
  PrfKey key = key_from_seed(seed, "soundness-checks");
  PrfStream prf(key, "s");

  auto rep_accepts = [&](const FieldTensor& s) {
    FieldTensor st = transpose_apply(e.layer, s, cfg.field);
    double ys = inner_product_deferred(
        std::span<const double>(e.y_tampered.ptr(), static_cast<size_t>(ny)),
        std::span<const double>(s.ptr(), static_cast<size_t>(ny)), cfg.field,
        SampleRange::check_range);
    double xs = inner_product_deferred(
        std::span<const double>(e.x.ptr(), static_cast<size_t>(e.x.size())),
        std::span<const double>(st.ptr(), static_cast<size_t>(st.size())), cfg.field,
        SampleRange::full_field);
    return ys == xs;
  };

  SoundnessResult result;
  result.trials = trials;
  result.analytic_bound = cfg.per_layer_bound();
  for (int64_t t = 0; t < trials; ++t) {
    bool ok = true;
    for (int rep = 0; rep < cfg.k && ok; ++rep) {
      FieldTensor s = prf_field_stream(prf, ny, SampleRange::check_range, cfg.field);
      ok = rep_accepts(s);
    }
    if (ok) ++result.accepts;
  }
  result.rate = static_cast<double>(result.accepts) / static_cast<double>(trials);
  clopper_pearson_99(result.accepts, result.trials, &result.ci_lo, &result.ci_hi);
  if (tamper == TamperKind::none) {
    result.pass = result.accepts == result.trials;  // completeness: never reject honest output
  } else {
    double width = result.ci_hi - result.ci_lo;
    result.pass = result.ci_hi >= result.rate && result.rate <= result.analytic_bound + width;
  }

  if (exhaustive) {
    // enumerate every s in S^|y| and count accepting vectors for one
    // repetition; k independent repetitions accept with the k-th power
    const int64_t set = cfg.set_size();
    double combos = std::pow(static_cast<double>(set), static_cast<double>(ny));
    if (combos > 2e6) throw std::invalid_argument("exhaustive enumeration too large");
    const int64_t total = static_cast<int64_t>(combos);
    int64_t accept_one = 0;
    FieldTensor s({ny});
    for (int64_t idx = 0; idx < total; ++idx) {
      int64_t rem = idx;
      for (int64_t j = 0; j < ny; ++j) {
        s[j] = static_cast<double>(rem % set - cfg.rho());
        rem /= set;
      }
      if (rep_accepts(s)) ++accept_one;
    }
    int64_t acc_k = 1, tot_k = 1;
    for (int rep = 0; rep < cfg.k; ++rep) {
      acc_k *= accept_one;
      tot_k *= total;
    }
    result.exhaustive_accepts = acc_k;
    result.exhaustive_total = tot_k;
  }
  return result;
}

}  // namespace slalom
