#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "oracles.hpp"
#include "slalom/quantize.hpp"
#include "slalom/verify.hpp"

using namespace slalom;

namespace {

SoundnessConfig tiny_s(int k) {
  SoundnessConfig cfg;
  cfg.k = k;
  cfg.field.check_range_bound = 1;  // S = {-1, 0, 1}
  return cfg;
}

SoundnessConfig production() { return SoundnessConfig{}; }

PrfStream fresh_prf(uint64_t seed) {
  return PrfStream(key_from_seed(seed, "verify-test"), "s");
}

FieldTensor tensor2x2(std::initializer_list<double> vals) {
  FieldTensor t({2, 2});
  std::copy(vals.begin(), vals.end(), t.ptr());
  return t;
}

}  // namespace

TEST_CASE("soundness config bookkeeping") {
  SoundnessConfig cfg = production();
  CHECK(cfg.k == 2);
  CHECK(cfg.rho() == (int64_t{1} << 19));
  CHECK(cfg.set_size() == (int64_t{1} << 20) + 1);
  CHECK(cfg.soundness_bits() >= 40.0);
  CHECK(cfg.production_strength());
  CHECK(cfg.per_layer_bound() == doctest::Approx(std::pow(2.0, -40.0)).epsilon(1e-6));
  CHECK(cfg.run_bound(50) == doctest::Approx(50 * cfg.per_layer_bound()));

  SoundnessConfig tiny = tiny_s(2);
  CHECK_FALSE(tiny.production_strength());
  CHECK(tiny.per_layer_bound() == doctest::Approx(1.0 / 9.0));

  SoundnessConfig bad = production();
  bad.k = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("plain matmul check accepts the textbook product") {
  // A*B with A=[[1,2],[3,4]], B=[[5,6],[7,8]] gives [[19,22],[43,50]]
  FieldTensor A = tensor2x2({1, 2, 3, 4});
  FieldTensor B = tensor2x2({5, 6, 7, 8});
  FieldTensor Y = tensor2x2({19, 22, 43, 50});
  SoundnessConfig cfg = production();
  PrfStream prf = fresh_prf(1);
  OpCounter c;
  CHECK(check_plain_matmul(A, B, Y, cfg, prf, &c) == Verdict::accept);
  // B*(m+n) + m*n per repetition
  CHECK(c.multiplications == cfg.k * (2 * (2 + 2) + 2 * 2));

  FieldTensor bad_shape({2, 3});
  CHECK_THROWS_AS(check_plain_matmul(A, B, bad_shape, cfg, prf, nullptr), std::invalid_argument);

  SoundnessConfig zero_k = cfg;
  zero_k.k = 0;
  CHECK_THROWS_AS(check_plain_matmul(A, B, Y, zero_k, prf, nullptr), std::invalid_argument);
}

TEST_CASE("plain matmul check rejects a tampered product at the expected rate") {
  FieldTensor A = tensor2x2({1, 2, 3, 4});
  FieldTensor B = tensor2x2({5, 6, 7, 8});
  FieldTensor Y = tensor2x2({19, 22, 43, 51});  // bottom-right off by one

  SoundnessConfig cfg = tiny_s(1);
  // exhaustive over s in S^2: accepted iff s (Y - AB) == 0, here iff s_1 == 0,
  // a third of the 9 combinations
  int accepts = 0;
  for (int s0 = -1; s0 <= 1; ++s0) {
    for (int s1 = -1; s1 <= 1; ++s1) {
      // s^T Y == (s^T A) B  over the integers here (no wrap at these sizes)
      int64_t sy0 = s0 * 19 + s1 * 43, sy1 = s0 * 22 + s1 * 51;
      int64_t sa0 = s0 * 1 + s1 * 3, sa1 = s0 * 2 + s1 * 4;
      int64_t lhs0 = sa0 * 5 + sa1 * 7, lhs1 = sa0 * 6 + sa1 * 8;
      if (lhs0 == sy0 && lhs1 == sy1) ++accepts;
    }
  }
  CHECK(accepts == 3);

  // Monte-Carlo through the real check
  PrfStream prf = fresh_prf(2);
  int mc_accepts = 0;
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    if (check_plain_matmul(A, B, Y, cfg, prf, nullptr) == Verdict::accept) ++mc_accepts;
  }
  double lo, hi;
  clopper_pearson_99(mc_accepts, trials, &lo, &hi);
  CHECK(lo <= 1.0 / 3.0);
  CHECK(hi >= 1.0 / 3.0);

  // honest product is never rejected
  FieldTensor good = tensor2x2({19, 22, 43, 50});
  for (int t = 0; t < 1000; ++t) {
    CHECK(check_plain_matmul(A, B, good, cfg, prf, nullptr) == Verdict::accept);
  }
}

TEST_CASE("conv folded check: honest accept, tampered reject, degenerate c_out") {
  FieldParams fp;
  std::mt19937_64 eng(3);
  SoundnessConfig cfg = production();
  PrfStream prf = fresh_prf(3);

  for (int rep = 0; rep < 50; ++rep) {
    FieldTensor x = oracle::rand_field_tensor(eng, {5, 5, 3}, fp.half());
    FieldTensor w = oracle::rand_field_tensor(eng, {3, 3, 3, 4}, fp.half());
    FieldTensor y = conv2d_forward(x, w, nullptr, 1, fp);
    CHECK(check_conv_folded(x, w, y, 1, cfg, prf, nullptr) == Verdict::accept);
  }

  // counter: |y| + k^2*c_in*c_out + |x|*k^2 per repetition
  {
    OpCounter c;
    FieldTensor x = oracle::rand_field_tensor(eng, {5, 5, 3}, fp.half());
    FieldTensor w = oracle::rand_field_tensor(eng, {3, 3, 3, 4}, fp.half());
    FieldTensor y = conv2d_forward(x, w, nullptr, 1, fp);
    CHECK(check_conv_folded(x, w, y, 1, cfg, prf, &c) == Verdict::accept);
    const int64_t xs = 5 * 5 * 3, ys = 5 * 5 * 4;
    CHECK(c.multiplications == cfg.k * (ys + 9 * 3 * 4 + xs * 9));
  }

  // tampering one output entry is caught at production parameters
  {
    FieldTensor x = oracle::rand_field_tensor(eng, {4, 4, 2}, fp.half());
    FieldTensor w = oracle::rand_field_tensor(eng, {3, 3, 2, 3}, fp.half());
    FieldTensor y = conv2d_forward(x, w, nullptr, 1, fp);
    y[7] = mod_reduce(y[7] + 5.0, fp);
    CHECK(check_conv_folded(x, w, y, 1, cfg, prf, nullptr) == Verdict::reject);
  }

  // c_out = 1: the fold is a scalar weighting, acceptance iff exact equality
  // whenever the drawn scalar is nonzero
  {
    SoundnessConfig prod = production();
    FieldTensor x = oracle::rand_field_tensor(eng, {4, 4, 2}, fp.half());
    FieldTensor w = oracle::rand_field_tensor(eng, {3, 3, 2, 1}, fp.half());
    FieldTensor y = conv2d_forward(x, w, nullptr, 1, fp);
    CHECK(check_conv_folded(x, w, y, 1, prod, prf, nullptr) == Verdict::accept);
    FieldTensor bad = y;
    bad[3] = mod_reduce(bad[3] + 1.0, fp);
    CHECK(check_conv_folded(x, w, bad, 1, prod, prf, nullptr) == Verdict::reject);
  }
}

TEST_CASE("conv folded check: tiny-S tampered acceptance is near (1/|S|)^k") {
  FieldParams fp;
  std::mt19937_64 eng(4);
  SoundnessConfig cfg = tiny_s(1);

  FieldTensor x = oracle::rand_field_tensor(eng, {3, 3, 2}, fp.half());
  FieldTensor w = oracle::rand_field_tensor(eng, {3, 3, 2, 2}, fp.half());
  FieldTensor y = conv2d_forward(x, w, nullptr, 1, fp);
  y[5] = mod_reduce(y[5] + 3.0, fp);

  PrfStream prf = fresh_prf(4);
  int accepts = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    if (check_conv_folded(x, w, y, 1, cfg, prf, nullptr) == Verdict::accept) ++accepts;
  }
  double lo, hi;
  clopper_pearson_99(accepts, trials, &lo, &hi);
  CHECK(lo <= 1.0 / 3.0);  // the interval cannot exclude the analytic bound
  CHECK(static_cast<double>(accepts) / trials <= 1.0 / 3.0 + (hi - lo));
}

TEST_CASE("depthwise folded check") {
  FieldParams fp;
  std::mt19937_64 eng(5);
  SoundnessConfig cfg = production();
  PrfStream prf = fresh_prf(5);

  FieldTensor x = oracle::rand_field_tensor(eng, {4, 4, 3}, fp.half());
  FieldTensor w = oracle::rand_field_tensor(eng, {3, 3, 3}, fp.half());
  FieldTensor y = depthwise_forward(x, w, nullptr, 1, fp);

  std::vector<const FieldTensor*> X{&x}, Y{&y};
  OpCounter c;
  CHECK(check_depthwise_folded(X, w, Y, 1, cfg, prf, &c) == Verdict::accept);
  // B*(|x|+|y|) + |x|*k^2 per repetition
  CHECK(c.multiplications == cfg.k * (1 * (48 + 48) + 48 * 9));

  FieldTensor bad = y;
  bad[11] = mod_reduce(bad[11] + 2.0, fp);
  std::vector<const FieldTensor*> Yb{&bad};
  CHECK(check_depthwise_folded(X, w, Yb, 1, cfg, prf, nullptr) == Verdict::reject);
}

TEST_CASE("precompute_secrets: transposed operators match the explicit matrix") {
  FieldParams fp;
  std::mt19937_64 eng(6);

  SUBCASE("fc identity gives s~ == s") {
    LayerSpec fc;
    fc.kind = LayerKind::fc;
    fc.h_in = 4; fc.h_out = 4;
    fc.qweight = FieldTensor({4, 4});
    for (int i = 0; i < 4; ++i) fc.qweight[i * 4 + i] = 1.0;
    FieldTensor s = oracle::rand_field_tensor(eng, {4}, 1000);
    FieldTensor st = transpose_apply(fc, s, fp);
    CHECK(st.same_values(s.reshaped({4})));
  }

  SUBCASE("1x1 single-channel pointwise broadcasts the scalar weight") {
    LayerSpec pw;
    pw.kind = LayerKind::pointwise_conv2d;
    pw.h = 3; pw.w = 3; pw.c_in = 1; pw.c_out = 1; pw.k = 1;
    pw.qweight = FieldTensor({1, 1});
    pw.qweight[0] = 7.0;
    FieldTensor s = oracle::rand_field_tensor(eng, {9}, 1000);
    FieldTensor st = transpose_apply(pw, s, fp);
    for (int64_t i = 0; i < 9; ++i) CHECK(st[i] == mod_reduce(7.0 * s[i], fp));
  }

  SUBCASE("random 3x3 conv on a 4x4 input equals the explicit operator transpose") {
    LayerSpec conv;
    conv.kind = LayerKind::conv2d;
    conv.h = 4; conv.w = 4; conv.c_in = 2; conv.c_out = 3; conv.k = 3; conv.stride = 1;
    conv.qweight = oracle::rand_field_tensor(eng, {3, 3, 2, 3}, fp.half());

    const int64_t in_size = 4 * 4 * 2;
    auto apply = [&](const FieldTensor& e) {
      return oracle::to_ints(linear_forward(conv, e.reshaped({4, 4, 2}), false, fp));
    };
    auto cols = oracle::explicit_matrix(apply, in_size);  // cols[j][i] = M[i][j]

    FieldTensor s = oracle::rand_field_tensor(eng, {4 * 4 * 3}, fp.check_range_bound);
    FieldTensor st = transpose_apply(conv, s, fp);
    REQUIRE(st.size() == in_size);
    for (int64_t j = 0; j < in_size; ++j) {
      __int128 acc = 0;
      for (size_t i = 0; i < cols[static_cast<size_t>(j)].size(); ++i) {
        acc += static_cast<__int128>(cols[static_cast<size_t>(j)][i]) *
               static_cast<int64_t>(s[static_cast<int64_t>(i)]);
      }
      CHECK(st[j] == static_cast<double>(oracle::centered_mod(acc, fp.p)));
    }
  }

  SUBCASE("depthwise and strided conv transposes match the explicit matrix") {
    LayerSpec dw;
    dw.kind = LayerKind::depthwise_conv2d;
    dw.h = 4; dw.w = 4; dw.c_in = 2; dw.c_out = 2; dw.k = 3; dw.stride = 2;
    dw.qweight = oracle::rand_field_tensor(eng, {3, 3, 2}, fp.half());
    const int64_t in_size = 4 * 4 * 2;
    auto apply = [&](const FieldTensor& e) {
      return oracle::to_ints(linear_forward(dw, e.reshaped({4, 4, 2}), false, fp));
    };
    auto cols = oracle::explicit_matrix(apply, in_size);
    const int64_t out_size = 2 * 2 * 2;
    FieldTensor s = oracle::rand_field_tensor(eng, {out_size}, fp.check_range_bound);
    FieldTensor st = transpose_apply(dw, s, fp);
    for (int64_t j = 0; j < in_size; ++j) {
      __int128 acc = 0;
      for (int64_t i = 0; i < out_size; ++i) {
        acc += static_cast<__int128>(cols[static_cast<size_t>(j)][static_cast<size_t>(i)]) *
               static_cast<int64_t>(s[i]);
      }
      CHECK(st[j] == static_cast<double>(oracle::centered_mod(acc, fp.p)));
    }
  }
}

TEST_CASE("preprocessed check: costs, completeness, missing secret") {
  SoundnessConfig cfg = production();
  QuantScheme scheme;
  ModelGraph m;
  m.input_shape = {100};
  LayerSpec fc;
  fc.kind = LayerKind::fc;
  fc.h_in = 100; fc.h_out = 200;
  fc.weight = FloatTensor({100, 200});
  std::mt19937_64 eng(7);
  fc.weight.data = oracle::rand_floats(eng, 100 * 200, -0.1, 0.1);
  m.layers.push_back(fc);
  LayerSpec act;
  act.kind = LayerKind::activation;
  act.act = ActKind::none;
  m.layers.push_back(act);
  quantize_model(m, scheme);

  PrfStream prf = fresh_prf(8);
  FreivaldsSecret secret = precompute_secrets(m, cfg, prf);
  REQUIRE(secret.unit_count() == 1);
  CHECK(secret.x_sizes[0] == 100);
  CHECK(secret.y_sizes[0] == 200);
  // s~ storage equals the layer input size, per repetition
  for (int rep = 0; rep < cfg.k; ++rep) CHECK(secret.s_tilde[rep][0].size() == 100);

  FieldTensor x = oracle::rand_field_tensor(eng, {100}, 1200);
  FieldTensor y = linear_forward(m.layers[0], x, false, scheme.params);
  OpCounter c;
  CHECK(check_preprocessed(x, y, secret, 0, cfg, &c) == Verdict::accept);
  CHECK(c.multiplications == 600);  // k * (|x| + |y|) = 2 * 300

  FieldTensor bad = y;
  bad[3] = mod_reduce(bad[3] + 1.0, scheme.params);
  CHECK(check_preprocessed(x, bad, secret, 0, cfg, nullptr) == Verdict::reject);

  CHECK_THROWS_AS(check_preprocessed(x, y, secret, 1, cfg, nullptr), std::invalid_argument);
  FreivaldsSecret empty;
  CHECK_THROWS_AS(check_preprocessed(x, y, empty, 0, cfg, nullptr), std::invalid_argument);
}

TEST_CASE("soundness experiments: honest completeness and tiny-S bounds") {
  SUBCASE("honest strategy never rejects") {
    SoundnessResult r =
        soundness_experiment(LayerKind::fc, TamperKind::none, tiny_s(1), 2000, 11);
    CHECK(r.accepts == r.trials);
    CHECK(r.pass);
  }

  SUBCASE("single-entry tamper, k = 1 and k = 2, with exhaustive cross-check") {
    SoundnessResult r1 = soundness_experiment(LayerKind::fc, TamperKind::single_entry, tiny_s(1),
                                              10000, 12, /*exhaustive=*/true);
    CHECK(r1.pass);
    CHECK(r1.exhaustive_total == 9);
    CHECK(r1.exhaustive_accepts == 3);  // exactly 1/3
    CHECK(r1.ci_lo <= r1.exhaustive_rate());
    CHECK(r1.ci_hi >= r1.exhaustive_rate());

    SoundnessResult r2 = soundness_experiment(LayerKind::fc, TamperKind::single_entry, tiny_s(2),
                                              10000, 12, /*exhaustive=*/true);
    CHECK(r2.pass);
    CHECK(r2.exhaustive_total == 81);
    CHECK(r2.exhaustive_accepts == 9);  // exactly 1/9
    CHECK(r2.ci_lo <= r2.exhaustive_rate());
    CHECK(r2.ci_hi >= r2.exhaustive_rate());
    CHECK(r2.rate <= r1.rate);  // more repetitions can only help
  }

  SUBCASE("every tamper strategy stays below the bound on every layer kind") {
    for (LayerKind kind : {LayerKind::fc, LayerKind::conv2d, LayerKind::depthwise_conv2d,
                           LayerKind::pointwise_conv2d}) {
      for (TamperKind tamper : {TamperKind::single_entry, TamperKind::whole_row,
                                TamperKind::scale, TamperKind::replace}) {
        SoundnessResult r = soundness_experiment(kind, tamper, tiny_s(1), 3000, 13);
        INFO("kind ", static_cast<int>(kind), " tamper ", tamper_kind_name(tamper));
        CHECK(r.pass);
      }
    }
  }

  CHECK_THROWS_AS(soundness_experiment(LayerKind::fc, TamperKind::none, tiny_s(1), 10, 1),
                  std::invalid_argument);
}
