#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "slalom/kernels.hpp"
#include "slalom/model.hpp"
#include "slalom/quantize.hpp"

using namespace slalom;

TEST_CASE("fp_round fixed cases") {
  CHECK(fp_round(0.5, 8) == 128);
  CHECK(fp_round(-0.004, 8) == -1);          // round(-1.024)
  CHECK(fp_round(0.001953125, 8) == 1);      // 2^-9 scales to 0.5, ties go away from zero
  CHECK(fp_round(-0.001953125, 8) == -1);
  CHECK(fp_round(0.0, 8) == 0);
  CHECK(fp_round(1.0, 8) == 256);
  CHECK_THROWS_AS(fp_round(std::ldexp(1.0, 50), 8), std::domain_error);
}

TEST_CASE("quantize_tensor roles and range errors") {
  QuantScheme scheme;
  FloatTensor zero({4});
  FieldTensor qz = quantize_tensor(zero, TensorRole::input, scheme);
  for (int64_t i = 0; i < qz.size(); ++i) CHECK(qz[i] == 0.0);

  FloatTensor w({1});
  w.data[0] = 1.0f;
  CHECK(quantize_tensor(w, TensorRole::weight, scheme)[0] == 256.0);
  CHECK(quantize_tensor(w, TensorRole::bias, scheme)[0] == 65536.0);  // biases at scale 2l

  FloatTensor big({3});
  big.data = {0.0f, 1.0f, 40000.0f};  // 40000 * 256 > (p-1)/2
  try {
    quantize_tensor(big, TensorRole::weight, scheme);
    FAIL("expected range error");
  } catch (const std::range_error& e) {
    CHECK(std::string(e.what()).find("element 2") != std::string::npos);
  }

  FloatTensor nan({1});
  nan.data[0] = std::nanf("");
  CHECK_THROWS_AS(quantize_tensor(nan, TensorRole::input, scheme), std::invalid_argument);
}

TEST_CASE("requantize fixed cases") {
  QuantScheme scheme;
  FieldTensor y({2});
  y[0] = 65536.0;  // 1.0 at scale 2l
  y[1] = 384.0;    // 1.5 at scale l after shift
  FieldTensor out = requantize_output(y, scheme);
  CHECK(out[0] == 256.0);
  CHECK(out[1] == 2.0);  // ties away from zero

  FieldTensor neg({1});
  neg[0] = -384.0;
  CHECK(requantize_output(neg, scheme)[0] == -2.0);
}

TEST_CASE("requantized integer convolution tracks the float reference") {
  QuantScheme scheme;
  std::mt19937_64 eng(11);
  for (int rep = 0; rep < 20; ++rep) {
    FloatTensor x({5, 5, 2}), w({3, 3, 2, 3});
    x.data = oracle::rand_floats(eng, static_cast<size_t>(x.size()), -1.0, 1.0);
    w.data = oracle::rand_floats(eng, static_cast<size_t>(w.size()), -0.5, 0.5);

    FieldTensor qx = quantize_tensor(x, TensorRole::input, scheme);
    FieldTensor qw = quantize_tensor(w, TensorRole::weight, scheme);
    FieldTensor y = conv2d_forward(qx, qw, nullptr, 1, scheme.params);
    FieldTensor yl = requantize_output(y, scheme);

    // float convolution of the dequantized operands, rounded to scale l
    LayerSpec conv;
    conv.kind = LayerKind::conv2d;
    conv.h = 5; conv.w = 5; conv.c_in = 2; conv.c_out = 3; conv.k = 3; conv.stride = 1;
    conv.weight = w;
    for (auto& v : conv.weight.data) v = static_cast<float>(fp_round(v, 8)) / 256.0f;
    ModelGraph m;
    m.input_shape = {5, 5, 2};
    m.layers.push_back(conv);
    std::vector<double> xin(static_cast<size_t>(qx.size()));
    for (size_t i = 0; i < xin.size(); ++i) xin[i] = qx[static_cast<int64_t>(i)] / 256.0;
    std::vector<double> ref = oracle::FloatWalker::run(m, xin);

    for (int64_t i = 0; i < yl.size(); ++i) {
      double want = round_half_away(ref[static_cast<size_t>(i)] * 256.0);
      CHECK(std::fabs(yl[i] - want) <= 1.0);
    }
  }
}

TEST_CASE("dequantize(quantize(x)) is within half a quantum") {
  QuantScheme scheme;
  std::mt19937_64 eng(13);
  FloatTensor t({1000});
  t.data = oracle::rand_floats(eng, 1000, -8.0, 8.0);
  FieldTensor q = quantize_tensor(t, TensorRole::input, scheme);
  std::vector<double> back = dequantize(q, scheme.l);
  for (size_t i = 0; i < back.size(); ++i) {
    CHECK(std::fabs(back[i] - static_cast<double>(t.data[i])) <= std::ldexp(1.0, -(scheme.l + 1)));
  }
}

TEST_CASE("range_check: identity pointwise layer") {
  QuantScheme scheme;
  ModelGraph m;
  m.input_shape = {2, 2, 1};
  LayerSpec pw;
  pw.kind = LayerKind::pointwise_conv2d;
  pw.h = 2; pw.w = 2; pw.c_in = 1; pw.c_out = 1; pw.k = 1;
  pw.weight = FloatTensor({1, 1});
  pw.weight.data[0] = 1.0f;
  m.layers.push_back(pw);
  quantize_model(m, scheme);

  FloatTensor probe({2, 2, 1});
  probe.data = {1.0f, -1.0f, 0.25f, 0.5f};
  RangeReport report = range_check(m, {probe}, scheme);
  REQUIRE(report.layers.size() == 1);
  CHECK(report.layers[0].observed_max_abs == 65536.0);
  CHECK(report.layers[0].analytic_bound == 65536.0);
  CHECK(report.pass);
}

TEST_CASE("range_check: preset passes on random probes") {
  QuantScheme scheme;
  ModelGraph m = make_preset("vgg_like_small", 5);
  quantize_model(m, scheme);
  std::mt19937_64 eng(17);
  std::vector<FloatTensor> probes;
  for (int i = 0; i < 4; ++i) {
    FloatTensor probe({16, 16, 3});
    probe.data = oracle::rand_floats(eng, static_cast<size_t>(probe.size()), -1.0, 1.0);
    probes.push_back(std::move(probe));
  }
  RangeReport report = range_check(m, probes, scheme);
  CHECK(report.pass);
  CHECK(report.limit == scheme.params.half());
}

TEST_CASE("range_check: oversized accumulation is reported as failure") {
  QuantScheme scheme;
  ModelGraph m;
  m.input_shape = {100};
  LayerSpec fc;
  fc.kind = LayerKind::fc;
  fc.h_in = 100; fc.h_out = 1;
  fc.weight = FloatTensor({100, 1});
  for (auto& v : fc.weight.data) v = 200.0f;
  m.layers.push_back(fc);
  quantize_model(m, scheme);

  FloatTensor probe({100});
  for (auto& v : probe.data) v = 0.999f;
  RangeReport report = range_check(m, {probe}, scheme);
  REQUIRE(report.layers.size() == 1);
  CHECK_FALSE(report.pass);
  CHECK_FALSE(report.layers[0].observed_pass);
  CHECK_FALSE(report.layers[0].analytic_pass);
  CHECK(report.layers[0].analytic_bound > static_cast<double>(scheme.params.half()));

  CHECK_THROWS_AS(range_check(m, {}, scheme), std::invalid_argument);
}
