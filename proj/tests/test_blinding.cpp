#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "oracles.hpp"
#include "slalom/blinding.hpp"
#include "slalom/kernels.hpp"
#include "slalom/quantize.hpp"

using namespace slalom;

namespace {

ModelGraph single_fc_model(std::mt19937_64& eng, int64_t m, int64_t n) {
  ModelGraph model;
  model.input_shape = {m};
  LayerSpec fc;
  fc.kind = LayerKind::fc;
  fc.h_in = m; fc.h_out = n;
  fc.weight = FloatTensor({m, n});
  fc.weight.data = oracle::rand_floats(eng, static_cast<size_t>(m * n), -0.2, 0.2);
  model.layers.push_back(fc);
  LayerSpec act;
  act.kind = LayerKind::activation;
  act.act = ActKind::none;
  model.layers.push_back(act);
  QuantScheme scheme;
  quantize_model(model, scheme);
  return model;
}

}  // namespace

TEST_CASE("wire encoding round trip") {
  std::vector<double> vals{0, 1, -1, 8388606, -8388606, 12345, -54321};
  auto bytes = encode_elems(vals);
  CHECK(bytes.size() == vals.size() * 4);
  auto back = decode_elems(bytes);
  CHECK(back == vals);
  CHECK_THROWS_AS(decode_elems(std::vector<uint8_t>{1, 2, 3}), std::invalid_argument);
}

TEST_CASE("blind/unblind identities") {
  FieldParams fp;
  FieldTensor x({2});
  x.data = {1, 2};
  FieldTensor r({2});
  r.data = {3, 4};

  // identity layer: u = r, so unblinding (x+r) recovers x
  FieldTensor xb = blind(x, r, fp);
  CHECK(xb.data == std::vector<double>{4, 6});
  CHECK(unblind(xb, r, fp).same_values(x));

  FieldTensor zero({2});
  CHECK(blind(x, zero, fp).same_values(x));

  // wraparound stays centered
  FieldTensor big({1}), big2({1});
  big[0] = static_cast<double>(fp.half());
  big2[0] = static_cast<double>(fp.half());
  FieldTensor wrapped = blind(big, big2, fp);
  CHECK(std::fabs(wrapped[0]) <= static_cast<double>(fp.half()));
  CHECK(unblind(wrapped, big2, fp).same_values(big));
}

TEST_CASE("seal/open: round trip, bit flips, wrong key, header mismatch") {
  PrfKey key = key_from_seed(5, "seal-test");
  std::vector<double> u{100, -200, 300, 0, 8388606};
  std::array<uint8_t, 12> nonce{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};

  auto blob = seal(u, key, 77, 3, nonce);
  CHECK(blob.size() == 24 + u.size() * 4 + 16);
  CHECK(open_sealed(blob, key, 77, 3) == u);

  // any flipped bit in the ciphertext or header fails authentication
  for (size_t pos : {size_t{0}, size_t{13}, size_t{26}, blob.size() - 1}) {
    auto tampered = blob;
    tampered[pos] ^= 0x40;
    if (pos == 0) {
      // header run_id no longer matches the request
      CHECK_THROWS(open_sealed(tampered, key, 77, 3));
    } else {
      CHECK_THROWS_WITH_AS(open_sealed(tampered, key, 77, 3),
                           doctest::Contains("authentication failed"), std::runtime_error);
    }
  }

  PrfKey wrong = key_from_seed(6, "seal-test");
  CHECK_THROWS_WITH_AS(open_sealed(blob, wrong, 77, 3),
                       doctest::Contains("authentication failed"), std::runtime_error);

  CHECK_THROWS_WITH_AS(open_sealed(blob, key, 78, 3), doctest::Contains("does not match"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(open_sealed(blob, key, 77, 4), doctest::Contains("does not match"),
                       std::runtime_error);
}

TEST_CASE("sealed blob byte layout is exactly as documented") {
  PrfKey key = key_from_seed(9, "layout");
  std::vector<double> u{-2, 7};
  std::array<uint8_t, 12> nonce{};
  for (int i = 0; i < 12; ++i) nonce[static_cast<size_t>(i)] = static_cast<uint8_t>(0xA0 + i);

  auto blob = seal(u, key, 0x1122334455667788ull, 0x0A0B0C0Du, nonce);
  REQUIRE(blob.size() == 24 + 8 + 16);
  // run id, little endian
  CHECK(blob[0] == 0x88);
  CHECK(blob[7] == 0x11);
  // unit index, little endian
  CHECK(blob[8] == 0x0D);
  CHECK(blob[11] == 0x0A);
  // nonce verbatim
  for (int i = 0; i < 12; ++i) CHECK(blob[12 + static_cast<size_t>(i)] == 0xA0 + i);
}

TEST_CASE("precompute_tape: unblinding factors match the wide-integer oracle") {
  std::mt19937_64 eng(31);
  QuantScheme scheme;
  PrfKey key = key_from_seed(11, "tape");

  SUBCASE("identity weights give u == r") {
    ModelGraph model;
    model.input_shape = {4};
    LayerSpec fc;
    fc.kind = LayerKind::fc;
    fc.h_in = 4; fc.h_out = 4;
    fc.weight = FloatTensor({4, 4});
    for (int i = 0; i < 4; ++i) fc.weight.data[static_cast<size_t>(i * 4 + i)] = 1.0f / 256.0f;
    // quantized identity: weight 1/256 at scale 2^8 gives W~ = I
    model.layers.push_back(fc);
    quantize_model(model, scheme);

    UntrustedStore store;
    BlindingTape tape = precompute_tape(model, key, 1, store, scheme.params);
    REQUIRE(tape.records.size() == 1);
    FieldTensor r = regen_blinding(key, 1, tape.records[0], scheme.params);
    auto u = open_sealed(store.fetch(1, 0), key, 1, 0);
    CHECK(u == r.data);
  }

  SUBCASE("zero weights give u == 0") {
    ModelGraph model;
    model.input_shape = {4};
    LayerSpec fc;
    fc.kind = LayerKind::fc;
    fc.h_in = 4; fc.h_out = 3;
    fc.weight = FloatTensor({4, 3});
    model.layers.push_back(fc);
    quantize_model(model, scheme);

    UntrustedStore store;
    BlindingTape tape = precompute_tape(model, key, 2, store, scheme.params);
    auto u = open_sealed(store.fetch(2, 0), key, 2, 0);
    for (double v : u) CHECK(v == 0.0);
  }

  SUBCASE("random fc layer: u == r W mod p") {
    ModelGraph model = single_fc_model(eng, 17, 9);
    UntrustedStore store;
    BlindingTape tape = precompute_tape(model, key, 3, store, scheme.params);
    FieldTensor r = regen_blinding(key, 3, tape.records[0], scheme.params);
    auto u = open_sealed(store.fetch(3, 0), key, 3, 0);
    auto want = oracle::matmul_mod(r.reshaped({1, 17}), model.layers[0].qweight, scheme.params.p);
    REQUIRE(u.size() == want.size());
    for (size_t i = 0; i < u.size(); ++i) CHECK(static_cast<int64_t>(u[i]) == want[i]);
  }
}

TEST_CASE("tape records are strictly one-time") {
  std::mt19937_64 eng(33);
  ModelGraph model = single_fc_model(eng, 8, 8);
  QuantScheme scheme;
  PrfKey key = key_from_seed(12, "tape");
  UntrustedStore store;
  BlindingTape tape = precompute_tape(model, key, 9, store, scheme.params);

  CHECK_NOTHROW(tape.claim(0));
  CHECK_THROWS_WITH_AS(tape.claim(0), doctest::Contains("already consumed"), std::runtime_error);
  CHECK_THROWS_WITH_AS(tape.claim(5), doctest::Contains("no record"), std::runtime_error);
  CHECK(tape.plaintext_elems() == 8);
}

TEST_CASE("blinded round trip equals the trusted kernel on every layer kind") {
  FieldParams fp;
  QuantScheme scheme;
  std::mt19937_64 eng(35);
  PrfKey key = key_from_seed(13, "roundtrip");

  for (int rep = 0; rep < 50; ++rep) {
    LayerSpec conv;
    conv.kind = LayerKind::conv2d;
    conv.h = 4; conv.w = 4; conv.c_in = 2; conv.c_out = 3; conv.k = 3; conv.stride = 1;
    conv.qweight = oracle::rand_field_tensor(eng, {3, 3, 2, 3}, 500);

    FieldTensor x = oracle::rand_field_tensor(eng, {4, 4, 2}, 1000);
    FieldTensor r = oracle::rand_field_tensor(eng, {4 * 4 * 2}, fp.half());
    FieldTensor u = linear_forward(conv, r.reshaped({4, 4, 2}), false, fp);

    FieldTensor xb = blind(x.reshaped({4 * 4 * 2}), r, fp);
    FieldTensor yb = untrusted_linear(conv, xb.reshaped({4, 4, 2}), UntrustedMode::blinded_f64, fp);
    FieldTensor y = unblind(yb.reshaped({u.size()}), u.reshaped({u.size()}), fp);

    FieldTensor want = linear_forward(conv, x, false, fp);
    CHECK(y.same_values(want.reshaped({u.size()})));
  }
}

TEST_CASE("blinded coordinates are uniform for two distinct inputs (tiny modulus)") {
  // one-time-pad style masking: with p = 7, the marginal law of a blinded
  // coordinate is uniform regardless of the plaintext
  FieldParams t7;
  t7.p = 7;
  t7.check_range_bound = 1;
  PrfKey key = key_from_seed(14, "otp");

  for (double plain : {2.0, -3.0}) {
    PrfStream stream(key, plain > 0 ? "x" : "xprime");
    const int64_t n = 1000000;
    FieldTensor r = prf_field_stream(stream, n, SampleRange::full_field, t7);
    std::vector<int64_t> counts(7, 0);
    FieldTensor x({n});
    for (int64_t i = 0; i < n; ++i) x[i] = plain;
    FieldTensor masked = blind(x, r, t7);
    for (int64_t i = 0; i < n; ++i) {
      ++counts[static_cast<size_t>(static_cast<int64_t>(masked[i]) + 3)];
    }
    double chi2 = 0;
    const double expct = static_cast<double>(n) / 7.0;
    for (int64_t c : counts) {
      double d = static_cast<double>(c) - expct;
      chi2 += d * d / expct;
    }
    // 0.999 quantile of chi-squared with 6 degrees of freedom
    CHECK(chi2 < 22.45774);
  }
}
