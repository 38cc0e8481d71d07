#include "slalom/field.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <sstream>

namespace slalom {

namespace {

bool is_prime(int64_t n) {
  if (n < 2) return false;
  for (int64_t d = 2; d * d <= n; ++d) {
    if (n % d == 0) return false;
  }
  return true;
}

}  // namespace

void FieldParams::validate() const {
  if (p < 3 || p % 2 == 0 || !is_prime(p)) {
    throw std::invalid_argument("field modulus must be an odd prime, got " + std::to_string(p));
  }
  if (p >= (int64_t{1} << 24)) {
    throw std::invalid_argument("field modulus must be below 2^24 for exact float embedding");
  }
  if (check_range_bound < 1) {
    throw std::invalid_argument("check_range_bound must be >= 1");
  }
  if (reduction_window < 1) {
    throw std::invalid_argument("reduction_window must be >= 1");
  }
  // worst case: |product| <= p * rho per term, reduction_window terms between
  // reductions, everything must stay within 2^53
  __int128 worst = static_cast<__int128>(p) * check_range_bound * reduction_window;
  if (worst > static_cast<__int128>(int64_t{1} << 53)) {
    throw std::invalid_argument(
        "p * check_range_bound * reduction_window exceeds 2^53; deferred reduction would lose "
        "exactness");
  }
}

int64_t numel(std::span<const int64_t> shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw std::invalid_argument("negative dimension");
    n *= d;
  }
  return n;
}

std::string shape_str(std::span<const int64_t> shape) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ")";
  return os.str();
}

FieldTensor::FieldTensor(std::vector<int64_t> s)
    : shape(std::move(s)), data(static_cast<size_t>(numel(shape)), 0.0) {}

bool FieldTensor::same_values(const FieldTensor& other) const {
  return data == other.data;
}

FieldTensor FieldTensor::reshaped(std::vector<int64_t> s) const {
  if (numel(s) != size()) {
    throw std::invalid_argument("reshape " + shape_str(shape) + " -> " + shape_str(s) +
                                " changes element count");
  }
  FieldTensor out;
  out.shape = std::move(s);
  out.data = data;
  return out;
}

double FieldTensor::max_abs() const {
  double m = 0.0;
  for (double v : data) m = std::max(m, std::fabs(v));
  return m;
}

double mod_reduce(double v, const FieldParams& params) {
  if (!(std::fabs(v) < kExactDoubleLimit)) {
    throw std::domain_error("mod_reduce: |v| >= 2^53, integer value no longer exact");
  }
  double p = static_cast<double>(params.p);
  double r = std::fmod(v, p);  // exact, same sign as v, |r| < p
  double half = static_cast<double>(params.half());
  if (r > half) r -= p;
  if (r < -half) r += p;
  return r;
}

void mod_reduce_buffer(double* v, int64_t n, const FieldParams& params) {
  const double p = static_cast<double>(params.p);
  const double inv_p = 1.0 / p;
  const double half = static_cast<double>(params.half());
  for (int64_t i = 0; i < n; ++i) {
    double x = v[i];
    assert(std::fabs(x) <= 9007199254740992.0 - 16777216.0);  // q*p must stay exact
    double q = std::nearbyint(x * inv_p);
    double r = x - q * p;  // exact: q*p representable, Sterbenz on the subtract
    if (r > half) r -= p;
    if (r < -half) r += p;
    v[i] = r;
  }
}

void mod_reduce_tensor(FieldTensor& t, const FieldParams& params) {
  mod_reduce_buffer(t.ptr(), t.size(), params);
}

int64_t safe_window(int64_t bound_a, int64_t bound_b) {
  __int128 prod = static_cast<__int128>(bound_a) * bound_b;
  if (prod <= 0) return int64_t{1} << 40;
  // carried centered residue is below 2^24, keep that much slack under 2^53
  __int128 limit = (static_cast<__int128>(int64_t{1} << 53)) - (int64_t{1} << 24);
  int64_t w = static_cast<int64_t>(limit / prod);
  return std::max<int64_t>(w, 1);
}

double inner_product_deferred(std::span<const double> a, std::span<const double> b,
                              const FieldParams& params, SampleRange b_range) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("inner_product_deferred: length mismatch " +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  const double half = static_cast<double>(params.half());
  const double b_bound = b_range == SampleRange::check_range
                             ? static_cast<double>(params.check_range_bound)
                             : half;
  const int64_t b_bound_i =
      b_range == SampleRange::check_range ? params.check_range_bound : params.half();
  for (size_t i = 0; i < a.size(); ++i) {
    if (std::fabs(a[i]) > half) {
      throw std::invalid_argument("inner_product_deferred: a[" + std::to_string(i) +
                                  "] outside centered field range");
    }
    if (std::fabs(b[i]) > b_bound) {
      throw std::invalid_argument("inner_product_deferred: b[" + std::to_string(i) +
                                  "] outside declared range");
    }
  }

  const int64_t window = std::min(params.reduction_window, safe_window(params.half(), b_bound_i));
  double acc = 0.0;
  int64_t in_window = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    acc += a[i] * b[i];
    if (++in_window == window) {
      assert(std::fabs(acc) < kExactDoubleLimit);
      acc = mod_reduce(acc, params);
      in_window = 0;
    }
  }
  assert(std::fabs(acc) < kExactDoubleLimit);
  return mod_reduce(acc, params);
}

namespace {

FieldTensor elementwise(const FieldTensor& a, const FieldTensor& b, const FieldParams& params,
                        double sign) {
  if (a.shape != b.shape) {
    throw std::invalid_argument("elementwise field op: shape mismatch " + shape_str(a.shape) +
                                " vs " + shape_str(b.shape));
  }
  FieldTensor out(a.shape);
  const double p = static_cast<double>(params.p);
  const double half = static_cast<double>(params.half());
  for (int64_t i = 0; i < a.size(); ++i) {
    double v = a[i] + sign * b[i];
    if (v > half) v -= p;
    if (v < -half) v += p;
    out[i] = v;
  }
  return out;
}

}  // namespace

FieldTensor field_add(const FieldTensor& a, const FieldTensor& b, const FieldParams& params) {
  return elementwise(a, b, params, 1.0);
}

FieldTensor field_sub(const FieldTensor& a, const FieldTensor& b, const FieldParams& params) {
  return elementwise(a, b, params, -1.0);
}

}  // namespace slalom
