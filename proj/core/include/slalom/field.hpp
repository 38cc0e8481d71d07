#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace slalom {

// Field elements are integers held exactly in doubles, stored as centered
// residues in [-(p-1)/2, (p-1)/2]. All protocol arithmetic runs over Z_p.
using FieldElem = double;

constexpr int64_t kDefaultPrime = (int64_t{1} << 24) - 3;
constexpr int64_t kDefaultCheckBound = int64_t{1} << 19;  // S = [-2^19, 2^19]
constexpr int64_t kDefaultReductionWindow = int64_t{1} << 10;
constexpr double kExactDoubleLimit = 9007199254740992.0;  // 2^53

struct FieldParams {
  int64_t p = kDefaultPrime;
  int64_t check_range_bound = kDefaultCheckBound;  // rho: checks drawn from [-rho, rho]
  int64_t reduction_window = kDefaultReductionWindow;

  int64_t half() const { return (p - 1) / 2; }
  int64_t check_set_size() const { return 2 * check_range_bound + 1; }

  // Throws std::invalid_argument if p is not an odd prime below 2^24,
  // rho < 1, or p * rho * reduction_window exceeds 2^53.
  void validate() const;
};

struct FieldTensor {
  std::vector<int64_t> shape;
  std::vector<double> data;

  FieldTensor() = default;
  explicit FieldTensor(std::vector<int64_t> s);

  int64_t size() const { return static_cast<int64_t>(data.size()); }
  double* ptr() { return data.data(); }
  const double* ptr() const { return data.data(); }
  double& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

  bool same_values(const FieldTensor& other) const;
  FieldTensor reshaped(std::vector<int64_t> s) const;
  double max_abs() const;
};

int64_t numel(std::span<const int64_t> shape);
std::string shape_str(std::span<const int64_t> shape);

// Exact reduction of a double-held integer to the centered residue class.
// Throws if |v| >= 2^53 (the integer is no longer exactly representable).
double mod_reduce(double v, const FieldParams& params);

// In-place reduction of a whole buffer. Requires |v| <= 2^52 per element so
// the multiply-by-inverse fast path stays exact.
void mod_reduce_buffer(double* v, int64_t n, const FieldParams& params);
void mod_reduce_tensor(FieldTensor& t, const FieldParams& params);

// Largest number of products of magnitude <= bound_a * bound_b that can be
// accumulated before the running sum risks leaving the exact-double range.
int64_t safe_window(int64_t bound_a, int64_t bound_b);

enum class SampleRange { full_field, check_range };

// Exact Z_p inner product with deferred reduction: partial sums are reduced
// at most every reduction_window terms. b_range declares the magnitude bound
// on b (check vectors live in S, everything else in centered Z_p); the
// effective window is clamped so no partial sum can exceed 2^53.
double inner_product_deferred(std::span<const double> a, std::span<const double> b,
                              const FieldParams& params,
                              SampleRange b_range = SampleRange::check_range);

// Elementwise a + b and a - b over Z_p.
FieldTensor field_add(const FieldTensor& a, const FieldTensor& b, const FieldParams& params);
FieldTensor field_sub(const FieldTensor& a, const FieldTensor& b, const FieldParams& params);

}  // namespace slalom
