#pragma once

#include <vector>

#include "slalom/model.hpp"

namespace slalom::detail {

// A checkable unit: one linear layer, or a depthwise+pointwise pair with no
// activation in between, which the protocol treats as a single linear
// operator for verification and blinding.
struct LinearUnit {
  std::vector<const LayerSpec*> ops;
  int unit_index = 0;
  int first_op_index = 0;  // global linear-op index of ops[0]
  int in_scale_units = 1;  // fixed-point scale of the unit input, in units of l
  std::vector<int64_t> in_shape, out_shape;
  int64_t x_size = 0, y_size = 0;
  bool fused() const { return ops.size() == 2; }
};

struct Step {
  enum class Kind { linear, activation, pool, residual };
  Kind kind{};
  int unit_index = -1;           // linear
  ActKind act = ActKind::none;   // activation step / residual merge
  int shift_bits = 0;            // requantize shift for activation / merge
  PoolKind pool = PoolKind::max;
  std::vector<Step> branch1, branch2;  // residual
  int b1_lift_bits = 0, b2_lift_bits = 0;
};

struct Plan {
  std::vector<Step> steps;
  std::vector<LinearUnit> units;
  int n_linear_ops = 0;
  int quant_l = 8;

  int64_t sum_unit_io() const {
    int64_t s = 0;
    for (const auto& u : units) s += u.x_size + u.y_size;
    return s;
  }
};

Plan build_plan(const ModelGraph& model, bool fuse_separable);

}  // namespace slalom::detail
