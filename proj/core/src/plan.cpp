#include "plan.hpp"

#include <stdexcept>

namespace slalom::detail {

namespace {

struct PlanBuilder {
  Plan plan;
  int quant_l = 8;
  bool fuse = true;

  // returns the step list; tracks output shape and fixed-point scale (in
  // units of l) through the walk
  std::vector<Step> build_sequence(const std::vector<LayerSpec>& seq, std::vector<int64_t> shape,
                                   int scale_units, std::vector<int64_t>* out_shape,
                                   int* out_scale) {
    std::vector<Step> steps;
    for (size_t i = 0; i < seq.size(); ++i) {
      const LayerSpec& ls = seq[i];
      if (ls.is_linear()) {
        LinearUnit unit;
        unit.unit_index = static_cast<int>(plan.units.size());
        unit.first_op_index = plan.n_linear_ops;
        unit.in_scale_units = scale_units;
        unit.in_shape = shape;
        unit.ops.push_back(&ls);
        ++plan.n_linear_ops;
        shape = ls.output_shape(shape);
        ++scale_units;
        // a depthwise+pointwise pair with no activation in between acts as
        // one linear operator
        if (fuse && ls.kind == LayerKind::depthwise_conv2d && i + 1 < seq.size() &&
            seq[i + 1].kind == LayerKind::pointwise_conv2d) {
          const LayerSpec& next = seq[i + 1];
          unit.ops.push_back(&next);
          ++plan.n_linear_ops;
          shape = next.output_shape(shape);
          ++scale_units;
          ++i;
        }
        unit.x_size = numel(unit.in_shape);
        unit.out_shape = shape;
        unit.y_size = numel(shape);
        plan.units.push_back(unit);
        Step st;
        st.kind = Step::Kind::linear;
        st.unit_index = unit.unit_index;
        steps.push_back(st);
      } else if (ls.kind == LayerKind::activation) {
        Step st;
        st.kind = Step::Kind::activation;
        st.act = ls.act;
        st.shift_bits = (scale_units - 1) * quant_l;
        scale_units = 1;
        steps.push_back(st);
        shape = ls.output_shape(shape);
      } else if (ls.kind == LayerKind::pool) {
        Step st;
        st.kind = Step::Kind::pool;
        st.pool = ls.pool;
        steps.push_back(st);
        shape = ls.output_shape(shape);
      } else {  // residual block
        Step st;
        st.kind = Step::Kind::residual;
        std::vector<int64_t> s1 = shape, s2 = shape;
        int sc1 = scale_units, sc2 = scale_units;
        st.branch1 = build_sequence(ls.branch1, shape, scale_units, &s1, &sc1);
        st.branch2 = build_sequence(ls.branch2, shape, scale_units, &s2, &sc2);
        if (s1 != s2) throw std::invalid_argument("residual branches disagree on output shape");
        int target = std::max(sc1, sc2);
        st.b1_lift_bits = (target - sc1) * quant_l;
        st.b2_lift_bits = (target - sc2) * quant_l;
        st.act = ls.merge_act;
        st.shift_bits = (target - 1) * quant_l;
        scale_units = 1;
        shape = s1;
        steps.push_back(st);
      }
    }
    *out_shape = shape;
    *out_scale = scale_units;
    return steps;
  }
};

}  // namespace

Plan build_plan(const ModelGraph& model, bool fuse_separable) {
  PlanBuilder b;
  b.quant_l = model.quant_l;
  b.fuse = fuse_separable;
  std::vector<int64_t> out_shape;
  int out_scale = 1;
  b.plan.steps = b.build_sequence(model.layers, model.input_shape, 1, &out_shape, &out_scale);
  b.plan.quant_l = model.quant_l;
  return b.plan;
}

}  // namespace slalom::detail
