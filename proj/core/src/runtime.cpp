#include "slalom/runtime.hpp"

#include <chrono>
#include <functional>
#include <stdexcept>

#include "json.hpp"
#include "plan.hpp"
#include "slalom/prf.hpp"
#include "slalom/wire.hpp"

namespace slalom {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct AbortRun {
  int unit_index;
};

}  // namespace

// ---------------------------------------------------------------------------
// names and plumbing

std::string run_mode_name(RunMode m) {
  switch (m) {
    case RunMode::baseline: return "baseline";
    case RunMode::verify_plain: return "verify-plain";
    case RunMode::verify_batched: return "verify-batched";
    case RunMode::verify_preproc: return "verify-preproc";
    case RunMode::private_only: return "private";
    case RunMode::private_verify: return "private-verify";
  }
  return "?";
}

RunMode run_mode_from_name(const std::string& s) {
  for (RunMode m : {RunMode::baseline, RunMode::verify_plain, RunMode::verify_batched,
                    RunMode::verify_preproc, RunMode::private_only, RunMode::private_verify}) {
    if (run_mode_name(m) == s) return m;
  }
  throw std::invalid_argument("unknown mode: " + s);
}

std::string adversary_kind_name(AdversaryKind k) {
  switch (k) {
    case AdversaryKind::honest: return "honest";
    case AdversaryKind::tamper_entry: return "tamper-entry";
    case AdversaryKind::tamper_random: return "tamper-random";
    case AdversaryKind::scale_layer: return "scale-layer";
    case AdversaryKind::replace_layer: return "replace-layer";
  }
  return "?";
}

AdversaryKind adversary_kind_from_name(const std::string& s) {
  for (AdversaryKind k : {AdversaryKind::honest, AdversaryKind::tamper_entry,
                          AdversaryKind::tamper_random, AdversaryKind::scale_layer,
                          AdversaryKind::replace_layer}) {
    if (adversary_kind_name(k) == s) return k;
  }
  throw std::invalid_argument("unknown adversary: " + s);
}

int AdversarySpec::resolve_target(int n_ops) const {
  if (kind == AdversaryKind::honest || n_ops == 0) return -1;
  if (target_op >= 0) return target_op % n_ops;
  return static_cast<int>((seed * 2654435761ull + 17) % static_cast<uint64_t>(n_ops));
}

int64_t Transcript::total_bytes() const {
  int64_t n = 0;
  for (const auto& e : entries) n += e.bytes;
  return n;
}

std::string Transcript::to_jsonl() const {
  std::string out;
  for (const auto& e : entries) {
    json j;
    j["direction"] = e.direction;
    j["index"] = e.index;
    j["kind"] = e.kind;
    j["bytes"] = e.bytes;
    j["digest"] = e.digest;
    out += j.dump();
    out += "\n";
  }
  return out;
}

void RunConfig::validate() const {
  scheme.validate();
  soundness.validate();
  if (scheme.params.p != soundness.field.p) {
    throw std::invalid_argument("run config: quantization and soundness field moduli differ");
  }
  if (enforce_production_soundness && !soundness.production_strength()) {
    throw std::invalid_argument(
        "run config: soundness parameters below 40 bits per layer; tiny check ranges are "
        "restricted to the soundness experiment harness");
  }
}

std::string RunReport::to_json() const {
  json j;
  j["mode"] = run_mode_name(mode);
  j["aborted"] = aborted;
  j["n_linear"] = n_linear;
  j["soundness_bound"] = soundness_bound;
  j["unit_verdicts"] = unit_verdicts;
  j["transcript_bytes"] = transcript.total_bytes();
  j["transcript_messages"] = transcript.entries.size();
  j["counters"] = {
      {"trusted_mults", trusted_compute.multiplications},
      {"verify_mults", verification.multiplications},
      {"untrusted_mults", untrusted_compute.multiplications},
      {"preproc_mults", preprocessing.multiplications},
  };
  j["seconds"] = {
      {"trusted", trusted_seconds},
      {"untrusted", untrusted_seconds},
      {"verify", verify_seconds},
      {"preproc", preproc_seconds},
  };
  if (!aborted) {
    std::vector<std::vector<double>> outs;
    for (const auto& o : outputs) outs.push_back(o.data);
    j["outputs"] = outs;
  }
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// shared step walker (batch-first: the state is one tensor per sample)

namespace {

using Batch = std::vector<FieldTensor>;
using UnitFn = std::function<Batch(const detail::LinearUnit&, const Batch&)>;

// combined unit bias at the unit's output scale; empty tensor when the unit
// has no bias terms
FieldTensor unit_bias(const detail::LinearUnit& unit, const QuantScheme& scheme,
                      const FieldParams& params, OpCounter* counter) {
  const int s = unit.in_scale_units;
  if (!unit.fused()) {
    const LayerSpec& op = *unit.ops[0];
    if (op.qbias.size() == 0) return {};
    return lift_scale(op.qbias, (s - 1) * scheme.l, params);
  }
  const LayerSpec& dw = *unit.ops[0];
  const LayerSpec& pw = *unit.ops[1];
  FieldTensor combined;
  if (dw.qbias.size() > 0) {
    FieldTensor b1 = lift_scale(dw.qbias, (s - 1) * scheme.l, params);
    if (counter) counter->add_mults("bias_fold", pw.c_in * pw.c_out);
    combined = field_matmul(b1.reshaped({1, pw.c_in}), pw.qweight, params).reshaped({pw.c_out});
  }
  if (pw.qbias.size() > 0) {
    FieldTensor b2 = lift_scale(pw.qbias, s * scheme.l, params);
    combined = combined.size() == 0 ? b2 : field_add(combined, b2, params);
  }
  return combined;
}

struct StepWalker {
  const detail::Plan& plan;
  const QuantScheme& scheme;
  const FieldParams& params;
  OpCounter* counter = nullptr;  // bias folds
  UnitFn unit_fn;

  Batch run(const std::vector<detail::Step>& steps, Batch v) const {
    for (const auto& step : steps) {
      switch (step.kind) {
        case detail::Step::Kind::linear: {
          const auto& unit = plan.units[static_cast<size_t>(step.unit_index)];
          Batch ys = unit_fn(unit, v);
          FieldTensor bias = unit_bias(unit, scheme, params, counter);
          for (auto& y : ys) {
            y = y.reshaped(unit.out_shape);
            if (bias.size() > 0) y = add_bias(y, bias, params);
          }
          v = std::move(ys);
          break;
        }
        case detail::Step::Kind::activation:
          for (auto& t : v) t = activation_apply(t, step.act, step.shift_bits, scheme);
          break;
        case detail::Step::Kind::pool:
          for (auto& t : v) t = pool_forward(t, step.pool);
          break;
        case detail::Step::Kind::residual: {
          Batch b1 = step.branch1.empty() ? v : run(step.branch1, v);
          Batch b2 = step.branch2.empty() ? v : run(step.branch2, v);
          for (size_t i = 0; i < v.size(); ++i) {
            FieldTensor m1 = lift_scale(b1[i], step.b1_lift_bits, params);
            FieldTensor m2 = lift_scale(b2[i], step.b2_lift_bits, params);
            FieldTensor merged = field_add(m1, m2, params);
            v[i] = activation_apply(merged, step.act, step.shift_bits, scheme);
          }
          break;
        }
      }
    }
    return v;
  }
};

// ---------------------------------------------------------------------------
// the untrusted side

std::string digest_batch(const Batch& tensors) {
  std::vector<uint8_t> bytes;
  for (const auto& t : tensors) {
    auto enc = encode_elems(std::span<const double>(t.ptr(), static_cast<size_t>(t.size())));
    bytes.insert(bytes.end(), enc.begin(), enc.end());
  }
  return sha256_hex(bytes);
}

class Worker {
 public:
  Worker(const detail::Plan& plan, const AdversarySpec& adv, const QuantScheme& scheme)
      : plan_(plan), scheme_(scheme), adv_(adv), target_op_(adv.resolve_target(plan.n_linear_ops)) {}

  UntrustedStore store;

  // Fig-1-left: receives the first input, evaluates the whole chain in the
  // single-precision fast path, returns every linear op's bias-free output.
  // The adversary corrupts its chosen op inside the chain.
  std::vector<Batch> run_chain(const Batch& x1, OpCounter* counter) {
    std::vector<Batch> op_outputs(static_cast<size_t>(plan_.n_linear_ops));
    StepWalker walker{plan_, scheme_, scheme_.params, counter,
                      [&](const detail::LinearUnit& unit, const Batch& xs) {
                        Batch cur = xs;
                        int op_idx = unit.first_op_index;
                        for (const LayerSpec* op : unit.ops) {
                          for (auto& x : cur) {
                            x = untrusted_linear(*op, x.reshaped(op_input_shape(*op, x)),
                                                 UntrustedMode::unblinded_f32, scheme_.params,
                                                 counter);
                          }
                          for (auto& x : cur) x = corrupt(op_idx, std::move(x));
                          op_outputs[static_cast<size_t>(op_idx)].insert(
                              op_outputs[static_cast<size_t>(op_idx)].end(), cur.begin(), cur.end());
                          ++op_idx;
                        }
                        return cur;
                      }};
    walker.run(plan_.steps, x1);
    return op_outputs;
  }

  // Fig-1-right: one blinded unit, double precision over Z_p.
  FieldTensor blinded_unit(const detail::LinearUnit& unit, const FieldTensor& x_blinded,
                           OpCounter* counter) {
    FieldTensor cur = x_blinded.reshaped(unit.in_shape);
    int op_idx = unit.first_op_index;
    for (const LayerSpec* op : unit.ops) {
      cur = untrusted_linear(*op, cur, UntrustedMode::blinded_f64, scheme_.params, counter);
      cur = corrupt(op_idx, std::move(cur));
      ++op_idx;
    }
    return cur;
  }

 private:
  static std::vector<int64_t> op_input_shape(const LayerSpec& op, const FieldTensor& x) {
    if (op.kind == LayerKind::fc) return {op.h_in};
    return {op.h, op.w, op.c_in};
  }

  FieldTensor corrupt(int op_index, FieldTensor y) {
    if (op_index != target_op_) return y;
    const FieldParams& params = scheme_.params;
    switch (adv_.kind) {
      case AdversaryKind::honest:
        break;
      case AdversaryKind::tamper_entry: {
        int64_t idx = adv_.entry_index % y.size();
        y[idx] = mod_reduce(y[idx] + adv_.delta, params);
        break;
      }
      case AdversaryKind::tamper_random: {
        PrfKey key = key_from_seed(adv_.seed, "adversary");
        PrfStream prf(key, "tamper");
        int64_t idx = static_cast<int64_t>(prf.uniform_below(static_cast<uint64_t>(y.size())));
        double delta = 1.0 + static_cast<double>(prf.uniform_below(static_cast<uint64_t>(params.p - 1)));
        y[idx] = mod_reduce(y[idx] + delta, params);
        break;
      }
      case AdversaryKind::scale_layer: {
        for (int64_t i = 0; i < y.size(); ++i) y[i] = mod_reduce(y[i] * adv_.scale_factor, params);
        break;
      }
      case AdversaryKind::replace_layer: {
        PrfKey key = key_from_seed(adv_.seed, "adversary");
        PrfStream prf(key, "replace");
        FieldTensor fresh = prf_field_stream(prf, y.size(), SampleRange::full_field, params);
        y = fresh.reshaped(y.shape);
        break;
      }
    }
    return y;
  }

  const detail::Plan& plan_;
  const QuantScheme& scheme_;
  AdversarySpec adv_;
  int target_op_;
};

Batch flatten_each(const Batch& xs) {
  Batch out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(x.reshaped({x.size()}));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// baseline

RunReport run_baseline(const ModelGraph& model, const FieldTensor& x, const RunConfig& cfg) {
  cfg.validate();
  if (!model.quantized) throw std::invalid_argument("run_baseline: model not quantized");
  detail::Plan plan = detail::build_plan(model, cfg.fuse_separable);

  RunReport report;
  report.mode = RunMode::baseline;
  report.n_linear = plan.n_linear_ops;
  report.unit_verdicts.assign(plan.units.size(), -1);

  auto t0 = Clock::now();
  StepWalker walker{plan, cfg.scheme, cfg.scheme.params, &report.trusted_compute,
                    [&](const detail::LinearUnit& unit, const Batch& xs) {
                      Batch out;
                      for (const auto& xin : xs) {
                        FieldTensor cur = xin.reshaped(unit.in_shape);
                        for (const LayerSpec* op : unit.ops) {
                          cur = linear_forward(*op, cur, /*with_bias=*/false, cfg.scheme.params,
                                               &report.trusted_compute);
                        }
                        out.push_back(std::move(cur));
                      }
                      return out;
                    }};
  Batch out = walker.run(plan.steps, {x});
  report.trusted_seconds = seconds_since(t0);
  report.outputs = std::move(out);
  return report;
}

// ---------------------------------------------------------------------------
// verified outsourcing (Fig-1-left)

RunReport run_verified(const ModelGraph& model, const std::vector<FieldTensor>& batch,
                       RunMode scheme, const RunConfig& cfg, const AdversarySpec& adv) {
  cfg.validate();
  if (!model.quantized) throw std::invalid_argument("run_verified: model not quantized");
  if (batch.empty()) throw std::invalid_argument("run_verified: empty batch");
  if (scheme != RunMode::verify_plain && scheme != RunMode::verify_batched &&
      scheme != RunMode::verify_preproc) {
    throw std::invalid_argument("run_verified: scheme must be a verify mode");
  }
  // per-op checks need the unfused per-layer structure; the preprocessed
  // scheme treats a fused separable pair as one checkable unit
  const bool fuse = scheme == RunMode::verify_preproc && cfg.fuse_separable;
  detail::Plan plan = detail::build_plan(model, fuse);

  RunReport report;
  report.mode = scheme;
  report.n_linear = plan.n_linear_ops;
  report.unit_verdicts.assign(plan.units.size(), -1);
  report.soundness_bound = cfg.soundness.run_bound(plan.n_linear_ops);

  const int64_t B = static_cast<int64_t>(batch.size());

  // preprocessing: per-run secrets
  FreivaldsSecret secret;
  if (scheme == RunMode::verify_preproc) {
    auto t0 = Clock::now();
    PrfStream master(key_from_seed(cfg.seed, "freivalds-master"), "master");
    secret = precompute_secrets(model, cfg.soundness, master, fuse, &report.preprocessing);
    report.preproc_seconds = seconds_since(t0);
  }
  PrfStream online_checks(key_from_seed(cfg.seed, "freivalds-online"), "online");

  // the worker computes the full chain from x1 and returns all linear outputs
  Worker worker(plan, adv, cfg.scheme);
  auto tu = Clock::now();
  std::vector<Batch> op_outputs = worker.run_chain(batch, &report.untrusted_compute);
  report.untrusted_seconds = seconds_since(tu);

  report.transcript.entries.push_back({"tee->worker", -1, "input",
                                       B * batch[0].size() * kWireElemBytes,
                                       digest_batch(batch)});
  for (int op = 0; op < plan.n_linear_ops; ++op) {
    const Batch& ys = op_outputs[static_cast<size_t>(op)];
    report.transcript.entries.push_back({"worker->tee", op, "linear_output",
                                         B * ys[0].size() * kWireElemBytes, digest_batch(ys)});
  }

  auto t0 = Clock::now();
  double verify_total = 0;

  auto check_unit = [&](const detail::LinearUnit& unit, const Batch& xs) -> Batch {
    // y of the unit's last op, per sample
    Batch ys = op_outputs[static_cast<size_t>(unit.first_op_index +
                                              static_cast<int>(unit.ops.size()) - 1)];
    auto tv = Clock::now();
    Verdict verdict = Verdict::accept;

    if (scheme == RunMode::verify_preproc) {
      for (int64_t s = 0; s < B && verdict == Verdict::accept; ++s) {
        verdict = check_preprocessed(xs[static_cast<size_t>(s)].reshaped({unit.x_size}),
                                     ys[static_cast<size_t>(s)].reshaped({unit.y_size}), secret,
                                     unit.unit_index, cfg.soundness, &report.verification);
      }
    } else {
      // per-op checks; inside a fused unit the claimed intermediate output is
      // the next op's input (no requantization happens in between)
      Batch cur = xs;
      int op_idx = unit.first_op_index;
      for (size_t oi = 0; oi < unit.ops.size() && verdict == Verdict::accept; ++oi) {
        const LayerSpec& op = *unit.ops[oi];
        const Batch& op_y = op_outputs[static_cast<size_t>(op_idx + static_cast<int>(oi))];
        const bool batch_check = scheme == RunMode::verify_batched && B > 1;
        switch (op.kind) {
          case LayerKind::fc: {
            if (batch_check) {
              FieldTensor X({B, op.h_in}), Y({B, op.h_out});
              for (int64_t s = 0; s < B; ++s) {
                std::copy(cur[static_cast<size_t>(s)].ptr(),
                          cur[static_cast<size_t>(s)].ptr() + op.h_in, X.ptr() + s * op.h_in);
                std::copy(op_y[static_cast<size_t>(s)].ptr(),
                          op_y[static_cast<size_t>(s)].ptr() + op.h_out, Y.ptr() + s * op.h_out);
              }
              verdict = check_plain_matmul(X, op.qweight, Y, cfg.soundness, online_checks,
                                           &report.verification);
            } else {
              for (int64_t s = 0; s < B && verdict == Verdict::accept; ++s) {
                verdict = check_plain_matmul(cur[static_cast<size_t>(s)].reshaped({1, op.h_in}),
                                             op.qweight,
                                             op_y[static_cast<size_t>(s)].reshaped({1, op.h_out}),
                                             cfg.soundness, online_checks, &report.verification);
              }
            }
            break;
          }
          case LayerKind::pointwise_conv2d: {
            const int64_t rows = op.h * op.w;
            if (batch_check) {
              FieldTensor X({B * rows, op.c_in}), Y({B * rows, op.c_out});
              for (int64_t s = 0; s < B; ++s) {
                std::copy(cur[static_cast<size_t>(s)].ptr(),
                          cur[static_cast<size_t>(s)].ptr() + rows * op.c_in,
                          X.ptr() + s * rows * op.c_in);
                std::copy(op_y[static_cast<size_t>(s)].ptr(),
                          op_y[static_cast<size_t>(s)].ptr() + rows * op.c_out,
                          Y.ptr() + s * rows * op.c_out);
              }
              verdict = check_plain_matmul(X, op.qweight, Y, cfg.soundness, online_checks,
                                           &report.verification);
            } else {
              for (int64_t s = 0; s < B && verdict == Verdict::accept; ++s) {
                verdict = check_conv_folded(
                    cur[static_cast<size_t>(s)].reshaped({op.h, op.w, op.c_in}), op.qweight,
                    op_y[static_cast<size_t>(s)].reshaped({op.h, op.w, op.c_out}), 1,
                    cfg.soundness, online_checks, &report.verification);
              }
            }
            break;
          }
          case LayerKind::conv2d: {
            const std::vector<int64_t> in_shape{op.h, op.w, op.c_in};
            for (int64_t s = 0; s < B && verdict == Verdict::accept; ++s) {
              verdict = check_conv_folded(
                  cur[static_cast<size_t>(s)].reshaped(in_shape), op.qweight,
                  op_y[static_cast<size_t>(s)].reshaped(op.output_shape(in_shape)),
                  op.stride, cfg.soundness, online_checks, &report.verification);
            }
            break;
          }
          case LayerKind::depthwise_conv2d: {
            const std::vector<int64_t> in_shape{op.h, op.w, op.c_in};
            std::vector<const FieldTensor*> X, Y;
            std::vector<FieldTensor> xs_shaped, ys_shaped;
            for (int64_t s = 0; s < B; ++s) {
              xs_shaped.push_back(cur[static_cast<size_t>(s)].reshaped(in_shape));
              ys_shaped.push_back(
                  op_y[static_cast<size_t>(s)].reshaped(op.output_shape(in_shape)));
            }
            for (int64_t s = 0; s < B; ++s) {
              X.push_back(&xs_shaped[static_cast<size_t>(s)]);
              Y.push_back(&ys_shaped[static_cast<size_t>(s)]);
            }
            verdict = check_depthwise_folded(X, op.qweight, Y, op.stride, cfg.soundness,
                                             online_checks, &report.verification);
            break;
          }
          default:
            throw std::logic_error("unexpected op kind in linear unit");
        }
        cur = op_y;
      }
    }
    verify_total += seconds_since(tv);

    if (verdict == Verdict::reject) {
      report.unit_verdicts[static_cast<size_t>(unit.unit_index)] = 0;
      throw AbortRun{unit.unit_index};
    }
    report.unit_verdicts[static_cast<size_t>(unit.unit_index)] = 1;
    return ys;
  };

  StepWalker walker{plan, cfg.scheme, cfg.scheme.params, &report.trusted_compute, check_unit};
  try {
    Batch out = walker.run(plan.steps, batch);
    report.outputs = std::move(out);
  } catch (const AbortRun&) {
    report.aborted = true;
    report.outputs.clear();
  }
  report.verify_seconds = verify_total;
  report.trusted_seconds = seconds_since(t0) - verify_total;
  return report;
}

// ---------------------------------------------------------------------------
// private outsourcing (Fig-1-right)

RunReport run_private(const ModelGraph& model, const FieldTensor& x, const RunConfig& cfg,
                      const AdversarySpec& adv, bool verify) {
  cfg.validate();
  if (!model.quantized) throw std::invalid_argument("run_private: model not quantized");
  detail::Plan plan = detail::build_plan(model, cfg.fuse_separable);

  RunReport report;
  report.mode = verify ? RunMode::private_verify : RunMode::private_only;
  report.n_linear = plan.n_linear_ops;
  report.unit_verdicts.assign(plan.units.size(), -1);
  report.soundness_bound = verify ? cfg.soundness.run_bound(plan.n_linear_ops) : 1.0;

  const PrfKey blind_key = key_from_seed(cfg.seed, "blinding");
  const uint64_t run_id = cfg.seed;

  Worker worker(plan, adv, cfg.scheme);

  // offline phase
  auto tp = Clock::now();
  BlindingTape tape =
      precompute_tape(model, blind_key, run_id, worker.store, cfg.scheme.params,
                      cfg.fuse_separable);
  FreivaldsSecret secret;
  if (verify) {
    PrfStream master(key_from_seed(cfg.seed, "freivalds-master"), "master");
    secret = precompute_secrets(model, cfg.soundness, master, cfg.fuse_separable,
                                &report.preprocessing);
  }
  report.preproc_seconds = seconds_since(tp);

  double untrusted_total = 0, verify_total = 0;

  auto private_unit = [&](const detail::LinearUnit& unit, const Batch& xs) -> Batch {
    if (xs.size() != 1) throw std::invalid_argument("private mode runs one sample per tape");
    const FieldTensor x_flat = xs[0].reshaped({unit.x_size});

    TapeRecord& rec = tape.claim(unit.unit_index);
    FieldTensor r = regen_blinding(blind_key, run_id, rec, cfg.scheme.params);
    FieldTensor x_blinded = blind(x_flat, r, cfg.scheme.params);

    report.transcript.entries.push_back({"tee->worker", unit.unit_index, "blinded_input",
                                         unit.x_size * kWireElemBytes,
                                         digest_batch({x_blinded})});
    auto tu = Clock::now();
    FieldTensor y_blinded = worker.blinded_unit(unit, x_blinded, &report.untrusted_compute);
    untrusted_total += seconds_since(tu);
    report.transcript.entries.push_back({"worker->tee", unit.unit_index, "blinded_output",
                                         unit.y_size * kWireElemBytes,
                                         digest_batch({y_blinded})});

    std::vector<double> u_vals = open_sealed(worker.store.fetch(run_id, unit.unit_index),
                                             blind_key, run_id,
                                             static_cast<uint32_t>(unit.unit_index));
    FieldTensor u({static_cast<int64_t>(u_vals.size())});
    u.data = std::move(u_vals);
    FieldTensor y = unblind(y_blinded.reshaped({unit.y_size}), u, cfg.scheme.params);

    if (verify) {
      auto tv = Clock::now();
      Verdict verdict = check_preprocessed(x_flat, y, secret, unit.unit_index, cfg.soundness,
                                           &report.verification);
      verify_total += seconds_since(tv);
      if (verdict == Verdict::reject) {
        report.unit_verdicts[static_cast<size_t>(unit.unit_index)] = 0;
        throw AbortRun{unit.unit_index};
      }
      report.unit_verdicts[static_cast<size_t>(unit.unit_index)] = 1;
    }
    return {y};
  };

  auto t0 = Clock::now();
  StepWalker walker{plan, cfg.scheme, cfg.scheme.params, &report.trusted_compute, private_unit};
  try {
    Batch out = walker.run(plan.steps, {x});
    report.outputs = std::move(out);
  } catch (const AbortRun&) {
    report.aborted = true;
    report.outputs.clear();
  }
  report.untrusted_seconds = untrusted_total;
  report.verify_seconds = verify_total;
  report.trusted_seconds = seconds_since(t0) - untrusted_total - verify_total;
  return report;
}

RunReport run_mode(const ModelGraph& model, const std::vector<FieldTensor>& batch, RunMode mode,
                   const RunConfig& cfg, const AdversarySpec& adv) {
  switch (mode) {
    case RunMode::baseline: {
      if (batch.size() != 1) {
        RunReport merged;
        for (const auto& x : batch) {
          RunReport r = run_baseline(model, x, cfg);
          if (merged.outputs.empty()) {
            merged = std::move(r);
          } else {
            merged.outputs.push_back(r.outputs[0]);
            merged.trusted_compute.merge(r.trusted_compute);
          }
        }
        return merged;
      }
      return run_baseline(model, batch[0], cfg);
    }
    case RunMode::verify_plain:
    case RunMode::verify_batched:
    case RunMode::verify_preproc:
      return run_verified(model, batch, mode, cfg, adv);
    case RunMode::private_only:
    case RunMode::private_verify: {
      if (batch.size() != 1) throw std::invalid_argument("private modes take one input per run");
      return run_private(model, batch[0], cfg, adv, mode == RunMode::private_verify);
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace slalom
