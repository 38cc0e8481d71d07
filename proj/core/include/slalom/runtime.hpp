#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slalom/blinding.hpp"
#include "slalom/field.hpp"
#include "slalom/kernels.hpp"
#include "slalom/model.hpp"
#include "slalom/quantize.hpp"
#include "slalom/verify.hpp"

namespace slalom {

enum class RunMode {
  baseline,
  verify_plain,
  verify_batched,
  verify_preproc,
  private_only,
  private_verify
};

std::string run_mode_name(RunMode m);
RunMode run_mode_from_name(const std::string& s);

enum class AdversaryKind { honest, tamper_entry, tamper_random, scale_layer, replace_layer };

std::string adversary_kind_name(AdversaryKind k);
AdversaryKind adversary_kind_from_name(const std::string& s);

// Wraps the untrusted executor's responses; never touches trusted state.
struct AdversarySpec {
  AdversaryKind kind = AdversaryKind::honest;
  int target_op = -1;      // global linear-op index; -1 picks one from the seed
  int64_t entry_index = 0; // tamper_entry
  double delta = 1.0;      // tamper_entry additive offset (nonzero mod p)
  double scale_factor = 2.0;
  uint64_t seed = 0;

  bool active() const { return kind != AdversaryKind::honest; }
  int resolve_target(int n_ops) const;
};

struct TranscriptEntry {
  std::string direction;  // "tee->worker" or "worker->tee"
  int index = 0;          // linear-op or unit index (-1 for the initial input)
  std::string kind;       // input / linear_output / blinded_input / blinded_output
  int64_t bytes = 0;
  std::string digest;     // sha256 of the payload
};

struct Transcript {
  std::vector<TranscriptEntry> entries;
  int64_t total_bytes() const;
  std::string to_jsonl() const;
};

struct RunConfig {
  QuantScheme scheme;
  SoundnessConfig soundness;
  uint64_t seed = 1;
  bool fuse_separable = true;
  // reject soundness parameters below 40 bits per layer (production gate)
  bool enforce_production_soundness = false;

  void validate() const;
};

struct RunReport {
  bool aborted = false;                // true: the run output is bottom
  std::vector<FieldTensor> outputs;    // per input sample, scale l
  std::vector<int> unit_verdicts;      // 1 accept, 0 reject, -1 unchecked
  OpCounter trusted_compute, verification, untrusted_compute, preprocessing;
  Transcript transcript;
  double soundness_bound = 1.0;        // n / |S|^k when checks run
  int64_t n_linear = 0;
  double trusted_seconds = 0, untrusted_seconds = 0, verify_seconds = 0, preproc_seconds = 0;
  RunMode mode = RunMode::baseline;

  int exit_code() const { return aborted ? 3 : 0; }
  std::string to_json() const;
};

// All-trusted reference execution with the exact field kernels.
RunReport run_baseline(const ModelGraph& model, const FieldTensor& x, const RunConfig& cfg);

// Outsourced linear layers with Freivalds verification. scheme must be one
// of verify_plain, verify_batched, verify_preproc. The batch (all samples of
// one session) is verified together under verify_batched.
RunReport run_verified(const ModelGraph& model, const std::vector<FieldTensor>& batch,
                       RunMode scheme, const RunConfig& cfg, const AdversarySpec& adv = {});

// Blinded outsourcing per Fig-1-right semantics: per-unit blind, outsource,
// unblind, optional preprocessed Freivalds check.
RunReport run_private(const ModelGraph& model, const FieldTensor& x, const RunConfig& cfg,
                      const AdversarySpec& adv = {}, bool verify = true);

// Dispatch helper for the CLI and tests.
RunReport run_mode(const ModelGraph& model, const std::vector<FieldTensor>& batch, RunMode mode,
                   const RunConfig& cfg, const AdversarySpec& adv = {});

}  // namespace slalom
