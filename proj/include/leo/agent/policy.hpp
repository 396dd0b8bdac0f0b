#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "leo/agent/params.hpp"
#include "leo/lang/generator.hpp"
#include "leo/num/tensor.hpp"
#include "leo/sim/env.hpp"

namespace leo::agent {

// Parameters mounted as leaves on a tape, in AgentParams::entries() order.
// `flat` aligns index-for-index with that enumeration.
struct MountedParams {
  AgentConfig cfg;
  num::Tensor embedding;
  std::vector<num::LstmWeights> encoder;
  num::LstmWeights decoder;
  num::Tensor w_h_attn, w_s_attn, w_z, w_u;
  std::vector<num::Tensor> flat;
};

MountedParams mount(num::Tape& tape, const AgentParams& params,
                    bool requires_grad);

// Wires already-mounted leaves (in entries() order) into the named layout;
// used by gradient checking, which mounts leaves itself.
MountedParams assemble(const AgentConfig& cfg,
                       std::vector<num::Tensor> flat);

// Unrolls the encoder arm over the token sequence; returns the L x H matrix
// of word features. Token ids outside the vocabulary raise LookupError.
num::Tensor encode_instruction(num::Tape& tape, const MountedParams& p,
                               std::size_t arm_index,
                               std::span<const int> tokens);

// One-hop visual attention over the full panorama (J view features as a
// J x F matrix): weights from the bilinear form against h_prev, state
// feature as the weighted sum.
struct VisualAttention {
  num::Tensor state;  // s_t
  num::Tensor gamma;  // attention over the J views
};
VisualAttention visual_attend(const MountedParams& p,
                              const num::Tensor& h_prev,
                              const num::Tensor& panorama);

// Decoder step over [s_t, a_prev].
num::LstmState memory_update(const MountedParams& p, const num::Tensor& s_t,
                             const num::Tensor& a_prev_embed,
                             const num::LstmState& prev);

// Memory-attended textual context for one encoded instruction.
struct TextContext {
  num::Tensor context;  // c_{t,i}
  num::Tensor alpha;    // attention over tokens
};
TextContext text_context(const num::Tensor& h, const num::Tensor& e_seq,
                         std::span<const std::uint8_t> pad_mask = {});

// Parameter-free aggregation. Mean and max fold after ordering the slot
// contexts by a hash of their contents, which makes the floating-point
// result permutation-invariant bit for bit. Concat preserves slot order and
// requires exactly train_arity contexts.
num::Tensor aggregate(std::span<const num::Tensor> contexts,
                      Aggregation scheme, std::size_t train_arity);

// [feature; sin psi, cos psi, sin omega, cos omega]
std::vector<double> action_embedding(std::span<const double> feature,
                                     double psi, double omega);

// Bilinear action head over candidate embeddings; returns the probability
// vector (sums to 1, STOP included).
num::Tensor action_distribution(const MountedParams& p, const num::Tensor& h,
                                const num::Tensor& z,
                                std::span<const num::Tensor> candidates);

struct StepRecord {
  std::vector<double> gamma;                  // visual attention
  std::vector<std::vector<double>> alpha;     // per instruction
  std::vector<std::vector<double>> contexts;  // per instruction c_{t,i}
  std::vector<double> z;
  std::vector<double> probs;          // over candidates, STOP last
  std::vector<int> candidate_views;   // view indices; kStopAction for STOP
  int chosen = -1;                    // index into probs
  double log_prob = 0.0;              // log probs[chosen]
};

struct PolicyOptions {
  Aggregation scheme = Aggregation::kMean;
  std::size_t t_max = 10;
  // Baseline code path: exactly one instruction, the aggregation stage is
  // bypassed and the single context feeds the action head directly.
  bool single_instruction_path = false;
};

struct RolloutResult {
  sim::Trajectory trajectory;
  std::vector<StepRecord> trace;
};

// Greedy evaluation rollout (ties break to the lowest candidate index).
// Runs tape-free; deterministic.
RolloutResult rollout(const AgentParams& params,
                      const lang::InstructionSet& set,
                      const PolicyOptions& opts);

// Differentiable log-likelihood of the expert action sequence under
// teacher forcing. Throws DataError naming the step if an expert action is
// not among the candidates.
num::Tensor teacher_forced_logprob(num::Tape& tape, const MountedParams& p,
                                   const lang::InstructionSet& set,
                                   const PolicyOptions& opts,
                                   std::vector<StepRecord>* trace = nullptr);

// Convenience: value-only teacher-forced log-likelihood.
double teacher_forced_logprob_value(const AgentParams& params,
                                    const lang::InstructionSet& set,
                                    const PolicyOptions& opts,
                                    std::vector<StepRecord>* trace = nullptr);

// Per-episode attention dumps: one alpha CSV per instruction (columns are
// the instruction tokens) plus a gamma CSV (columns are view slots).
void write_attention_dumps(const std::filesystem::path& dir,
                           const std::string& episode_id,
                           const lang::InstructionSet& set,
                           const std::vector<StepRecord>& trace);

}  // namespace leo::agent
