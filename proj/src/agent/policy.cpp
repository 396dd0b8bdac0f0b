#include "leo/agent/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "leo/lang/vocab.hpp"
#include "leo/rng.hpp"
#include "leo/util.hpp"

namespace leo::agent {

using num::Shape;
using num::Tape;
using num::Tensor;

MountedParams assemble(const AgentConfig& cfg, std::vector<Tensor> flat) {
  const std::size_t expected = 1 + 3 * cfg.n_arms() + 3 + 4;
  if (flat.size() != expected) {
    throw ContractError("assemble: expected " + std::to_string(expected) +
                        " parameter tensors, got " +
                        std::to_string(flat.size()));
  }
  MountedParams m;
  m.cfg = cfg;
  m.flat = std::move(flat);
  std::size_t i = 0;
  m.embedding = m.flat[i++];
  for (std::size_t arm = 0; arm < cfg.n_arms(); ++arm) {
    m.encoder.push_back(
        num::LstmWeights{m.flat[i], m.flat[i + 1], m.flat[i + 2]});
    i += 3;
  }
  m.decoder = num::LstmWeights{m.flat[i], m.flat[i + 1], m.flat[i + 2]};
  i += 3;
  m.w_h_attn = m.flat[i++];
  m.w_s_attn = m.flat[i++];
  m.w_z = m.flat[i++];
  m.w_u = m.flat[i++];
  return m;
}

MountedParams mount(Tape& tape, const AgentParams& params,
                    bool requires_grad) {
  std::vector<Tensor> flat;
  for (const ParamRef& ref : params.entries()) {
    flat.push_back(tape.leaf(ref.shape, *ref.data, requires_grad));
  }
  return assemble(params.cfg, std::move(flat));
}

Tensor encode_instruction(Tape& tape, const MountedParams& p,
                          std::size_t arm_index,
                          std::span<const int> tokens) {
  if (tokens.empty()) {
    throw DataError("encode_instruction: empty token sequence");
  }
  if (arm_index >= p.encoder.size()) {
    throw ArityError("encode_instruction: arm " + std::to_string(arm_index) +
                     " outside the " + std::to_string(p.encoder.size()) +
                     "-arm encoder");
  }
  const std::size_t h = p.cfg.hidden;
  num::LstmState state{tape.zeros(Shape::vec(h)), tape.zeros(Shape::vec(h))};
  std::vector<Tensor> features;
  features.reserve(tokens.size());
  for (const int tok : tokens) {
    if (tok < 0 || tok >= static_cast<int>(p.cfg.vocab_size)) {
      throw LookupError("encode_instruction: token id " +
                        std::to_string(tok) + " outside vocabulary of size " +
                        std::to_string(p.cfg.vocab_size));
    }
    const Tensor x = num::row(p.embedding, static_cast<std::size_t>(tok));
    state = num::lstm_cell(x, state, p.encoder[arm_index]);
    features.push_back(state.h);
  }
  return num::stack_rows(features);
}

VisualAttention visual_attend(const MountedParams& p, const Tensor& h_prev,
                              const Tensor& panorama) {
  // score_j = (W_h h)^T (W_s s_j) computed as ((W_h h)^T W_s) s_j
  const Tensor query = num::matvec(p.w_h_attn, h_prev);
  const Tensor projected = num::vecmat(query, p.w_s_attn);
  const Tensor scores = num::matvec(panorama, projected);
  const Tensor gamma = num::softmax(scores);
  const Tensor state = num::vecmat(gamma, panorama);
  return {state, gamma};
}

num::LstmState memory_update(const MountedParams& p, const Tensor& s_t,
                             const Tensor& a_prev_embed,
                             const num::LstmState& prev) {
  const std::vector<Tensor> parts{s_t, a_prev_embed};
  return num::lstm_cell(num::concat(parts), prev, p.decoder);
}

TextContext text_context(const Tensor& h, const Tensor& e_seq,
                         std::span<const std::uint8_t> pad_mask) {
  const Tensor scores = num::matvec(e_seq, h);
  const Tensor alpha = num::masked_softmax(scores, pad_mask);
  const Tensor context = num::vecmat(alpha, e_seq);
  return {context, alpha};
}

namespace {

// Total order on slot contexts: content hash, then lexicographic values.
// Sorting before the fold fixes the floating-point reduction order for any
// permutation of the same multiset of contexts.
std::vector<std::size_t> content_order(std::span<const Tensor> contexts) {
  std::vector<std::uint64_t> hashes(contexts.size());
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    const auto v = contexts[i].values();
    hashes[i] = fnv1a64(v.data(), v.size() * sizeof(double));
  }
  std::vector<std::size_t> order(contexts.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (hashes[a] != hashes[b]) return hashes[a] < hashes[b];
    const auto va = contexts[a].values();
    const auto vb = contexts[b].values();
    return std::lexicographical_compare(va.begin(), va.end(), vb.begin(),
                                        vb.end());
  });
  return order;
}

}  // namespace

Tensor aggregate(std::span<const Tensor> contexts, Aggregation scheme,
                 std::size_t train_arity) {
  if (contexts.empty()) {
    throw ContractError("aggregate: at least one context required");
  }
  switch (scheme) {
    case Aggregation::kMean: {
      const auto order = content_order(contexts);
      Tensor acc = contexts[order[0]];
      for (std::size_t i = 1; i < order.size(); ++i) {
        acc = num::add(acc, contexts[order[i]]);
      }
      return num::scale(acc, 1.0 / static_cast<double>(contexts.size()));
    }
    case Aggregation::kMax: {
      const auto order = content_order(contexts);
      Tensor acc = contexts[order[0]];
      for (std::size_t i = 1; i < order.size(); ++i) {
        acc = num::pair_max(acc, contexts[order[i]]);
      }
      return acc;
    }
    case Aggregation::kConcat: {
      if (contexts.size() != train_arity) {
        throw ArityError("aggregate: concat trained with arity " +
                         std::to_string(train_arity) + " but received " +
                         std::to_string(contexts.size()) + " contexts");
      }
      return num::concat(contexts);
    }
  }
  throw ContractError("aggregate: unknown scheme");
}

std::vector<double> action_embedding(std::span<const double> feature,
                                     double psi, double omega) {
  std::vector<double> out(feature.begin(), feature.end());
  out.push_back(std::sin(psi));
  out.push_back(std::cos(psi));
  out.push_back(std::sin(omega));
  out.push_back(std::cos(omega));
  return out;
}

Tensor action_distribution(const MountedParams& p, const Tensor& h,
                           const Tensor& z,
                           std::span<const Tensor> candidates) {
  if (candidates.empty()) {
    throw ContractError("action_distribution: no candidates");
  }
  const std::vector<Tensor> hz{h, z};
  const Tensor query = num::matvec(p.w_z, num::concat(hz));
  std::vector<Tensor> logits;
  logits.reserve(candidates.size());
  for (const Tensor& u : candidates) {
    logits.push_back(num::dot(query, num::matvec(p.w_u, u)));
  }
  return num::softmax(num::concat(logits));
}

namespace {

// Shared per-episode forward state for rollout and teacher forcing.
struct Episode {
  Tape* tape;
  const MountedParams* p;
  const lang::InstructionSet* set;
  PolicyOptions opts;
  std::vector<Tensor> encoded;  // per instruction, L x H
  num::LstmState state;
  Tensor a_prev;

  Episode(Tape& t, const MountedParams& mp, const lang::InstructionSet& s,
          const PolicyOptions& o)
      : tape(&t), p(&mp), set(&s), opts(o) {
    if (s.instructions.empty()) {
      throw DataError("episode " + s.path_id + " has no instructions");
    }
    if (opts.single_instruction_path && s.instructions.size() != 1) {
      throw ContractError(
          "single-instruction path requires exactly one instruction");
    }
    const std::size_t m = s.instructions.size();
    if (mp.cfg.encoder_mode == EncoderMode::kMultiArm &&
        m > mp.encoder.size()) {
      throw ArityError("multi-arm encoder has " +
                       std::to_string(mp.encoder.size()) + " arms but " +
                       std::to_string(m) + " instructions were provided");
    }
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t arm =
          mp.cfg.encoder_mode == EncoderMode::kMultiArm ? i : 0;
      encoded.push_back(
          encode_instruction(t, mp, arm, s.instructions[i]));
    }
    const std::size_t h = mp.cfg.hidden;
    state = {t.zeros(Shape::vec(h)), t.zeros(Shape::vec(h))};
    a_prev = t.zeros(Shape::vec(mp.cfg.action_dim()));
  }

  Tensor panorama_of(int node) const {
    const auto& slots = set->graph->views[node];
    const std::size_t f = p->cfg.feat_dim;
    std::vector<double> flat;
    flat.reserve(slots.size() * f);
    for (const sim::View& v : slots) {
      flat.insert(flat.end(), v.feature.begin(), v.feature.end());
    }
    return tape->leaf(Shape::mat(slots.size(), f), flat, false);
  }

  // Runs one policy step from `env`: returns the probability tensor over
  // candidates and fills the trace record.
  Tensor step_distribution(const sim::EnvState& env,
                           const std::vector<sim::Candidate>& candidates,
                           StepRecord& rec) {
    const VisualAttention va =
        visual_attend(*p, state.h, panorama_of(env.node));
    state = memory_update(*p, va.state, a_prev, state);

    std::vector<Tensor> contexts;
    contexts.reserve(encoded.size());
    rec.alpha.clear();
    for (const Tensor& e_seq : encoded) {
      const TextContext tc = text_context(state.h, e_seq);
      contexts.push_back(tc.context);
      rec.alpha.emplace_back(tc.alpha.values().begin(),
                             tc.alpha.values().end());
    }
    const Tensor z =
        opts.single_instruction_path
            ? contexts[0]
            : aggregate(contexts, opts.scheme, p->cfg.train_arity);

    std::vector<Tensor> embeds;
    embeds.reserve(candidates.size());
    for (const sim::Candidate& c : candidates) {
      if (c.is_stop()) {
        embeds.push_back(tape->zeros(Shape::vec(p->cfg.action_dim())));
      } else {
        embeds.push_back(tape->leaf(
            Shape::vec(p->cfg.action_dim()),
            action_embedding(c.view->feature, c.heading, c.elevation),
            false));
      }
    }
    const Tensor probs = action_distribution(*p, state.h, z, embeds);

    rec.gamma.assign(va.gamma.values().begin(), va.gamma.values().end());
    rec.contexts.clear();
    for (const Tensor& c : contexts) {
      rec.contexts.emplace_back(c.values().begin(), c.values().end());
    }
    rec.z.assign(z.values().begin(), z.values().end());
    rec.probs.assign(probs.values().begin(), probs.values().end());
    rec.candidate_views.clear();
    for (const sim::Candidate& c : candidates) {
      rec.candidate_views.push_back(c.view_index);
    }
    return probs;
  }

  void advance(const sim::Candidate& chosen) {
    if (chosen.is_stop()) {
      a_prev = tape->zeros(Shape::vec(p->cfg.action_dim()));
    } else {
      a_prev = tape->leaf(
          Shape::vec(p->cfg.action_dim()),
          action_embedding(chosen.view->feature, chosen.heading,
                           chosen.elevation),
          false);
    }
  }
};

}  // namespace

RolloutResult rollout(const AgentParams& params,
                      const lang::InstructionSet& set,
                      const PolicyOptions& opts) {
  Tape tape(/*grad_enabled=*/false);
  const MountedParams mounted = mount(tape, params, /*requires_grad=*/false);
  Episode ep(tape, mounted, set, opts);

  RolloutResult result;
  sim::EnvState env;
  env.node = set.trajectory.start();
  env.heading = set.start_heading;
  result.trajectory.nodes.push_back(env.node);

  while (!env.done &&
         env.step_count < static_cast<int>(opts.t_max)) {
    const auto candidates = sim::navigable_actions(*set.graph, env);
    StepRecord rec;
    const Tensor probs = ep.step_distribution(env, candidates, rec);

    const auto pv = probs.values();
    std::size_t best = 0;
    for (std::size_t i = 1; i < pv.size(); ++i) {
      if (pv[i] > pv[best]) best = i;  // ties keep the lowest index
    }
    rec.chosen = static_cast<int>(best);
    rec.log_prob = std::log(pv[best]);
    result.trace.push_back(std::move(rec));

    const sim::Candidate& action = candidates[best];
    ep.advance(action);
    const sim::EnvState next = sim::step(*set.graph, env, action);
    result.trajectory.actions.push_back(action.view_index);
    if (!action.is_stop()) {
      result.trajectory.length_m +=
          set.graph->edge_length(env.node, next.node);
      result.trajectory.nodes.push_back(next.node);
    }
    env = next;
  }
  return result;
}

num::Tensor teacher_forced_logprob(Tape& tape, const MountedParams& p,
                                   const lang::InstructionSet& set,
                                   const PolicyOptions& opts,
                                   std::vector<StepRecord>* trace) {
  Episode ep(tape, p, set, opts);
  const sim::Trajectory& expert = set.trajectory;

  Tensor logprob = tape.scalar(0.0);
  sim::EnvState env;
  env.node = expert.start();
  env.heading = set.start_heading;

  for (std::size_t t = 0; t < expert.actions.size(); ++t) {
    const int expert_view = expert.actions[t];
    const auto candidates = sim::navigable_actions(*set.graph, env);
    StepRecord rec;
    const Tensor probs = ep.step_distribution(env, candidates, rec);

    std::size_t chosen = candidates.size();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (candidates[i].view_index == expert_view) {
        chosen = i;
        break;
      }
    }
    if (chosen == candidates.size()) {
      throw DataError("episode " + set.path_id + " step " +
                      std::to_string(t) +
                      ": expert action (view " +
                      std::to_string(expert_view) +
                      ") is not among the candidates");
    }
    logprob = num::add(logprob, num::log(num::pick(probs, chosen)));
    rec.chosen = static_cast<int>(chosen);
    rec.log_prob = std::log(rec.probs[chosen]);
    if (trace != nullptr) trace->push_back(std::move(rec));

    const sim::Candidate& action = candidates[chosen];
    ep.advance(action);
    env = sim::step(*set.graph, env, action);
  }
  return logprob;
}

double teacher_forced_logprob_value(const AgentParams& params,
                                    const lang::InstructionSet& set,
                                    const PolicyOptions& opts,
                                    std::vector<StepRecord>* trace) {
  Tape tape(/*grad_enabled=*/false);
  const MountedParams mounted = mount(tape, params, /*requires_grad=*/false);
  return teacher_forced_logprob(tape, mounted, set, opts, trace).item();
}

void write_attention_dumps(const std::filesystem::path& dir,
                           const std::string& episode_id,
                           const lang::InstructionSet& set,
                           const std::vector<StepRecord>& trace) {
  const lang::Vocabulary& vocab = lang::Vocabulary::closed_world();
  std::filesystem::create_directories(dir);

  for (std::size_t i = 0; i < set.instructions.size(); ++i) {
    std::string csv;
    std::vector<std::string> header{"step"};
    for (const int tok : set.instructions[i]) header.push_back(vocab.token(tok));
    csv += csv_row(header);
    for (std::size_t t = 0; t < trace.size(); ++t) {
      std::vector<std::string> fields{std::to_string(t)};
      for (const double a : trace[t].alpha[i]) {
        fields.push_back(format_double(a));
      }
      csv += csv_row(fields);
    }
    write_file(dir / (episode_id + "_alpha_i" + std::to_string(i) + ".csv"),
               csv);
  }

  std::string csv;
  std::vector<std::string> header{"step"};
  if (!trace.empty()) {
    for (std::size_t j = 0; j < trace[0].gamma.size(); ++j) {
      header.push_back("view_" + std::to_string(j));
    }
  }
  csv += csv_row(header);
  for (std::size_t t = 0; t < trace.size(); ++t) {
    std::vector<std::string> fields{std::to_string(t)};
    for (const double gv : trace[t].gamma) fields.push_back(format_double(gv));
    csv += csv_row(fields);
  }
  write_file(dir / (episode_id + "_gamma.csv"), csv);
}

}  // namespace leo::agent
