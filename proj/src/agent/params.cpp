#include "leo/agent/params.hpp"

#include <cmath>

#include "leo/rng.hpp"

namespace leo::agent {

Aggregation parse_aggregation(const std::string& s) {
  if (s == "mean") return Aggregation::kMean;
  if (s == "max") return Aggregation::kMax;
  if (s == "concat") return Aggregation::kConcat;
  throw ConfigError("unknown aggregation scheme '" + s +
                    "' (expected mean|max|concat)");
}

EncoderMode parse_encoder_mode(const std::string& s) {
  if (s == "shared") return EncoderMode::kShared;
  if (s == "multi_arm") return EncoderMode::kMultiArm;
  throw ConfigError("unknown encoder mode '" + s +
                    "' (expected shared|multi_arm)");
}

std::string to_string(Aggregation a) {
  switch (a) {
    case Aggregation::kMean: return "mean";
    case Aggregation::kMax: return "max";
    case Aggregation::kConcat: return "concat";
  }
  return "?";
}

std::string to_string(EncoderMode m) {
  return m == EncoderMode::kShared ? "shared" : "multi_arm";
}

namespace {

MatrixParam make_matrix(std::size_t rows, std::size_t cols) {
  return {rows, cols, std::vector<double>(rows * cols, 0.0)};
}

LstmParam make_lstm(std::size_t hidden, std::size_t input) {
  LstmParam p;
  p.w_x = make_matrix(4 * hidden, input);
  p.w_h = make_matrix(4 * hidden, hidden);
  p.b.data.assign(4 * hidden, 0.0);
  // forget-gate bias 1.0 stabilizes early training
  for (std::size_t i = hidden; i < 2 * hidden; ++i) p.b.data[i] = 1.0;
  return p;
}

void add_lstm_entries(std::vector<ParamRef>& out, const std::string& prefix,
                      LstmParam& p) {
  out.push_back({prefix + ".w_x", num::Shape::mat(p.w_x.rows, p.w_x.cols),
                 &p.w_x.data});
  out.push_back({prefix + ".w_h", num::Shape::mat(p.w_h.rows, p.w_h.cols),
                 &p.w_h.data});
  out.push_back({prefix + ".b", num::Shape::vec(p.b.data.size()), &p.b.data});
}

}  // namespace

AgentParams AgentParams::init(const AgentConfig& cfg, std::uint64_t seed) {
  if (cfg.hidden == 0 || cfg.embed == 0 || cfg.vocab_size == 0 ||
      cfg.feat_dim == 0) {
    throw ConfigError("AgentParams::init: hidden, embed, vocab_size and "
                      "feat_dim must be positive");
  }
  if (cfg.train_arity == 0) {
    throw ConfigError("AgentParams::init: train_arity must be >= 1");
  }
  AgentParams p;
  p.cfg = cfg;
  p.embedding = make_matrix(cfg.vocab_size, cfg.embed);
  p.encoder.reserve(cfg.n_arms());
  for (std::size_t i = 0; i < cfg.n_arms(); ++i) {
    p.encoder.push_back(make_lstm(cfg.hidden, cfg.embed));
  }
  p.decoder = make_lstm(cfg.hidden, cfg.decoder_in());
  p.w_h_attn = make_matrix(cfg.hidden, cfg.hidden);
  p.w_s_attn = make_matrix(cfg.hidden, cfg.feat_dim);
  p.w_z = make_matrix(cfg.hidden, cfg.hidden + cfg.z_dim());
  p.w_u = make_matrix(cfg.hidden, cfg.action_dim());

  Rng rng(mix_seed(seed, "init"));
  const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.hidden));
  for (ParamRef& ref : p.entries()) {
    if (ref.name == "embedding") {
      for (double& x : *ref.data) x = rng.uniform(-0.1, 0.1);
    } else if (ref.shape.rank() == 2) {
      for (double& x : *ref.data) x = rng.uniform(-bound, bound);
    }
    // biases keep their construction values (zero, forget gate 1.0)
  }
  return p;
}

std::vector<ParamRef> AgentParams::entries() {
  std::vector<ParamRef> out;
  out.push_back({"embedding", num::Shape::mat(embedding.rows, embedding.cols),
                 &embedding.data});
  for (std::size_t i = 0; i < encoder.size(); ++i) {
    add_lstm_entries(out, "encoder" + std::to_string(i), encoder[i]);
  }
  add_lstm_entries(out, "decoder", decoder);
  out.push_back({"attn.w_h", num::Shape::mat(w_h_attn.rows, w_h_attn.cols),
                 &w_h_attn.data});
  out.push_back({"attn.w_s", num::Shape::mat(w_s_attn.rows, w_s_attn.cols),
                 &w_s_attn.data});
  out.push_back(
      {"act.w_z", num::Shape::mat(w_z.rows, w_z.cols), &w_z.data});
  out.push_back(
      {"act.w_u", num::Shape::mat(w_u.rows, w_u.cols), &w_u.data});
  return out;
}

std::vector<ParamRef> AgentParams::entries() const {
  return const_cast<AgentParams*>(this)->entries();
}

std::size_t AgentParams::total_size() const {
  std::size_t n = 0;
  for (const ParamRef& ref : entries()) n += ref.data->size();
  return n;
}

}  // namespace leo::agent
