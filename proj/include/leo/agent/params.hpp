#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "leo/errors.hpp"
#include "leo/num/tensor.hpp"

namespace leo::agent {

// Parameter-free aggregation over per-instruction contexts.
enum class Aggregation { kMean, kMax, kConcat };

// One language encoder shared across instruction slots, or an independent
// one per slot.
enum class EncoderMode { kShared, kMultiArm };

Aggregation parse_aggregation(const std::string& s);
EncoderMode parse_encoder_mode(const std::string& s);
std::string to_string(Aggregation a);
std::string to_string(EncoderMode m);

struct AgentConfig {
  std::size_t hidden = 64;       // decoder H; encoder hidden is tied to it
  std::size_t embed = 32;        // word embedding width
  std::size_t vocab_size = 0;
  std::size_t feat_dim = 0;      // panoramic view feature width
  Aggregation scheme = Aggregation::kMean;
  EncoderMode encoder_mode = EncoderMode::kShared;
  std::size_t train_arity = 3;   // M during training: concat width, arm count

  std::size_t action_dim() const { return feat_dim + 4; }
  std::size_t decoder_in() const { return feat_dim + action_dim(); }
  std::size_t z_dim() const {
    return scheme == Aggregation::kConcat ? hidden * train_arity : hidden;
  }
  std::size_t n_arms() const {
    return encoder_mode == EncoderMode::kMultiArm ? train_arity : 1;
  }
};

struct MatrixParam {
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;
};

struct VectorParam {
  std::vector<double> data;
};

struct LstmParam {
  MatrixParam w_x, w_h;
  VectorParam b;
};

// A named view over one parameter buffer; enumeration order is the
// canonical order used by the optimizer state and checkpoints.
struct ParamRef {
  std::string name;
  num::Shape shape;
  std::vector<double>* data;
};

// Every trainable buffer of the navigator: word embeddings, encoder arm(s),
// decoder, visual-attention projections, and the bilinear action head.
struct AgentParams {
  AgentConfig cfg;
  MatrixParam embedding;             // |V| x E
  std::vector<LstmParam> encoder;    // 1 or train_arity arms
  LstmParam decoder;
  MatrixParam w_h_attn;              // H x H
  MatrixParam w_s_attn;              // H x F
  MatrixParam w_z;                   // H x (H + z_dim)
  MatrixParam w_u;                   // H x (F + 4)

  // Weight matrices uniform(-1/sqrt(H), 1/sqrt(H)), embeddings
  // uniform(-0.1, 0.1), biases zero except forget gates at 1.0.
  static AgentParams init(const AgentConfig& cfg, std::uint64_t seed);

  std::vector<ParamRef> entries();
  std::vector<ParamRef> entries() const;
  std::size_t total_size() const;
};

}  // namespace leo::agent
