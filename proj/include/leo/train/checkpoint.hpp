#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "leo/agent/params.hpp"
#include "leo/num/tensor.hpp"

namespace leo::train {

struct NamedTensor {
  std::string name;
  num::Shape shape;
  std::vector<double> data;
};

// Binary snapshot of the model plus enough config to rebuild it. Layout:
// magic "LEO1", version u32, epoch u64, running_loss f64, config-text
// block (u64 length + bytes), tensor count u64, then per tensor: name
// length u64, UTF-8 name, rank u64, dims u64 each, payload little-endian
// f64. Round-trips bit-exactly.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::uint32_t version = kVersion;
  std::uint64_t epoch = 0;
  double running_loss = 0.0;
  std::string config;  // key=value lines
  std::vector<NamedTensor> tensors;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// AgentConfig as key=value text and back.
std::string agent_config_text(const agent::AgentConfig& cfg);
agent::AgentConfig parse_agent_config(const std::string& text);

Checkpoint make_checkpoint(const agent::AgentParams& params,
                           std::uint64_t epoch, double running_loss,
                           const std::string& extra_config = "");
agent::AgentParams params_from_checkpoint(const Checkpoint& c);

}  // namespace leo::train
