#include "leo/lang/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "leo/rng.hpp"
#include "leo/util.hpp"

namespace leo::lang {

namespace {

struct Bank {
  std::vector<std::string> left, right, around, straight;
  std::vector<std::string> move_pre;  // followed by the landmark token
  std::vector<std::string> stop_pre;
};

const std::vector<Bank>& banks() {
  static const std::vector<Bank> b{
      {{"turn", "left"},
       {"turn", "right"},
       {"turn", "around"},
       {"go", "straight"},
       {"go", "to", "the"},
       {"wait", "at", "the"}},
      {{"take", "a", "left"},
       {"take", "a", "right"},
       {"turn", "back"},
       {"keep", "straight"},
       {"walk", "past", "the"},
       {"stop", "near", "the"}},
      {{"head", "left"},
       {"head", "right"},
       {"head", "back"},
       {"head", "straight"},
       {"walk", "to", "the"},
       {"wait", "near", "the"}},
      {{"turn", "left"},
       {"turn", "right"},
       {"turn", "around"},
       {"continue", "straight"},
       {"move", "toward", "the"},
       {"stop", "at", "the"}},
  };
  return b;
}

constexpr std::size_t kMaxTokens = 60;

double wrap_pi(double a) {
  while (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
  return a;
}

void append_words(std::vector<int>& ids, const Vocabulary& vocab,
                  const std::vector<std::string>& words) {
  for (const std::string& w : words) {
    const int id = vocab.id(w);
    if (id == Vocabulary::kUnk) {
      throw ConfigError("template word '" + w +
                        "' missing from the closed-world vocabulary");
    }
    ids.push_back(id);
  }
}

}  // namespace

std::size_t n_styles() { return banks().size(); }

Description describe_trajectory(const sim::NavGraph& g,
                                const sim::Trajectory& traj,
                                std::uint64_t seed, double elide_p,
                                std::size_t style, double start_heading) {
  if (elide_p < 0.0 || elide_p >= 1.0) {
    throw ConfigError("describe_trajectory: elide_p in [0, 1) required");
  }
  if (traj.nodes.size() < 1) {
    throw DataError("describe_trajectory: empty trajectory");
  }
  const Vocabulary& vocab = Vocabulary::closed_world();
  const Bank& bank = banks()[style % banks().size()];
  Rng rng(mix_seed(seed, "elide"));

  Description d;
  d.tokens.push_back(Vocabulary::kBos);
  double heading = start_heading;
  for (std::size_t hop = 0; hop + 1 < traj.nodes.size(); ++hop) {
    const int view_index = traj.actions[hop];
    const sim::View& view = g.views[traj.nodes[hop]][view_index];
    const double delta = wrap_pi(view.heading - heading);
    heading = view.heading;

    const bool keep = !rng.bernoulli(elide_p);
    d.hop_mentioned.push_back(keep);
    if (!keep) continue;

    if (std::abs(delta) < 1e-9) {
      append_words(d.tokens, vocab, bank.straight);
    } else if (std::abs(delta - std::numbers::pi) < 1e-9) {
      append_words(d.tokens, vocab, bank.around);
    } else if (delta > 0.0) {
      append_words(d.tokens, vocab, bank.left);
    } else {
      append_words(d.tokens, vocab, bank.right);
    }
    append_words(d.tokens, vocab, bank.move_pre);
    const int lm = g.nodes[traj.nodes[hop + 1]].landmark;
    d.tokens.push_back(vocab.id(Vocabulary::landmark_name(lm)));
  }
  append_words(d.tokens, vocab, bank.stop_pre);
  d.tokens.push_back(
      vocab.id(Vocabulary::landmark_name(g.nodes[traj.goal()].landmark)));

  if (d.tokens.size() >= kMaxTokens) d.tokens.resize(kMaxTokens - 1);
  d.tokens.push_back(Vocabulary::kEos);
  d.text = vocab.detokenize(d.tokens);
  return d;
}

std::vector<const DatasetItem*> Dataset::split(const std::string& name) const {
  std::vector<const DatasetItem*> out;
  for (const DatasetItem& item : items) {
    if (item.split == name) out.push_back(&item);
  }
  return out;
}

namespace {

DatasetItem make_item(const sim::NavGraph& g, const std::string& split,
                      std::size_t index, const GenDataParams& params) {
  const std::uint64_t traj_seed =
      mix_seed(params.seed, g.graph_id + "/" + split, index);
  const sim::Trajectory traj =
      sim::sample_expert_trajectory(g, traj_seed, params.min_hops,
                                    params.max_hops);
  DatasetItem item;
  char idx[8];
  std::snprintf(idx, sizeof(idx), "%03zu", index);
  item.path_id = g.graph_id + "_" + split + "_" + idx;
  item.graph_id = g.graph_id;
  item.split = split;
  item.heading = 0.0;
  for (const int n : traj.nodes) item.path.push_back(g.nodes[n].id);
  for (std::size_t i = 0; i < params.m; ++i) {
    const std::uint64_t instr_seed = mix_seed(params.seed, item.path_id, i);
    const Description d =
        describe_trajectory(g, traj, instr_seed, params.elide_p,
                            i % n_styles(), item.heading);
    item.instructions.push_back(d.tokens);
    item.instr_text.push_back(d.text);
  }
  return item;
}

}  // namespace

Dataset generate_dataset(const std::vector<sim::NavGraph>& train_worlds,
                         const std::vector<sim::NavGraph>& unseen_worlds,
                         const GenDataParams& params) {
  if (params.m < 1) throw ConfigError("generate_dataset: M >= 1 required");
  if (params.m > n_styles()) {
    std::fprintf(stderr,
                 "warning: M=%zu exceeds the %zu template banks; styles are "
                 "reused with distinct sub-seeds\n",
                 params.m, n_styles());
  }
  Dataset ds;
  for (const sim::NavGraph& g : train_worlds) {
    for (std::size_t i = 0; i < params.n_train_per_graph; ++i) {
      ds.items.push_back(make_item(g, "train", i, params));
    }
    for (std::size_t i = 0; i < params.n_valseen_per_graph; ++i) {
      ds.items.push_back(make_item(g, "val_seen", i, params));
    }
  }
  for (const sim::NavGraph& g : unseen_worlds) {
    for (std::size_t i = 0; i < params.n_valunseen_per_graph; ++i) {
      ds.items.push_back(make_item(g, "val_unseen", i, params));
    }
  }
  std::sort(ds.items.begin(), ds.items.end(),
            [](const DatasetItem& a, const DatasetItem& b) {
              return a.path_id < b.path_id;
            });
  return ds;
}

std::string to_jsonl(const Dataset& ds) {
  std::string out;
  for (const DatasetItem& item : ds.items) {
    out += "{\"graph_id\":\"" + item.graph_id + "\",\"heading\":";
    out += format_double(item.heading);
    out += ",\"instr_text\":[";
    for (std::size_t i = 0; i < item.instr_text.size(); ++i) {
      if (i) out += ',';
      out += "\"" + item.instr_text[i] + "\"";
    }
    out += "],\"instructions\":[";
    for (std::size_t i = 0; i < item.instructions.size(); ++i) {
      if (i) out += ',';
      out += '[';
      for (std::size_t j = 0; j < item.instructions[i].size(); ++j) {
        if (j) out += ',';
        out += std::to_string(item.instructions[i][j]);
      }
      out += ']';
    }
    out += "],\"path\":[";
    for (std::size_t i = 0; i < item.path.size(); ++i) {
      if (i) out += ',';
      out += "\"" + item.path[i] + "\"";
    }
    out += "],\"path_id\":\"" + item.path_id + "\",\"split\":\"" +
           item.split + "\"}\n";
  }
  return out;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  write_file(path, to_jsonl(ds));
}

Dataset load_dataset(const std::filesystem::path& path) {
  Dataset ds;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      DatasetItem item;
      item.path_id = j.at("path_id").get<std::string>();
      item.graph_id = j.at("graph_id").get<std::string>();
      item.split = j.at("split").get<std::string>();
      item.heading = j.at("heading").get<double>();
      item.path = j.at("path").get<std::vector<std::string>>();
      item.instructions =
          j.at("instructions").get<std::vector<std::vector<int>>>();
      item.instr_text = j.at("instr_text").get<std::vector<std::string>>();
      ds.items.push_back(std::move(item));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("dataset " + path.string() + " line " +
                        std::to_string(lineno) + ": " + e.what());
    }
  }
  return ds;
}

InstructionSet bind_item(const DatasetItem& item,
                         const std::vector<sim::NavGraph>& graphs) {
  const sim::NavGraph* graph = nullptr;
  for (const sim::NavGraph& g : graphs) {
    if (g.graph_id == item.graph_id) {
      graph = &g;
      break;
    }
  }
  if (graph == nullptr) {
    throw LookupError("dataset item " + item.path_id +
                      " references unknown graph " + item.graph_id);
  }
  InstructionSet set;
  set.path_id = item.path_id;
  set.graph = graph;
  set.start_heading = item.heading;
  std::vector<int> nodes;
  nodes.reserve(item.path.size());
  for (const std::string& id : item.path) nodes.push_back(graph->index_of(id));
  set.trajectory = sim::trajectory_from_nodes(*graph, nodes);
  set.instructions = item.instructions;
  if (set.instructions.empty()) {
    throw DataError("dataset item " + item.path_id + " has no instructions");
  }
  return set;
}

}  // namespace leo::lang
