#include "cnnsynth/config.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "cnnsynth/errors.hpp"

namespace cnnsynth {

using nlohmann::json;

GaParams PipelineConfig::ga_params() const {
  GaParams p = ga;
  p.seed = seed;
  return p;
}

void validate_config(const PipelineConfig& c) {
  try {
    validate_ga(c.ga);
    validate_weights(c.fitness);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (c.genome.bits_per_node < 1 || c.genome.bits_per_node > 24) {
    throw ConfigError("genome.bits_per_node must be in [1, 24]");
  }
  if (c.genome.channel_granularity < 1) throw ConfigError("genome.channel_granularity must be positive");
  if (!(c.fail_threshold >= 0.0)) throw ConfigError("fitness.fail_threshold must be non-negative");
  if (!(c.merge_tolerance >= 0.0 && c.merge_tolerance < 1.0)) {
    throw ConfigError("clustering.merge_tolerance must be in [0, 1)");
  }
  if (!(c.scale_factor > 0.0 && c.scale_factor <= 1.0)) {
    throw ConfigError("clustering.scale_factor must be in (0, 1]");
  }
  if (c.assembler.num_classes <= 0 || c.assembler.image_channels <= 0) {
    throw ConfigError("assembler.num_classes and assembler.image_channels must be positive");
  }
  try {
    CostModel model(c.warp_model_id);
  } catch (const Error& e) {
    throw ConfigError(std::string("cost_model.warp_model_id: ") + e.what());
  }
}

namespace {

void reject_unknown(const json& j, const std::string& section, std::set<std::string> allowed) {
  if (!j.is_object()) {
    throw ConfigError((section.empty() ? std::string("config") : section) + " must be an object");
  }
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown config key '" + (section.empty() ? key : section + "." + key) + "'");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, const std::string& section, T& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  const std::string name = section + "." + key;
  if constexpr (std::is_same_v<T, double>) {
    if (!v.is_number()) throw ConfigError(name + " must be a number");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw ConfigError(name + " must be a string");
  } else if constexpr (std::is_unsigned_v<T>) {
    if (!v.is_number_unsigned()) throw ConfigError(name + " must be a non-negative integer");
  } else {
    if (!v.is_number_integer()) throw ConfigError(name + " must be an integer");
  }
  out = v.get<T>();
}

}  // namespace

PipelineConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(doc, "",
                 {"seed", "ga", "genome", "fitness", "cost_model", "clustering", "assembler"});
  PipelineConfig c;
  read(doc, "seed", "config", c.seed);
  if (doc.contains("ga")) {
    const auto& j = doc["ga"];
    reject_unknown(j, "ga",
                   {"population", "generations", "crossover_rate", "mutation_rate",
                    "tournament_size", "elite_count", "epsilon", "workers"});
    read(j, "population", "ga", c.ga.population);
    read(j, "generations", "ga", c.ga.generations);
    read(j, "crossover_rate", "ga", c.ga.crossover_rate);
    if (j.contains("mutation_rate") && !j["mutation_rate"].is_null()) {
      double rate = 0.0;
      read(j, "mutation_rate", "ga", rate);
      c.ga.mutation_rate = rate;
    }
    read(j, "tournament_size", "ga", c.ga.tournament_size);
    read(j, "elite_count", "ga", c.ga.elite_count);
    read(j, "epsilon", "ga", c.ga.epsilon);
    read(j, "workers", "ga", c.ga.workers);
  }
  if (doc.contains("genome")) {
    const auto& j = doc["genome"];
    reject_unknown(j, "genome", {"bits_per_node", "channel_granularity"});
    read(j, "bits_per_node", "genome", c.genome.bits_per_node);
    read(j, "channel_granularity", "genome", c.genome.channel_granularity);
  }
  if (doc.contains("fitness")) {
    const auto& j = doc["fitness"];
    reject_unknown(j, "fitness", {"mac_weight", "wp_weight", "fail_threshold"});
    read(j, "mac_weight", "fitness", c.fitness.mac);
    read(j, "wp_weight", "fitness", c.fitness.wp);
    read(j, "fail_threshold", "fitness", c.fail_threshold);
  }
  if (doc.contains("cost_model")) {
    const auto& j = doc["cost_model"];
    reject_unknown(j, "cost_model", {"warp_model_id"});
    read(j, "warp_model_id", "cost_model", c.warp_model_id);
  }
  if (doc.contains("clustering")) {
    const auto& j = doc["clustering"];
    reject_unknown(j, "clustering", {"merge_tolerance", "scale_factor"});
    read(j, "merge_tolerance", "clustering", c.merge_tolerance);
    read(j, "scale_factor", "clustering", c.scale_factor);
  }
  if (doc.contains("assembler")) {
    const auto& j = doc["assembler"];
    reject_unknown(j, "assembler", {"num_classes", "image_channels"});
    read(j, "num_classes", "assembler", c.assembler.num_classes);
    read(j, "image_channels", "assembler", c.assembler.image_channels);
  }
  validate_config(c);
  return c;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config not found: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string config_to_json(const PipelineConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["ga"]["population"] = c.ga.population;
  j["ga"]["generations"] = c.ga.generations;
  j["ga"]["crossover_rate"] = c.ga.crossover_rate;
  if (c.ga.mutation_rate) {
    j["ga"]["mutation_rate"] = *c.ga.mutation_rate;
  } else {
    j["ga"]["mutation_rate"] = nullptr;
  }
  j["ga"]["tournament_size"] = c.ga.tournament_size;
  j["ga"]["elite_count"] = c.ga.elite_count;
  j["ga"]["epsilon"] = c.ga.epsilon;
  j["ga"]["workers"] = c.ga.workers;
  j["genome"]["bits_per_node"] = c.genome.bits_per_node;
  j["genome"]["channel_granularity"] = c.genome.channel_granularity;
  j["fitness"]["mac_weight"] = c.fitness.mac;
  j["fitness"]["wp_weight"] = c.fitness.wp;
  j["fitness"]["fail_threshold"] = c.fail_threshold;
  j["cost_model"]["warp_model_id"] = c.warp_model_id;
  j["clustering"]["merge_tolerance"] = c.merge_tolerance;
  j["clustering"]["scale_factor"] = c.scale_factor;
  j["assembler"]["num_classes"] = c.assembler.num_classes;
  j["assembler"]["image_channels"] = c.assembler.image_channels;
  return j.dump(2) + "\n";
}

}  // namespace cnnsynth
