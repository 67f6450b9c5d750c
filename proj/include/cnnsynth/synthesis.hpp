#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cnnsynth/assembler.hpp"
#include "cnnsynth/clustering.hpp"
#include "cnnsynth/costmodel.hpp"

namespace cnnsynth {

struct GenomeConfig {
  int bits_per_node = 8;
  std::int64_t channel_granularity = 8;
};

// Maps each node slot of a group to `bits_per_node` genome bits. Slot value v
// decodes to (v + 1) * granularity output channels.
struct GenomeLayout {
  int bits_per_node = 8;
  std::int64_t channel_granularity = 8;
  std::vector<NodeSlot> slots;

  std::size_t length() const { return slots.size() * static_cast<std::size_t>(bits_per_node); }
  std::int64_t max_channels() const {
    return (std::int64_t{1} << bits_per_node) * channel_granularity;
  }
};

GenomeLayout make_layout(const GroupSpec& group, const GenomeConfig& config = {});

struct Genome {
  std::vector<std::uint8_t> bits;  // each 0 or 1

  // Parses a string of '0' and '1'.
  static Genome from_string(std::string_view text);
  std::string to_string() const;
  friend bool operator==(const Genome&, const Genome&) = default;
};

// Most-significant bit first within each slot.
std::vector<std::int64_t> decode(const Genome& genome, const GenomeLayout& layout);
Genome encode(std::span<const std::int64_t> channels, const GenomeLayout& layout);

struct FitnessWeights {
  double mac = 0.5;
  double wp = 0.5;
};

void validate_weights(const FitnessWeights& weights);

struct FitnessValue {
  double value = 0.0;
  double mac_err = 0.0;
  double wp_err = 0.0;
};

// value = w_mac * |mac - mac_real| / mac_real + w_wp * |wp - wp_real| / wp_real
FitnessValue fitness(const CostVector& achieved, const GroupTargets& targets,
                     const FitnessWeights& weights = {});

// Cost of the group as the assembler would materialize it.
CostVector evaluate(const Genome& genome, const GenomeLayout& layout, const GroupSpec& group,
                    std::int64_t in_channels, const CostModel& model);

struct GaParams {
  std::size_t population = 64;
  std::size_t generations = 500;
  double crossover_rate = 0.9;
  std::optional<double> mutation_rate;  // per bit; defaults to 1 / genome length
  std::size_t tournament_size = 3;
  std::size_t elite_count = 2;
  double epsilon = 1e-4;
  std::uint64_t seed = 0;
  std::size_t workers = 1;  // concurrent fitness evaluations; results do not depend on it
};

void validate_ga(const GaParams& ga);

struct EvolveResult {
  Genome best;
  FitnessValue fitness;
  CostVector achieved;
  // Best population fitness after generation 0, 1, ...
  std::vector<double> history;
};

EvolveResult evolve_group(const GroupSpec& group, const GroupTargets& targets,
                          const GenomeConfig& genome, const GaParams& ga,
                          std::int64_t in_channels, const CostModel& model,
                          const FitnessWeights& weights = {});

struct GroupResult {
  EvolveResult evolution;
  std::vector<std::int64_t> channels;
  std::int64_t in_channels = 0;
};

struct SynthesisResult {
  std::vector<GroupResult> groups;

  std::vector<std::vector<std::int64_t>> assignments() const;
  std::vector<CostVector> achieved() const;
};

// Evolves groups in order; group s uses seed ga.seed + s and the input width
// produced by the already-fixed upstream groups.
SynthesisResult synthesize(const ClusterSet& cs, const GenomeConfig& genome, const GaParams& ga,
                           const FitnessWeights& weights, const CostModel& model,
                           std::int64_t image_channels = 3);

}  // namespace cnnsynth
