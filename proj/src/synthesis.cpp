#include "cnnsynth/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "cnnsynth/errors.hpp"

namespace cnnsynth {

GenomeLayout make_layout(const GroupSpec& group, const GenomeConfig& config) {
  if (config.bits_per_node < 1 || config.bits_per_node > 24) {
    throw SynthesisError("bits_per_node must be in [1, 24]");
  }
  if (config.channel_granularity < 1) throw SynthesisError("channel_granularity must be positive");
  return {config.bits_per_node, config.channel_granularity, expand_slots(group)};
}

Genome Genome::from_string(std::string_view text) {
  Genome g;
  g.bits.reserve(text.size());
  for (char c : text) {
    if (c != '0' && c != '1') throw SynthesisError("genome string may only contain 0 and 1");
    g.bits.push_back(static_cast<std::uint8_t>(c - '0'));
  }
  return g;
}

std::string Genome::to_string() const {
  std::string s;
  s.reserve(bits.size());
  for (auto b : bits) s.push_back(b ? '1' : '0');
  return s;
}

std::vector<std::int64_t> decode(const Genome& genome, const GenomeLayout& layout) {
  if (genome.bits.size() != layout.length()) {
    throw SynthesisError("genome length " + std::to_string(genome.bits.size()) +
                         " does not match layout length " + std::to_string(layout.length()));
  }
  std::vector<std::int64_t> channels;
  channels.reserve(layout.slots.size());
  auto bit = genome.bits.begin();
  for (std::size_t s = 0; s < layout.slots.size(); ++s) {
    std::int64_t v = 0;
    for (int b = 0; b < layout.bits_per_node; ++b) v = (v << 1) | *bit++;
    channels.push_back((v + 1) * layout.channel_granularity);
  }
  return channels;
}

Genome encode(std::span<const std::int64_t> channels, const GenomeLayout& layout) {
  if (channels.size() != layout.slots.size()) {
    throw SynthesisError("expected " + std::to_string(layout.slots.size()) +
                         " channel counts, got " + std::to_string(channels.size()));
  }
  Genome g;
  g.bits.reserve(layout.length());
  for (auto c : channels) {
    if (c < layout.channel_granularity || c > layout.max_channels() ||
        c % layout.channel_granularity != 0) {
      throw SynthesisError("channel count " + std::to_string(c) + " is not representable");
    }
    const auto v = c / layout.channel_granularity - 1;
    for (int b = layout.bits_per_node - 1; b >= 0; --b) {
      g.bits.push_back(static_cast<std::uint8_t>((v >> b) & 1));
    }
  }
  return g;
}

void validate_weights(const FitnessWeights& w) {
  if (!(w.mac >= 0.0) || !(w.wp >= 0.0) || std::abs(w.mac + w.wp - 1.0) > 1e-9) {
    throw SynthesisError("fitness weights must be non-negative and sum to 1");
  }
}

namespace {

double relative_error(Count achieved, Count target) {
  const Count diff = achieved > target ? achieved - target : target - achieved;
  return static_cast<double>(diff) / static_cast<double>(target);
}

}  // namespace

FitnessValue fitness(const CostVector& achieved, const GroupTargets& targets,
                     const FitnessWeights& weights) {
  validate_weights(weights);
  FitnessValue f;
  if (targets.mac_real == 0) {
    if (weights.mac != 0.0) throw SynthesisError("MAC target is zero but its weight is not");
  } else {
    f.mac_err = relative_error(achieved.mac, targets.mac_real);
  }
  if (targets.wp_real == 0) {
    if (weights.wp != 0.0) throw SynthesisError("warp target is zero but its weight is not");
  } else {
    f.wp_err = relative_error(achieved.wp, targets.wp_real);
  }
  f.value = weights.mac * f.mac_err + weights.wp * f.wp_err;
  return f;
}

CostVector evaluate(const Genome& genome, const GenomeLayout& layout, const GroupSpec& group,
                    std::int64_t in_channels, const CostModel& model) {
  const auto shapes = group_conv_shapes(group, decode(genome, layout), in_channels);
  return group_cost(std::span<const ConvShape>(shapes), model);
}

void validate_ga(const GaParams& ga) {
  if (ga.population < 2) throw SynthesisError("population must be at least 2");
  if (ga.elite_count >= ga.population) throw SynthesisError("elite_count must be below population");
  if (ga.tournament_size < 1) throw SynthesisError("tournament_size must be positive");
  if (!(ga.crossover_rate >= 0.0 && ga.crossover_rate <= 1.0)) {
    throw SynthesisError("crossover_rate must be in [0, 1]");
  }
  if (ga.mutation_rate && !(*ga.mutation_rate >= 0.0 && *ga.mutation_rate <= 1.0)) {
    throw SynthesisError("mutation_rate must be in [0, 1]");
  }
  if (std::isnan(ga.epsilon)) throw SynthesisError("epsilon must be a number");
  if (ga.workers < 1) throw SynthesisError("workers must be positive");
}

namespace {

// Distribution helpers over the raw engine output; std:: distributions are
// implementation-defined and would break cross-platform reproducibility.
class Random {
 public:
  explicit Random(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::uint8_t bit() { return static_cast<std::uint8_t>(engine_() >> 63); }

 private:
  std::mt19937_64 engine_;
};

struct Scored {
  FitnessValue fitness;
  CostVector achieved;
};

}  // namespace

EvolveResult evolve_group(const GroupSpec& group, const GroupTargets& targets,
                          const GenomeConfig& genome_config, const GaParams& ga,
                          std::int64_t in_channels, const CostModel& model,
                          const FitnessWeights& weights) {
  validate_ga(ga);
  validate_weights(weights);
  if (in_channels <= 0) throw SynthesisError("input channels must be positive");
  const auto layout = make_layout(group, genome_config);
  const std::size_t length = layout.length();
  if (length == 0) throw SynthesisError("group has no node slots");
  const double mutation = ga.mutation_rate.value_or(1.0 / static_cast<double>(length));
  const std::size_t pop_size = ga.population;

  auto score = [&](const Genome& g) {
    const auto achieved = evaluate(g, layout, group, in_channels, model);
    return Scored{fitness(achieved, targets, weights), achieved};
  };
  // Fills scores[first..] for population[first..]; order of work is irrelevant.
  auto score_all = [&](const std::vector<Genome>& pop, std::vector<Scored>& scores,
                       std::size_t first) {
    scores.resize(pop.size());
    const std::size_t count = pop.size() - first;
    const std::size_t workers = std::min(ga.workers, count);
    if (workers <= 1) {
      for (std::size_t i = first; i < pop.size(); ++i) scores[i] = score(pop[i]);
      return;
    }
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        for (std::size_t i = first + w; i < pop.size(); i += workers) scores[i] = score(pop[i]);
      });
    }
    for (auto& t : threads) t.join();
  };
  auto better = [](const std::vector<Scored>& s, std::size_t a, std::size_t b) {
    return s[a].fitness.value < s[b].fitness.value ||
           (s[a].fitness.value == s[b].fitness.value && a < b);
  };

  Random rng(ga.seed);
  std::vector<Genome> population(pop_size);
  for (auto& g : population) {
    g.bits.resize(length);
    for (auto& b : g.bits) b = rng.bit();
  }
  std::vector<Scored> scores;
  score_all(population, scores, 0);

  auto best_index = [&] {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pop_size; ++i) {
      if (better(scores, i, best)) best = i;
    }
    return best;
  };

  EvolveResult result;
  std::size_t best = best_index();
  result.best = population[best];
  result.fitness = scores[best].fitness;
  result.achieved = scores[best].achieved;
  result.history.push_back(result.fitness.value);

  std::vector<std::size_t> order(pop_size);
  std::vector<Genome> next;
  std::vector<Scored> next_scores;
  for (std::size_t gen = 0; gen < ga.generations && result.fitness.value > ga.epsilon; ++gen) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return better(scores, a, b); });

    next.clear();
    next_scores.clear();
    for (std::size_t e = 0; e < ga.elite_count; ++e) {
      next.push_back(population[order[e]]);
      next_scores.push_back(scores[order[e]]);
    }
    auto tournament = [&] {
      std::size_t winner = rng.below(pop_size);
      for (std::size_t t = 1; t < ga.tournament_size; ++t) {
        const std::size_t challenger = rng.below(pop_size);
        if (better(scores, challenger, winner)) winner = challenger;
      }
      return winner;
    };
    auto mutate = [&](Genome& g) {
      for (auto& b : g.bits) {
        if (rng.unit() < mutation) b ^= 1;
      }
    };
    while (next.size() < pop_size) {
      Genome a = population[tournament()];
      Genome b = population[tournament()];
      if (length > 1 && rng.unit() < ga.crossover_rate) {
        const auto point = static_cast<std::ptrdiff_t>(1 + rng.below(length - 1));
        std::swap_ranges(a.bits.begin() + point, a.bits.end(), b.bits.begin() + point);
      }
      mutate(a);
      mutate(b);
      next.push_back(std::move(a));
      if (next.size() < pop_size) next.push_back(std::move(b));
    }
    score_all(next, next_scores, ga.elite_count);
    std::swap(population, next);
    std::swap(scores, next_scores);

    best = best_index();
    if (scores[best].fitness.value < result.fitness.value) {
      result.best = population[best];
      result.fitness = scores[best].fitness;
      result.achieved = scores[best].achieved;
    }
    result.history.push_back(scores[best].fitness.value);
  }
  return result;
}

std::vector<std::vector<std::int64_t>> SynthesisResult::assignments() const {
  std::vector<std::vector<std::int64_t>> out;
  for (const auto& g : groups) out.push_back(g.channels);
  return out;
}

std::vector<CostVector> SynthesisResult::achieved() const {
  std::vector<CostVector> out;
  for (const auto& g : groups) out.push_back(g.evolution.achieved);
  return out;
}

SynthesisResult synthesize(const ClusterSet& cs, const GenomeConfig& genome, const GaParams& ga,
                           const FitnessWeights& weights, const CostModel& model,
                           std::int64_t image_channels) {
  validate_cluster_set(cs);
  if (image_channels <= 0) throw SynthesisError("image_channels must be positive");
  const auto plan = plan_routes(cs);
  SynthesisResult result;
  std::vector<std::vector<std::int64_t>> assignments;
  for (std::size_t s = 0; s < cs.groups.size(); ++s) {
    GroupResult gr;
    gr.in_channels = incoming_channels(plan, s, assignments, image_channels);
    GaParams group_ga = ga;
    group_ga.seed = ga.seed + s;
    gr.evolution =
        evolve_group(cs.groups[s], cs.targets[s], genome, group_ga, gr.in_channels, model, weights);
    gr.channels = decode(gr.evolution.best, make_layout(cs.groups[s], genome));
    assignments.push_back(gr.channels);
    result.groups.push_back(std::move(gr));
  }
  return result;
}

}  // namespace cnnsynth
