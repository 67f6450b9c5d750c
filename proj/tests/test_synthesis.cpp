#include <doctest.h>

#include <random>

#include "cnnsynth/errors.hpp"
#include "cnnsynth/synthesis.hpp"
#include "fixtures.hpp"

using namespace cnnsynth;

namespace {

GroupSpec single_slot(std::int64_t center, std::int64_t k, std::int64_t s) {
  return {center, center, {{k, s, 1}}, {}};
}

Genome random_genome(std::size_t length, std::mt19937_64& rng) {
  Genome g;
  for (std::size_t i = 0; i < length; ++i) g.bits.push_back(static_cast<std::uint8_t>(rng() & 1));
  return g;
}

}  // namespace

TEST_CASE("decode reads slots most-significant bit first") {
  const auto layout = make_layout(single_slot(1, 1, 1));
  CHECK(decode(Genome::from_string("00000000"), layout) == std::vector<std::int64_t>{8});
  CHECK(decode(Genome::from_string("00000111"), layout) == std::vector<std::int64_t>{64});
  CHECK(decode(Genome::from_string("11111111"), layout) == std::vector<std::int64_t>{2048});
  CHECK_THROWS_AS(decode(Genome::from_string("0000000"), layout), SynthesisError);

  GroupSpec two{14, 14, {{3, 1, 1}, {1, 1, 1}}, {}};
  const auto l2 = make_layout(two, {4, 16});
  CHECK(l2.length() == 8);
  CHECK(decode(Genome::from_string("00011111"), l2) == std::vector<std::int64_t>{32, 256});
}

TEST_CASE("encode inverts decode") {
  std::mt19937_64 rng(17);
  GroupSpec g{28, 28, {{5, 1, 4}, {3, 1, 5}, {1, 1, 8}}, {}};
  for (int bits : {1, 3, 8, 12}) {
    const auto layout = make_layout(g, {bits, 8});
    for (int i = 0; i < 50; ++i) {
      const auto genome = random_genome(layout.length(), rng);
      const auto channels = decode(genome, layout);
      for (auto c : channels) {
        CHECK(c >= 8);
        CHECK(c <= layout.max_channels());
      }
      CHECK(encode(channels, layout) == genome);
    }
  }
  const auto layout = make_layout(g);
  std::vector<std::int64_t> bad(layout.slots.size(), 12);
  CHECK_THROWS_AS(encode(bad, layout), SynthesisError);
}

TEST_CASE("fitness follows the weighted relative-error formula") {
  const auto f1 = fitness({2156050176ULL, 2803928}, {2156022912ULL, 2802996});
  CHECK(f1.value == doctest::Approx(0.000172573).epsilon(1e-5));
  const auto f2 = fitness({2774419200ULL, 2859720}, {2774532096ULL, 2792888});
  CHECK(f2.value == doctest::Approx(0.011985021).epsilon(1e-6));
  CHECK(f2.mac_err == doctest::Approx(112896.0 / 2774532096.0));
  CHECK(f2.wp_err == doctest::Approx(66832.0 / 2792888.0));

  const auto exact = fitness({123, 45}, {123, 45});
  CHECK(exact.value == 0.0);
  CHECK(fitness({123, 45}, {123, 45}, {1.0, 0.0}).value == 0.0);
  CHECK(fitness({123, 45}, {123, 45}, {0.2, 0.8}).value == 0.0);

  CHECK(fitness({5, 99}, {10, 1}, {1.0, 0.0}).value == 0.5);
  CHECK(fitness({5, 99}, {10, 0}, {1.0, 0.0}).value == 0.5);
  CHECK_THROWS_AS(fitness({5, 99}, {10, 0}), SynthesisError);
  CHECK_THROWS_AS(fitness({5, 99}, {10, 1}, {0.7, 0.7}), SynthesisError);
  CHECK_THROWS_AS(fitness({5, 99}, {10, 1}, {-0.5, 1.5}), SynthesisError);
}

TEST_CASE("mac error is scale covariant") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const Count t = 1 + rng() % 1000000, a = rng() % 2000000, c = 1 + rng() % 1000;
    const auto base = fitness({a, 1}, {t, 1}, {1.0, 0.0});
    const auto scaled = fitness({a * c, 1}, {t * c, 1}, {1.0, 0.0});
    CHECK(scaled.mac_err == doctest::Approx(base.mac_err).epsilon(1e-12));
  }
}

TEST_CASE("evaluate materializes the group exactly") {
  const CostModel model;
  const auto g = single_slot(1, 1, 1);
  const auto layout = make_layout(g);
  const auto genome = Genome::from_string("00000000");
  CHECK(evaluate(genome, layout, g, 1, model) == CostVector{8, 1});
  CHECK(evaluate(genome, layout, g, 1, model) == evaluate(genome, layout, g, 1, model));

  // Doubling the decoded channels of a single-node group doubles MACs.
  const auto g2 = single_slot(14, 3, 1);
  const auto l2 = make_layout(g2);
  const auto c8 = evaluate(encode(std::vector<std::int64_t>{8}, l2), l2, g2, 5, model);
  const auto c16 = evaluate(encode(std::vector<std::int64_t>{16}, l2), l2, g2, 5, model);
  CHECK(c16.mac == 2 * c8.mac);
  CHECK(c8.mac == 14ULL * 14 * 8 * 9 * 5);

  // Chain/branch rule on the first table group, input 3 channels.
  GroupSpec g1{224, 224, {{11, 4, 1}, {7, 2, 1}, {3, 1, 2}}, {}};
  const auto l1 = make_layout(g1);
  const std::vector<std::int64_t> ch = {96, 64, 64, 128};
  const auto cost = evaluate(encode(ch, l1), l1, g1, 3, model);
  const Count expected_mac = 56ULL * 56 * 96 * 121 * 3 + 112ULL * 112 * 64 * 49 * 3 +
                             224ULL * 224 * 64 * 9 * 3 + 224ULL * 224 * 128 * 9 * 64;
  const Count expected_wp = 56 * 56 * 96 / 32 + 112 * 112 * 64 / 32 + 224 * 224 * 64 / 32 +
                            224 * 224 * 128 / 32;
  CHECK(cost == CostVector{expected_mac, expected_wp});
}

TEST_CASE("evolve_group recovers a planted genome") {
  const CostModel model;
  GroupSpec g{28, 28, {{5, 1, 2}, {3, 2, 1}, {3, 1, 3}, {1, 1, 2}}, {}};
  const auto layout = make_layout(g);
  std::mt19937_64 rng(99);
  const auto hidden = random_genome(layout.length(), rng);
  const auto planted = evaluate(hidden, layout, g, 64, model);
  GaParams ga;
  ga.seed = 42;
  const auto result = evolve_group(g, {planted.mac, planted.wp}, {}, ga, 64, model);
  CHECK(result.fitness.value <= 1e-3);
  CHECK(result.achieved == evaluate(result.best, layout, g, 64, model));
  for (std::size_t i = 1; i < result.history.size(); ++i) {
    CHECK(result.history[i] <= result.history[i - 1]);
  }
  CHECK(result.history.back() == result.fitness.value);
}

TEST_CASE("evolve_group stops at generation 0 with a loose epsilon") {
  const CostModel model;
  const auto g = single_slot(14, 3, 1);
  GaParams ga;
  ga.epsilon = 1e300;
  const auto result = evolve_group(g, {1000, 10}, {}, ga, 8, model);
  CHECK(result.history.size() == 1);
}

TEST_CASE("evolve_group is deterministic across runs and worker counts") {
  const CostModel model;
  GroupSpec g{56, 56, {{3, 1, 4}, {1, 1, 1}}, {}};
  GaParams ga;
  ga.seed = 7;
  ga.generations = 60;
  ga.epsilon = 0.0;
  const GroupTargets targets{4983881728ULL, 3184980};
  const auto a = evolve_group(g, targets, {}, ga, 128, model);
  const auto b = evolve_group(g, targets, {}, ga, 128, model);
  CHECK(a.best == b.best);
  CHECK(a.history == b.history);
  ga.workers = 4;
  const auto c = evolve_group(g, targets, {}, ga, 128, model);
  CHECK(a.best == c.best);
  CHECK(a.history == c.history);
  CHECK(a.history.size() == 61);

  ga.seed = 8;
  ga.workers = 1;
  const auto d = evolve_group(g, targets, {}, ga, 128, model);
  CHECK(d.history != a.history);
}

TEST_CASE("GA parameter validation") {
  GaParams ga;
  ga.population = 1;
  CHECK_THROWS_AS(validate_ga(ga), SynthesisError);
  ga = {};
  ga.elite_count = ga.population;
  CHECK_THROWS_AS(validate_ga(ga), SynthesisError);
  ga = {};
  ga.crossover_rate = 1.5;
  CHECK_THROWS_AS(validate_ga(ga), SynthesisError);
  ga = {};
  ga.mutation_rate = -0.1;
  CHECK_THROWS_AS(validate_ga(ga), SynthesisError);
  CHECK_NOTHROW(validate_ga(GaParams{}));
}

TEST_CASE("synthesize couples groups through channel widths") {
  const CostModel model;
  ClusterSet cs;
  cs.cost_model_id = "output-thread-v1";
  cs.groups.push_back({56, 56, {{3, 2, 1}, {3, 1, 2}}, {}});
  cs.groups.push_back({28, 28, {{3, 1, 2}, {1, 1, 2}}, {}});

  std::mt19937_64 rng(5);
  const auto l0 = make_layout(cs.groups[0]);
  const auto l1 = make_layout(cs.groups[1]);
  const auto h0 = random_genome(l0.length(), rng);
  const auto h1 = random_genome(l1.length(), rng);
  const auto ch0 = decode(h0, l0);
  // Group 2 receives the chain tail (pooled 56 -> 28) and the stride-2 branch.
  const std::int64_t width = ch0[2] + ch0[0];
  const auto c0 = evaluate(h0, l0, cs.groups[0], 3, model);
  const auto c1 = evaluate(h1, l1, cs.groups[1], width, model);
  cs.targets = {{c0.mac, c0.wp}, {c1.mac, c1.wp}};

  GaParams ga;
  ga.seed = 1234;
  const auto result = synthesize(cs, {}, ga, {}, model, 3);
  REQUIRE(result.groups.size() == 2);
  CHECK(result.groups[0].in_channels == 3);
  CHECK(result.groups[0].evolution.fitness.value <= 1e-3);
  CHECK(result.groups[1].evolution.fitness.value <= 1e-3);
  const auto& got0 = result.groups[0].channels;
  CHECK(result.groups[1].in_channels == got0[2] + got0[0]);

  // A single group equals one evolve_group call with the same seed.
  ClusterSet one;
  one.cost_model_id = cs.cost_model_id;
  one.groups = {cs.groups[0]};
  one.targets = {cs.targets[0]};
  const auto single = synthesize(one, {}, ga, {}, model, 3);
  const auto direct = evolve_group(cs.groups[0], cs.targets[0], {}, ga, 3, model);
  CHECK(single.groups[0].evolution.best == direct.best);
  CHECK(single.groups[0].evolution.history == direct.history);
}
