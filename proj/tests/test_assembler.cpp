#include <doctest.h>

#include <algorithm>
#include <random>

#include "cnnsynth/assembler.hpp"
#include "cnnsynth/errors.hpp"
#include "fixtures.hpp"

using namespace cnnsynth;

namespace {

ClusterSet classic_set() {
  ClusterSet cs;
  cs.cost_model_id = "output-thread-v1";
  for (const auto& g : testing::classic_groups()) {
    cs.groups.push_back({g.center, g.center, g.bins, {}});
    cs.targets.push_back({1, 1});
  }
  return cs;
}

std::vector<std::vector<std::int64_t>> uniform_channels(const ClusterSet& cs, std::int64_t c) {
  std::vector<std::vector<std::int64_t>> out;
  for (const auto& g : cs.groups) out.emplace_back(g.slot_count(), c);
  return out;
}

std::vector<std::string> successors(const ModelGraph& g, const std::string& id) {
  std::vector<std::string> out;
  for (const auto& e : g.edges) {
    if (e.src == id) out.push_back(e.dst);
  }
  return out;
}

std::vector<std::string> predecessors(const ModelGraph& g, const std::string& id) {
  std::vector<std::string> out;
  for (const auto& e : g.edges) {
    if (e.dst == id) out.push_back(e.src);
  }
  return out;
}

}  // namespace

TEST_CASE("first table group: stride-1 chain plus two branches") {
  GroupSpec g1{224, 224, {{11, 4, 1}, {7, 2, 1}, {3, 1, 2}}, {}};
  const std::vector<TensorRef> in = {{"input", 224, 224, 3}};
  const std::vector<std::int64_t> ch = {96, 64, 64, 128};
  const auto a = assemble_group(g1, 1, ch, in);

  REQUIRE(a.outgoing.size() == 3);
  CHECK(a.outgoing[0].node_id == "g1_relu4");
  CHECK(a.outgoing[0].h == 224);
  CHECK(a.outgoing[0].channels == 128);
  CHECK(a.outgoing[1].node_id == "g1_relu1");
  CHECK(a.outgoing[1].h == 56);
  CHECK(a.outgoing[2].node_id == "g1_relu2");
  CHECK(a.outgoing[2].h == 112);

  ModelGraph view{a.nodes, a.edges, {}};
  CHECK(predecessors(view, "g1_conv1") == std::vector<std::string>{"input"});
  CHECK(predecessors(view, "g1_conv2") == std::vector<std::string>{"input"});
  CHECK(predecessors(view, "g1_conv3") == std::vector<std::string>{"input"});
  CHECK(predecessors(view, "g1_conv4") == std::vector<std::string>{"g1_relu3"});
  CHECK(std::get<ConvParams>(view.find("g1_conv4")->params).in_channels == 64);
  CHECK(std::none_of(a.nodes.begin(), a.nodes.end(),
                     [](const GraphNode& n) { return n.op == OpKind::Concat; }));
}

TEST_CASE("single 1x1 group has no concat") {
  GroupSpec g{7, 7, {{1, 1, 1}}, {}};
  const std::vector<TensorRef> in = {{"x", 7, 7, 16}};
  const auto a = assemble_group(g, 2, std::vector<std::int64_t>{32}, in);
  CHECK(a.nodes.size() == 3);
  CHECK(a.outgoing.size() == 1);
  CHECK(a.nodes[0].id == "g2_conv1");
  CHECK(a.nodes[1].op == OpKind::BatchNorm);
  CHECK(a.nodes[2].op == OpKind::Relu);
}

TEST_CASE("multiple incoming tensors are concatenated") {
  GroupSpec g{28, 28, {{3, 1, 1}}, {}};
  const std::vector<TensorRef> in = {{"a", 28, 28, 40}, {"b", 28, 28, 24}};
  const auto a = assemble_group(g, 4, std::vector<std::int64_t>{8}, in);
  const auto& ca = a.nodes.front();
  CHECK(ca.id == "g4_ca1");
  CHECK(ca.op == OpKind::Concat);
  CHECK(ca.out_h == 28);
  CHECK(ca.out_channels == 64);
  CHECK(std::get<ConvParams>(a.nodes[1].params).in_channels == 64);

  const std::vector<TensorRef> bad = {{"a", 28, 28, 40}, {"b", 14, 14, 24}};
  CHECK_THROWS_WITH_AS(assemble_group(g, 4, std::vector<std::int64_t>{8}, bad),
                       "cannot concat a (28x28) with b (14x14)", AssemblyError);
}

TEST_CASE("table groups route branch outputs forward") {
  const auto cs = classic_set();
  const auto plan = plan_routes(cs);
  // Group 1 outputs: chain tail 224 -> group 2, 11x11/4 branch 56 -> group 3,
  // 7x7/2 branch 112 -> group 2.
  std::vector<std::size_t> from_g1;
  for (const auto& r : plan.routes) {
    if (r.from_group == 0) from_g1.push_back(r.to_group);
  }
  CHECK(from_g1 == std::vector<std::size_t>{1, 2, 1});

  const auto g = assemble_network(cs, uniform_channels(cs, 16));
  CHECK(validate_graph(g).empty());
  // 224 tail pooled into group 2, 112 branch unpooled.
  const auto* pl = g.find("g2_pl1");
  REQUIRE(pl != nullptr);
  CHECK(predecessors(g, "g2_pl1") == std::vector<std::string>{"g1_relu4"});
  CHECK(std::get<PoolParams>(pl->params).mode == "max");
  CHECK(std::get<PoolParams>(pl->params).kernel == 2);
  auto into_ca2 = predecessors(g, "g2_ca1");
  std::sort(into_ca2.begin(), into_ca2.end());
  CHECK(into_ca2 == std::vector<std::string>{"g1_relu2", "g2_pl1"});
  // 56 branch arrives at group 3 unpooled, alongside group 2's pooled tail.
  auto into_ca3 = predecessors(g, "g3_ca1");
  std::sort(into_ca3.begin(), into_ca3.end());
  CHECK(into_ca3 == std::vector<std::string>{"g1_relu1", "g3_pl1"});
  CHECK(g.find("g3_ca1")->out_channels == 32);
}

TEST_CASE("single group network layout") {
  ClusterSet cs;
  cs.cost_model_id = "output-thread-v1";
  cs.groups.push_back({7, 7, {{1, 1, 1}}, {}});
  cs.targets.push_back({1, 1});
  const auto g = assemble_network(cs, uniform_channels(cs, 8), {10, 3});
  std::vector<std::string> ids;
  for (const auto& n : g.nodes) ids.push_back(n.id);
  CHECK(ids == std::vector<std::string>{"input", "g1_conv1", "g1_bn1", "g1_relu1", "head_pl1",
                                        "head_fc1", "head_softmax1"});
  CHECK(std::get<FcParams>(g.find("head_fc1")->params) == FcParams{8, 10});
  CHECK(validate_graph(g).empty());
}

TEST_CASE("unroutable tensors and starved groups are construction errors") {
  ClusterSet cs;
  cs.cost_model_id = "output-thread-v1";
  // 14 -> stride 4 gives 4x4, smaller than the 7x7 next group.
  cs.groups.push_back({14, 14, {{5, 4, 1}, {3, 1, 1}}, {}});
  cs.groups.push_back({7, 7, {{1, 1, 1}}, {}});
  cs.targets = {{1, 1}, {1, 1}};
  CHECK_THROWS_WITH_AS(plan_routes(cs),
                       "cannot route tensor g1_relu1 (4x4): smaller than every remaining group center",
                       AssemblyError);

  cs.groups[0].bins = {{3, 4, 1}};
  cs.groups[1].center_h = cs.groups[1].center_w = 4;
  cs.groups.push_back({3, 3, {{1, 1, 1}}, {}});
  cs.targets.push_back({1, 1});
  // Group 1 emits only a 4x4 branch; group 2 (4x4) gets it, group 3 gets the tail.
  CHECK_NOTHROW(plan_routes(cs));
  cs.groups[1].bins = {{3, 2, 1}};
  CHECK_THROWS_WITH_AS(plan_routes(cs), "cannot route tensor g2_relu1 (2x2): smaller than every remaining group center",
                       AssemblyError);
}

TEST_CASE("validate_graph reports seeded corruptions") {
  const auto cs = classic_set();
  const auto good = assemble_network(cs, uniform_channels(cs, 16));
  REQUIRE(validate_graph(good).empty());

  SUBCASE("conv input width mismatch") {
    auto g = good;
    for (auto& n : g.nodes) {
      if (n.id == "g2_conv2") std::get<ConvParams>(n.params).in_channels = 999;
    }
    const auto v = validate_graph(g);
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("g2_conv2") != std::string::npos);
    CHECK(v[0].find("g2_relu1") != std::string::npos);
  }
  SUBCASE("dropped bin") {
    // Remove the g3 1x1 conv (chain tail) and splice around it.
    auto g = good;
    const std::vector<std::string> drop = {"g3_conv5", "g3_bn5", "g3_relu5"};
    std::erase_if(g.nodes, [&](const GraphNode& n) {
      return std::find(drop.begin(), drop.end(), n.id) != drop.end();
    });
    std::vector<Edge> edges;
    for (auto e : g.edges) {
      if (e.dst == "g3_conv5" || e.src == "g3_conv5" || e.src == "g3_bn5") continue;
      if (e.src == "g3_relu5") e.src = "g3_relu4";
      edges.push_back(e);
    }
    g.edges = edges;
    const auto v = validate_graph(g);
    CHECK(std::find(v.begin(), v.end(), "bin multiset mismatch, group 3") != v.end());
  }
  SUBCASE("dangling edge") {
    auto g = good;
    g.edges.push_back({"g1_relu4", "ghost"});
    const auto v = validate_graph(g);
    REQUIRE(!v.empty());
    CHECK(v[0] == "dangling edge g1_relu4 -> ghost: unknown node ghost");
  }
  SUBCASE("cycle and extra softmax") {
    auto g = good;
    g.edges.push_back({"g6_relu12", "g6_conv1"});
    g.nodes.push_back({"extra", OpKind::Softmax, std::monostate{}, 1, 1, 1000});
    const auto v = validate_graph(g);
    CHECK(std::find(v.begin(), v.end(), "graph contains a cycle") != v.end());
    CHECK(std::find(v.begin(), v.end(), "expected exactly one SOFTMAX node, found 2") != v.end());
  }
  SUBCASE("conv without batch norm") {
    auto g = good;
    for (auto& n : g.nodes) {
      if (n.id == "g1_bn1") n.op = OpKind::Relu;
    }
    const auto v = validate_graph(g);
    CHECK(std::find(v.begin(), v.end(), "CONV g1_conv1 must be followed by exactly one BN") !=
          v.end());
  }
}

TEST_CASE("random networks satisfy every structural invariant") {
  std::mt19937_64 rng(2024);
  const CostModel model;
  for (int iter = 0; iter < 100; ++iter) {
    const auto cs = testing::random_cluster_set(rng);
    std::vector<std::vector<std::int64_t>> channels;
    for (const auto& grp : cs.groups) {
      std::vector<std::int64_t> c;
      for (Count i = 0; i < grp.slot_count(); ++i) c.push_back(8 * (1 + rng() % 64));
      channels.push_back(c);
    }
    const auto g = assemble_network(cs, channels, {}, iter);
    const auto v = validate_graph(g);
    CHECK_MESSAGE(v.empty(), (v.empty() ? "" : v.front()));

    // Every CONV -> BN -> RELU, nothing dangles.
    for (const auto& n : g.nodes) {
      if (n.op != OpKind::Conv) continue;
      const auto bn = successors(g, n.id);
      REQUIRE(bn.size() == 1);
      CHECK(g.find(bn[0])->op == OpKind::BatchNorm);
      const auto relu = successors(g, bn[0]);
      REQUIRE(relu.size() == 1);
      CHECK(g.find(relu[0])->op == OpKind::Relu);
    }
    const auto plan = plan_routes(cs);
    std::size_t consumed = 0;
    for (const auto& inc : plan.incoming) consumed += inc.size();
    std::size_t emitted = 0;
    for (const auto& grp : cs.groups) emitted += group_outputs(grp).size();
    CHECK(consumed == emitted);

    // Recomputed group costs match group_conv_shapes.
    const auto costs = graph_group_costs(g, model);
    for (std::size_t s = 0; s < cs.groups.size(); ++s) {
      const auto in = incoming_channels(plan, s, channels, 3);
      const auto shapes = group_conv_shapes(cs.groups[s], channels[s], in);
      CHECK(costs[s] == group_cost(std::span<const ConvShape>(shapes), model));
      CHECK(g.metadata.groups[s].achieved == costs[s]);
    }
  }
}

TEST_CASE("model JSON round trips and DOT lists every node") {
  const auto cs = classic_set();
  const auto g = assemble_network(cs, uniform_channels(cs, 24), {}, 77);
  const auto text = model_to_json(g);
  const auto back = model_from_json(text);
  CHECK(back == g);
  CHECK(model_to_json(back) == text);

  const auto dot = model_to_dot(g);
  std::size_t node_lines = 0;
  std::size_t pos = 0;
  while ((pos = dot.find("[label=", pos)) != std::string::npos) ++node_lines, ++pos;
  CHECK(node_lines == g.nodes.size());
  CHECK(dot.find("\"g1_conv1\" [label=\"CONV\\nk11s4 c24\"];") != std::string::npos);
  CHECK(dot.rfind("digraph model {", 0) == 0);

  CHECK_THROWS_AS(model_from_json("{}"), AssemblyError);
  CHECK_THROWS_AS(model_from_json(R"({"nodes":[{"id":"a","op":"WAT","out_h":1,"out_w":1,"out_channels":1}],"edges":[]})"),
                  AssemblyError);
}

TEST_CASE("canonical node order is topological with id tie-breaks") {
  const auto cs = classic_set();
  const auto g = assemble_network(cs, uniform_channels(cs, 8));
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) pos[g.nodes[i].id] = i;
  for (const auto& e : g.edges) CHECK(pos[e.src] < pos[e.dst]);
  CHECK(g.nodes.front().id == "input");
  CHECK(g.nodes.back().id == "head_softmax1");
}
