#include "cnnsynth/assembler.hpp"

#include <algorithm>
#include <map>
#include <json.hpp>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_map>

#include "cnnsynth/errors.hpp"

namespace cnnsynth {

using nlohmann::ordered_json;

std::vector<NodeSlot> expand_slots(const GroupSpec& group) {
  std::vector<NodeSlot> slots;
  for (const auto& bin : group.bins) {
    for (Count i = 0; i < bin.count; ++i) slots.push_back({bin.kernel, bin.stride});
  }
  return slots;
}

std::vector<ConvShape> group_conv_shapes(const GroupSpec& group,
                                         std::span<const std::int64_t> channels,
                                         std::int64_t in_channels) {
  const auto slots = expand_slots(group);
  if (channels.size() != slots.size()) {
    throw AssemblyError("group has " + std::to_string(slots.size()) + " slots but " +
                        std::to_string(channels.size()) + " channel counts");
  }
  std::vector<ConvShape> shapes;
  shapes.reserve(slots.size());
  std::int64_t chain_width = in_channels;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto& slot = slots[i];
    const bool chained = slot.stride == 1;
    shapes.push_back({group.center_h, group.center_w, chained ? chain_width : in_channels,
                      slot.kernel, slot.stride, channels[i]});
    if (chained) chain_width = channels[i];
  }
  return shapes;
}

std::vector<GroupOutput> group_outputs(const GroupSpec& group) {
  const auto slots = expand_slots(group);
  std::vector<GroupOutput> out;
  std::optional<std::size_t> tail;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].stride == 1) tail = i;
  }
  if (tail) out.push_back({*tail, group.center_h, group.center_w});
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].stride == 1) continue;
    out.push_back({i, output_size(group.center_h, slots[i].kernel, slots[i].stride),
                   output_size(group.center_w, slots[i].kernel, slots[i].stride)});
  }
  return out;
}

namespace {

std::string tensor_name(std::size_t group, const GroupOutput& o) {
  return "g" + std::to_string(group + 1) + "_relu" + std::to_string(o.slot + 1) + " (" +
         std::to_string(o.h) + "x" + std::to_string(o.w) + ")";
}

}  // namespace

RoutingPlan plan_routes(const ClusterSet& cs) {
  const std::size_t n = cs.groups.size();
  RoutingPlan plan;
  plan.incoming.resize(n + 1);
  for (std::size_t s = 0; s < n; ++s) {
    if (s > 0 && plan.incoming[s].empty()) {
      throw AssemblyError("group " + std::to_string(s + 1) + " receives no input tensors");
    }
    for (const auto& out : group_outputs(cs.groups[s])) {
      std::size_t dest = n;
      if (s + 1 < n) {
        auto fits = [&](std::size_t t) {
          return cs.groups[t].center_h <= out.h && cs.groups[t].center_w <= out.w;
        };
        auto exact = [&](std::size_t t) {
          return cs.groups[t].center_h == out.h && cs.groups[t].center_w == out.w;
        };
        std::optional<std::size_t> chosen;
        for (std::size_t t = s + 1; t < n && !chosen; ++t) {
          if (exact(t)) chosen = t;
        }
        for (std::size_t t = s + 1; t < n && !chosen; ++t) {
          if (fits(t)) chosen = t;
        }
        if (!chosen) {
          throw AssemblyError("cannot route tensor " + tensor_name(s, out) +
                              ": smaller than every remaining group center");
        }
        dest = *chosen;
      }
      plan.incoming[dest].push_back(plan.routes.size());
      plan.routes.push_back({s, out, dest});
    }
  }
  return plan;
}

std::int64_t incoming_channels(const RoutingPlan& plan, std::size_t group,
                               std::span<const std::vector<std::int64_t>> assignments,
                               std::int64_t image_channels) {
  if (group == 0) return image_channels;
  std::int64_t width = 0;
  for (auto r : plan.incoming.at(group)) {
    const auto& route = plan.routes[r];
    width += assignments[route.from_group].at(route.output.slot);
  }
  return width;
}

std::string_view op_name(OpKind op) {
  switch (op) {
    case OpKind::Input: return "INPUT";
    case OpKind::Conv: return "CONV";
    case OpKind::BatchNorm: return "BN";
    case OpKind::Relu: return "RELU";
    case OpKind::Concat: return "CA";
    case OpKind::Pool: return "PL";
    case OpKind::FullyConnected: return "FC";
    case OpKind::Softmax: return "SOFTMAX";
  }
  return "?";
}

std::optional<OpKind> op_from_name(std::string_view name) {
  for (auto op : {OpKind::Input, OpKind::Conv, OpKind::BatchNorm, OpKind::Relu, OpKind::Concat,
                  OpKind::Pool, OpKind::FullyConnected, OpKind::Softmax}) {
    if (op_name(op) == name) return op;
  }
  return std::nullopt;
}

const GraphNode* ModelGraph::find(std::string_view id) const {
  for (const auto& n : nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

namespace {

PoolParams pool_to(std::int64_t h, std::int64_t w, std::int64_t th, std::int64_t tw) {
  PoolParams p{th, tw, "adaptive_max", 0, 0};
  if (h % th == 0 && w % tw == 0 && h / th == w / tw) {
    p.mode = "max";
    p.kernel = p.stride = h / th;
  }
  return p;
}

// Appends a PL node when the tensor is not already at the target size.
TensorRef resize(const TensorRef& t, std::int64_t th, std::int64_t tw, const std::string& id,
                 std::vector<GraphNode>& nodes, std::vector<Edge>& edges) {
  if (t.h == th && t.w == tw) return t;
  nodes.push_back({id, OpKind::Pool, pool_to(t.h, t.w, th, tw), th, tw, t.channels});
  edges.push_back({t.node_id, id});
  return {id, th, tw, t.channels};
}

}  // namespace

GroupAssembly assemble_group(const GroupSpec& group, std::size_t group_number,
                             std::span<const std::int64_t> channels,
                             std::span<const TensorRef> incoming) {
  const auto slots = expand_slots(group);
  if (channels.size() != slots.size()) {
    throw AssemblyError("group " + std::to_string(group_number) + " has " +
                        std::to_string(slots.size()) + " slots but " +
                        std::to_string(channels.size()) + " channel counts");
  }
  if (incoming.empty()) {
    throw AssemblyError("group " + std::to_string(group_number) + " has no incoming tensors");
  }
  for (const auto& t : incoming) {
    if (t.h != incoming.front().h || t.w != incoming.front().w) {
      throw AssemblyError("cannot concat " + incoming.front().node_id + " (" +
                          std::to_string(incoming.front().h) + "x" +
                          std::to_string(incoming.front().w) + ") with " + t.node_id + " (" +
                          std::to_string(t.h) + "x" + std::to_string(t.w) + ")");
    }
  }

  const std::string prefix = "g" + std::to_string(group_number) + "_";
  GroupAssembly out;
  TensorRef input = incoming.front();
  if (incoming.size() > 1) {
    const std::string id = prefix + "ca1";
    std::int64_t width = 0;
    for (const auto& t : incoming) {
      width += t.channels;
      out.edges.push_back({t.node_id, id});
    }
    out.nodes.push_back({id, OpKind::Concat, std::monostate{}, input.h, input.w, width});
    input = {id, input.h, input.w, width};
  }

  auto conv_block = [&](std::size_t slot, const TensorRef& src) {
    const auto ord = std::to_string(slot + 1);
    const auto& ns = slots[slot];
    const auto oh = output_size(src.h, ns.kernel, ns.stride);
    const auto ow = output_size(src.w, ns.kernel, ns.stride);
    const auto c = channels[slot];
    const std::string conv = prefix + "conv" + ord, bn = prefix + "bn" + ord,
                      relu = prefix + "relu" + ord;
    out.nodes.push_back(
        {conv, OpKind::Conv, ConvParams{ns.kernel, ns.stride, src.channels, c}, oh, ow, c});
    out.nodes.push_back({bn, OpKind::BatchNorm, std::monostate{}, oh, ow, c});
    out.nodes.push_back({relu, OpKind::Relu, std::monostate{}, oh, ow, c});
    out.edges.push_back({src.node_id, conv});
    out.edges.push_back({conv, bn});
    out.edges.push_back({bn, relu});
    return TensorRef{relu, oh, ow, c};
  };

  std::optional<TensorRef> chain;
  std::vector<TensorRef> branches;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].stride == 1) {
      chain = conv_block(i, chain ? *chain : input);
    } else {
      branches.push_back(conv_block(i, input));
    }
  }
  if (chain) out.outgoing.push_back(*chain);
  out.outgoing.insert(out.outgoing.end(), branches.begin(), branches.end());
  return out;
}

ModelGraph assemble_network(const ClusterSet& cs,
                            std::span<const std::vector<std::int64_t>> assignments,
                            const AssemblerOptions& options, std::uint64_t seed) {
  validate_cluster_set(cs);
  if (assignments.size() != cs.groups.size()) {
    throw AssemblyError("expected channel assignments for " + std::to_string(cs.groups.size()) +
                        " groups, got " + std::to_string(assignments.size()));
  }
  if (options.num_classes <= 0 || options.image_channels <= 0) {
    throw AssemblyError("num_classes and image_channels must be positive");
  }
  const auto plan = plan_routes(cs);
  const std::size_t n = cs.groups.size();

  ModelGraph g;
  const auto& first = cs.groups.front();
  g.nodes.push_back({"input", OpKind::Input, std::monostate{}, first.center_h, first.center_w,
                     options.image_channels});

  std::vector<std::vector<TensorRef>> pending(n + 1);
  pending[0].push_back({"input", first.center_h, first.center_w, options.image_channels});

  for (std::size_t s = 0; s < n; ++s) {
    const auto& group = cs.groups[s];
    const std::string prefix = "g" + std::to_string(s + 1) + "_";
    std::vector<TensorRef> inputs;
    std::size_t pool_ord = 0;
    for (const auto& t : pending[s]) {
      inputs.push_back(resize(t, group.center_h, group.center_w,
                              prefix + "pl" + std::to_string(pool_ord + 1), g.nodes, g.edges));
      if (inputs.back().node_id != t.node_id) ++pool_ord;
    }
    auto assembled = assemble_group(group, s + 1, assignments[s], inputs);
    g.nodes.insert(g.nodes.end(), assembled.nodes.begin(), assembled.nodes.end());
    g.edges.insert(g.edges.end(), assembled.edges.begin(), assembled.edges.end());

    // plan_routes lists this group's routes in group_outputs order, which is
    // also the order of assembled.outgoing.
    std::size_t k = 0;
    for (const auto& route : plan.routes) {
      if (route.from_group != s) continue;
      pending[route.to_group].push_back(assembled.outgoing.at(k++));
    }
  }

  std::vector<TensorRef> pooled;
  for (const auto& t : pending[n]) {
    pooled.push_back(
        resize(t, 1, 1, "head_pl" + std::to_string(pooled.size() + 1), g.nodes, g.edges));
  }
  TensorRef features = pooled.front();
  if (pooled.size() > 1) {
    std::int64_t width = 0;
    for (const auto& t : pooled) {
      width += t.channels;
      g.edges.push_back({t.node_id, "head_ca1"});
    }
    g.nodes.push_back({"head_ca1", OpKind::Concat, std::monostate{}, 1, 1, width});
    features = {"head_ca1", 1, 1, width};
  }
  g.nodes.push_back({"head_fc1", OpKind::FullyConnected,
                     FcParams{features.channels, options.num_classes}, 1, 1,
                     options.num_classes});
  g.edges.push_back({features.node_id, "head_fc1"});
  g.nodes.push_back(
      {"head_softmax1", OpKind::Softmax, std::monostate{}, 1, 1, options.num_classes});
  g.edges.push_back({"head_fc1", "head_softmax1"});

  g.metadata.cost_model_id = cs.cost_model_id;
  g.metadata.seed = seed;
  const auto costs = graph_group_costs(g, CostModel(cs.cost_model_id));
  for (std::size_t s = 0; s < n; ++s) {
    g.metadata.groups.push_back(
        {cs.groups[s].center_h, cs.groups[s].center_w, cs.groups[s].bins, costs[s]});
  }
  canonicalize(g);
  return g;
}

std::optional<std::size_t> group_of(std::string_view id) {
  if (id.size() < 3 || id[0] != 'g') return std::nullopt;
  std::size_t value = 0, i = 1;
  for (; i < id.size() && id[i] >= '0' && id[i] <= '9'; ++i) {
    value = value * 10 + static_cast<std::size_t>(id[i] - '0');
  }
  if (i == 1 || i >= id.size() || id[i] != '_' || value == 0) return std::nullopt;
  return value;
}

namespace {

// Upstream node ids keyed by destination.
std::unordered_map<std::string, std::vector<std::string>> predecessors(const ModelGraph& g) {
  std::unordered_map<std::string, std::vector<std::string>> preds;
  for (const auto& e : g.edges) preds[e.dst].push_back(e.src);
  return preds;
}

}  // namespace

std::vector<CostVector> graph_group_costs(const ModelGraph& g, const CostModel& model) {
  const auto preds = predecessors(g);
  std::map<std::size_t, CostVector> by_group;
  std::size_t max_group = 0;
  for (const auto& node : g.nodes) {
    if (node.op != OpKind::Conv) continue;
    const auto group = group_of(node.id);
    if (!group) throw AssemblyError("CONV node " + node.id + " has no group prefix");
    const auto it = preds.find(node.id);
    if (it == preds.end() || it->second.size() != 1) {
      throw AssemblyError("CONV node " + node.id + " must have exactly one input");
    }
    const auto* src = g.find(it->second.front());
    if (src == nullptr) throw AssemblyError("CONV node " + node.id + " has a dangling input");
    const auto& p = std::get<ConvParams>(node.params);
    by_group[*group] += model.cost({src->out_h, src->out_w, p.in_channels, p.kernel, p.stride,
                                    p.out_channels});
    max_group = std::max(max_group, *group);
  }
  max_group = std::max(max_group, g.metadata.groups.size());
  std::vector<CostVector> out(max_group);
  for (const auto& [group, cost] : by_group) out[group - 1] = cost;
  return out;
}

std::vector<std::string> validate_graph(const ModelGraph& g) {
  std::vector<std::string> v;
  std::unordered_map<std::string, const GraphNode*> by_id;
  for (const auto& n : g.nodes) {
    if (!by_id.emplace(n.id, &n).second) v.push_back("duplicate node id " + n.id);
  }

  std::unordered_map<std::string, std::vector<const GraphNode*>> preds, succs;
  for (const auto& e : g.edges) {
    const bool src_ok = by_id.count(e.src) != 0, dst_ok = by_id.count(e.dst) != 0;
    if (!src_ok || !dst_ok) {
      v.push_back("dangling edge " + e.src + " -> " + e.dst + ": unknown node " +
                  (src_ok ? e.dst : e.src));
      continue;
    }
    preds[e.dst].push_back(by_id[e.src]);
    succs[e.src].push_back(by_id[e.dst]);
  }

  const GraphNode* input = nullptr;
  const GraphNode* sink = nullptr;
  std::size_t inputs = 0, sinks = 0;
  for (const auto& n : g.nodes) {
    if (n.op == OpKind::Input) ++inputs, input = &n;
    if (n.op == OpKind::Softmax) ++sinks, sink = &n;
  }
  if (inputs != 1) v.push_back("expected exactly one INPUT node, found " + std::to_string(inputs));
  if (sinks != 1) v.push_back("expected exactly one SOFTMAX node, found " + std::to_string(sinks));

  // Cycle check (Kahn).
  {
    std::unordered_map<std::string, std::size_t> indeg;
    for (const auto& n : g.nodes) indeg[n.id] = preds[n.id].size();
    std::vector<std::string> ready;
    for (const auto& [id, d] : indeg) {
      if (d == 0) ready.push_back(id);
    }
    std::size_t visited = 0;
    while (!ready.empty()) {
      const auto id = ready.back();
      ready.pop_back();
      ++visited;
      for (const auto* s : succs[id]) {
        if (--indeg[s->id] == 0) ready.push_back(s->id);
      }
    }
    if (visited != by_id.size()) v.push_back("graph contains a cycle");
  }

  auto reach = [&](const GraphNode* start, auto& adjacency) {
    std::set<std::string> seen;
    if (start == nullptr) return seen;
    std::vector<const GraphNode*> stack{start};
    seen.insert(start->id);
    while (!stack.empty()) {
      const auto* n = stack.back();
      stack.pop_back();
      for (const auto* m : adjacency[n->id]) {
        if (seen.insert(m->id).second) stack.push_back(m);
      }
    }
    return seen;
  };
  if (inputs == 1 && sinks == 1) {
    const auto forward = reach(input, succs);
    const auto backward = reach(sink, preds);
    for (const auto& n : g.nodes) {
      if (!forward.count(n.id)) v.push_back("node " + n.id + " is not reachable from INPUT");
      if (!backward.count(n.id)) v.push_back("node " + n.id + " does not reach SOFTMAX");
    }
  }

  auto dims = [](const GraphNode& n) {
    return std::to_string(n.out_h) + "x" + std::to_string(n.out_w) + "x" +
           std::to_string(n.out_channels);
  };
  for (const auto& n : g.nodes) {
    const auto& in = preds[n.id];
    const std::string name = std::string(op_name(n.op)) + " " + n.id;
    if (n.op == OpKind::Input) {
      if (!in.empty()) v.push_back(name + " has inputs");
      continue;
    }
    if (n.op == OpKind::Concat) {
      if (in.size() < 2) {
        v.push_back(name + " has " + std::to_string(in.size()) + " inputs, needs at least 2");
        continue;
      }
      std::int64_t width = 0;
      bool same = true;
      for (const auto* p : in) {
        width += p->out_channels;
        same = same && p->out_h == in.front()->out_h && p->out_w == in.front()->out_w;
      }
      if (!same) v.push_back(name + " concatenates inputs of different spatial size");
      if (n.out_channels != width || n.out_h != in.front()->out_h || n.out_w != in.front()->out_w) {
        v.push_back(name + " geometry " + dims(n) + " does not match its inputs");
      }
      continue;
    }
    if (in.size() != 1) {
      v.push_back(name + " has " + std::to_string(in.size()) + " inputs, expected 1");
      continue;
    }
    const auto& up = *in.front();
    switch (n.op) {
      case OpKind::Conv: {
        const auto* p = std::get_if<ConvParams>(&n.params);
        if (p == nullptr) {
          v.push_back(name + " lacks conv params");
          break;
        }
        if (p->kernel <= 0 || p->stride <= 0 || p->out_channels <= 0) {
          v.push_back(name + " has non-positive conv params");
          break;
        }
        if (p->in_channels != up.out_channels) {
          v.push_back(name + " in_channels " + std::to_string(p->in_channels) +
                      " != upstream " + up.id + " width " + std::to_string(up.out_channels));
        }
        if (n.out_h != output_size(up.out_h, p->kernel, p->stride) ||
            n.out_w != output_size(up.out_w, p->kernel, p->stride) ||
            n.out_channels != p->out_channels) {
          v.push_back(name + " output geometry " + dims(n) + " inconsistent with input " +
                      dims(up));
        }
        const auto& next = succs[n.id];
        if (next.size() != 1 || next.front()->op != OpKind::BatchNorm) {
          v.push_back(name + " must be followed by exactly one BN");
        } else {
          const auto& after = succs[next.front()->id];
          if (after.size() != 1 || after.front()->op != OpKind::Relu) {
            v.push_back("BN " + next.front()->id + " must be followed by exactly one RELU");
          }
        }
        break;
      }
      case OpKind::Pool: {
        const auto* p = std::get_if<PoolParams>(&n.params);
        if (p == nullptr) {
          v.push_back(name + " lacks pool params");
          break;
        }
        if (p->target_h <= 0 || p->target_w <= 0 || p->target_h > up.out_h ||
            p->target_w > up.out_w) {
          v.push_back(name + " cannot pool " + dims(up) + " to " + std::to_string(p->target_h) +
                      "x" + std::to_string(p->target_w));
        }
        if (p->mode == "max") {
          if (p->kernel <= 0 || p->kernel != p->stride || p->kernel * p->target_h != up.out_h ||
              p->kernel * p->target_w != up.out_w) {
            v.push_back(name + " max-pool window does not tile its input");
          }
        } else if (p->mode != "adaptive_max") {
          v.push_back(name + " has unknown pool mode '" + p->mode + "'");
        }
        if (n.out_h != p->target_h || n.out_w != p->target_w ||
            n.out_channels != up.out_channels) {
          v.push_back(name + " geometry " + dims(n) + " inconsistent with pooling " + dims(up));
        }
        break;
      }
      case OpKind::FullyConnected: {
        const auto* p = std::get_if<FcParams>(&n.params);
        if (p == nullptr) {
          v.push_back(name + " lacks fc params");
          break;
        }
        if (p->in_features != up.out_h * up.out_w * up.out_channels) {
          v.push_back(name + " in_features " + std::to_string(p->in_features) +
                      " != upstream " + up.id + " size " +
                      std::to_string(up.out_h * up.out_w * up.out_channels));
        }
        if (n.out_h != 1 || n.out_w != 1 || n.out_channels != p->out_features) {
          v.push_back(name + " geometry " + dims(n) + " inconsistent with out_features");
        }
        break;
      }
      default:
        if (n.out_h != up.out_h || n.out_w != up.out_w || n.out_channels != up.out_channels) {
          v.push_back(name + " geometry " + dims(n) + " differs from upstream " + up.id + " " +
                      dims(up));
        }
        break;
    }
  }

  // Conv (kernel, stride) multiset per group against the recorded bins.
  std::map<std::size_t, std::map<std::pair<std::int64_t, std::int64_t>, Count>> seen;
  for (const auto& n : g.nodes) {
    if (n.op != OpKind::Conv) continue;
    const auto group = group_of(n.id);
    const auto* p = std::get_if<ConvParams>(&n.params);
    if (!group) {
      v.push_back("CONV " + n.id + " has no group prefix");
      continue;
    }
    if (p != nullptr) ++seen[*group][{p->kernel, p->stride}];
  }
  for (std::size_t i = 0; i < g.metadata.groups.size(); ++i) {
    std::map<std::pair<std::int64_t, std::int64_t>, Count> expected;
    for (const auto& b : g.metadata.groups[i].bins) expected[{b.kernel, b.stride}] += b.count;
    const auto it = seen.find(i + 1);
    const auto actual = it == seen.end() ? decltype(expected){} : it->second;
    if (actual != expected) v.push_back("bin multiset mismatch, group " + std::to_string(i + 1));
  }
  for (const auto& [group, bins] : seen) {
    if (group > g.metadata.groups.size()) {
      v.push_back("CONV nodes in group " + std::to_string(group) + " absent from metadata");
    }
  }
  return v;
}

void canonicalize(ModelGraph& g) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (!index.emplace(g.nodes[i].id, i).second) {
      throw AssemblyError("duplicate node id " + g.nodes[i].id);
    }
  }
  std::map<std::string, std::vector<std::string>> succs;
  std::map<std::string, std::size_t> indeg;
  for (const auto& [id, i] : index) indeg[id] = 0;
  for (const auto& e : g.edges) {
    if (!index.count(e.src) || !index.count(e.dst)) {
      throw AssemblyError("dangling edge " + e.src + " -> " + e.dst);
    }
    succs[e.src].push_back(e.dst);
    ++indeg[e.dst];
  }
  std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
  for (const auto& [id, d] : indeg) {
    if (d == 0) ready.push(id);
  }
  std::vector<GraphNode> ordered;
  std::map<std::string, std::size_t> position;
  while (!ready.empty()) {
    const auto id = ready.top();
    ready.pop();
    position[id] = ordered.size();
    ordered.push_back(g.nodes[index[id]]);
    for (const auto& s : succs[id]) {
      if (--indeg[s] == 0) ready.push(s);
    }
  }
  if (ordered.size() != g.nodes.size()) throw AssemblyError("graph contains a cycle");
  g.nodes = std::move(ordered);
  std::sort(g.edges.begin(), g.edges.end(), [&](const Edge& a, const Edge& b) {
    return std::make_pair(position[a.src], position[a.dst]) <
           std::make_pair(position[b.src], position[b.dst]);
  });
}

namespace {

ordered_json params_to_json(const NodeParams& params) {
  ordered_json j = ordered_json::object();
  if (const auto* c = std::get_if<ConvParams>(&params)) {
    j["kernel"] = c->kernel;
    j["stride"] = c->stride;
    j["in_channels"] = c->in_channels;
    j["out_channels"] = c->out_channels;
  } else if (const auto* p = std::get_if<PoolParams>(&params)) {
    j["target_h"] = p->target_h;
    j["target_w"] = p->target_w;
    j["mode"] = p->mode;
    if (p->mode == "max") {
      j["kernel"] = p->kernel;
      j["stride"] = p->stride;
    }
  } else if (const auto* f = std::get_if<FcParams>(&params)) {
    j["in_features"] = f->in_features;
    j["out_features"] = f->out_features;
  }
  return j;
}

std::int64_t json_int(const ordered_json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_number_integer()) {
    throw AssemblyError(where + ": missing integer '" + key + "'");
  }
  return j.at(key).get<std::int64_t>();
}

Count json_count(const ordered_json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_number_unsigned()) {
    throw AssemblyError(where + ": missing non-negative integer '" + key + "'");
  }
  return j.at(key).get<Count>();
}

NodeParams params_from_json(OpKind op, const ordered_json& j, const std::string& where) {
  switch (op) {
    case OpKind::Conv:
      return ConvParams{json_int(j, "kernel", where), json_int(j, "stride", where),
                        json_int(j, "in_channels", where), json_int(j, "out_channels", where)};
    case OpKind::Pool: {
      PoolParams p{json_int(j, "target_h", where), json_int(j, "target_w", where),
                   j.value("mode", std::string()), 0, 0};
      if (p.mode == "max") {
        p.kernel = json_int(j, "kernel", where);
        p.stride = json_int(j, "stride", where);
      }
      return p;
    }
    case OpKind::FullyConnected:
      return FcParams{json_int(j, "in_features", where), json_int(j, "out_features", where)};
    default:
      return std::monostate{};
  }
}

}  // namespace

std::string model_to_json(const ModelGraph& g) {
  ordered_json doc;
  doc["nodes"] = ordered_json::array();
  for (const auto& n : g.nodes) {
    ordered_json jn;
    jn["id"] = n.id;
    jn["op"] = op_name(n.op);
    jn["params"] = params_to_json(n.params);
    jn["out_h"] = n.out_h;
    jn["out_w"] = n.out_w;
    jn["out_channels"] = n.out_channels;
    doc["nodes"].push_back(std::move(jn));
  }
  doc["edges"] = ordered_json::array();
  for (const auto& e : g.edges) doc["edges"].push_back({e.src, e.dst});
  auto& meta = doc["metadata"];
  meta["cost_model_id"] = g.metadata.cost_model_id;
  meta["seed"] = g.metadata.seed;
  meta["groups"] = ordered_json::array();
  for (const auto& grp : g.metadata.groups) {
    ordered_json jg;
    jg["center_h"] = grp.center_h;
    jg["center_w"] = grp.center_w;
    jg["bins"] = ordered_json::array();
    for (const auto& b : grp.bins) {
      ordered_json jb;
      jb["kernel"] = b.kernel;
      jb["stride"] = b.stride;
      jb["count"] = b.count;
      jg["bins"].push_back(std::move(jb));
    }
    jg["achieved"]["mac"] = grp.achieved.mac;
    jg["achieved"]["wp"] = grp.achieved.wp;
    meta["groups"].push_back(std::move(jg));
  }
  return doc.dump(2) + "\n";
}

ModelGraph model_from_json(std::string_view text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw AssemblyError(std::string("model is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array() ||
      !doc.contains("edges") || !doc["edges"].is_array()) {
    throw AssemblyError("model must be an object with 'nodes' and 'edges' arrays");
  }
  ModelGraph g;
  for (const auto& jn : doc["nodes"]) {
    if (!jn.is_object() || !jn.contains("id") || !jn["id"].is_string() || !jn.contains("op") ||
        !jn["op"].is_string()) {
      throw AssemblyError("model node lacks string 'id' or 'op'");
    }
    const auto id = jn["id"].get<std::string>();
    const auto op = op_from_name(jn["op"].get<std::string>());
    if (!op) throw AssemblyError("node " + id + ": unknown op '" + jn["op"].get<std::string>() + "'");
    const std::string where = "node " + id;
    g.nodes.push_back({id, *op,
                       params_from_json(*op, jn.value("params", ordered_json::object()), where),
                       json_int(jn, "out_h", where), json_int(jn, "out_w", where),
                       json_int(jn, "out_channels", where)});
  }
  for (const auto& je : doc["edges"]) {
    if (!je.is_array() || je.size() != 2 || !je[0].is_string() || !je[1].is_string()) {
      throw AssemblyError("model edge must be a [src, dst] pair of strings");
    }
    g.edges.push_back({je[0].get<std::string>(), je[1].get<std::string>()});
  }
  if (doc.contains("metadata")) {
    const auto& meta = doc["metadata"];
    g.metadata.cost_model_id = meta.value("cost_model_id", std::string());
    g.metadata.seed = meta.contains("seed") ? json_count(meta, "seed", "metadata") : 0;
    for (const auto& jg : meta.value("groups", ordered_json::array())) {
      GroupMetadata grp;
      grp.center_h = json_int(jg, "center_h", "metadata group");
      grp.center_w = json_int(jg, "center_w", "metadata group");
      for (const auto& jb : jg.value("bins", ordered_json::array())) {
        grp.bins.push_back({json_int(jb, "kernel", "metadata bin"),
                            json_int(jb, "stride", "metadata bin"),
                            json_count(jb, "count", "metadata bin")});
      }
      const auto achieved = jg.value("achieved", ordered_json::object());
      grp.achieved = {json_count(achieved, "mac", "metadata achieved"),
                      json_count(achieved, "wp", "metadata achieved")};
      g.metadata.groups.push_back(std::move(grp));
    }
  }
  return g;
}

std::string model_to_dot(const ModelGraph& g) {
  std::ostringstream out;
  out << "digraph model {\n";
  for (const auto& n : g.nodes) {
    out << "  \"" << n.id << "\" [label=\"" << op_name(n.op);
    if (const auto* c = std::get_if<ConvParams>(&n.params)) {
      out << "\\nk" << c->kernel << "s" << c->stride << " c" << c->out_channels;
    }
    out << "\"];\n";
  }
  for (const auto& e : g.edges) out << "  \"" << e.src << "\" -> \"" << e.dst << "\";\n";
  out << "}\n";
  return out.str();
}

}  // namespace cnnsynth
