#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cnnsynth/clustering.hpp"
#include "cnnsynth/costmodel.hpp"

namespace cnnsynth {

// One conv node position inside a group, expanded from the bins.
struct NodeSlot {
  std::int64_t kernel = 0;
  std::int64_t stride = 0;
  friend bool operator==(const NodeSlot&, const NodeSlot&) = default;
};

// Bin order, a bin of count n contributing n consecutive slots.
std::vector<NodeSlot> expand_slots(const GroupSpec& group);

// Conv shapes of a group in slot order. Stride-1 slots form a chain fed by
// the group input; stride>1 slots read the group input directly.
std::vector<ConvShape> group_conv_shapes(const GroupSpec& group,
                                         std::span<const std::int64_t> channels,
                                         std::int64_t in_channels);

// A tensor leaving a group: the chain tail and every branch head.
struct GroupOutput {
  std::size_t slot = 0;
  std::int64_t h = 0;
  std::int64_t w = 0;
};
std::vector<GroupOutput> group_outputs(const GroupSpec& group);

struct Route {
  std::size_t from_group = 0;
  GroupOutput output;
  std::size_t to_group = 0;  // == number of groups for the classifier head
};

struct RoutingPlan {
  std::vector<Route> routes;
  // Route indices arriving at each group, plus one trailing entry for the head.
  std::vector<std::vector<std::size_t>> incoming;
};

// Sends each group output to the nearest downstream group whose center fits
// inside it; outputs of the last group go to the head. Throws AssemblyError
// for an unroutable tensor or a group left without input.
RoutingPlan plan_routes(const ClusterSet& cs);

// Channel width entering `group`: image channels for the first group, else
// the concatenated widths routed to it.
std::int64_t incoming_channels(const RoutingPlan& plan, std::size_t group,
                               std::span<const std::vector<std::int64_t>> assignments,
                               std::int64_t image_channels);

enum class OpKind { Input, Conv, BatchNorm, Relu, Concat, Pool, FullyConnected, Softmax };

std::string_view op_name(OpKind op);
std::optional<OpKind> op_from_name(std::string_view name);

struct ConvParams {
  std::int64_t kernel = 0;
  std::int64_t stride = 0;
  std::int64_t in_channels = 0;
  std::int64_t out_channels = 0;
  friend bool operator==(const ConvParams&, const ConvParams&) = default;
};

struct PoolParams {
  std::int64_t target_h = 0;
  std::int64_t target_w = 0;
  std::string mode;  // "max" (kernel == stride) or "adaptive_max"
  std::int64_t kernel = 0;
  std::int64_t stride = 0;
  friend bool operator==(const PoolParams&, const PoolParams&) = default;
};

struct FcParams {
  std::int64_t in_features = 0;
  std::int64_t out_features = 0;
  friend bool operator==(const FcParams&, const FcParams&) = default;
};

using NodeParams = std::variant<std::monostate, ConvParams, PoolParams, FcParams>;

struct GraphNode {
  std::string id;
  OpKind op = OpKind::Input;
  NodeParams params;
  std::int64_t out_h = 0;
  std::int64_t out_w = 0;
  std::int64_t out_channels = 0;
  friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

struct Edge {
  std::string src;
  std::string dst;
  friend bool operator==(const Edge&, const Edge&) = default;
};

struct GroupMetadata {
  std::int64_t center_h = 0;
  std::int64_t center_w = 0;
  std::vector<FilterBin> bins;
  CostVector achieved;
  friend bool operator==(const GroupMetadata&, const GroupMetadata&) = default;
};

struct ModelMetadata {
  std::string cost_model_id;
  std::uint64_t seed = 0;
  std::vector<GroupMetadata> groups;
  friend bool operator==(const ModelMetadata&, const ModelMetadata&) = default;
};

struct ModelGraph {
  std::vector<GraphNode> nodes;
  std::vector<Edge> edges;
  ModelMetadata metadata;

  const GraphNode* find(std::string_view id) const;
  friend bool operator==(const ModelGraph&, const ModelGraph&) = default;
};

// Tensor handle used while wiring.
struct TensorRef {
  std::string node_id;
  std::int64_t h = 0;
  std::int64_t w = 0;
  std::int64_t channels = 0;
};

struct GroupAssembly {
  std::vector<GraphNode> nodes;
  std::vector<Edge> edges;
  std::vector<TensorRef> outgoing;  // chain tail first, then branches in slot order
};

// `group_number` is 1-based and only used for node ids.
GroupAssembly assemble_group(const GroupSpec& group, std::size_t group_number,
                             std::span<const std::int64_t> channels,
                             std::span<const TensorRef> incoming);

struct AssemblerOptions {
  std::int64_t num_classes = 1000;
  std::int64_t image_channels = 3;
};

ModelGraph assemble_network(const ClusterSet& cs,
                            std::span<const std::vector<std::int64_t>> assignments,
                            const AssemblerOptions& options = {}, std::uint64_t seed = 0);

// Group number encoded in a node id ("g3_conv2" -> 3), if any.
std::optional<std::size_t> group_of(std::string_view node_id);

// Per-group cost of the CONV nodes, read back from graph geometry.
std::vector<CostVector> graph_group_costs(const ModelGraph& g, const CostModel& model);

// Empty when the graph is well formed.
std::vector<std::string> validate_graph(const ModelGraph& g);

// Reorders nodes topologically (ties by id) and edges by endpoint order.
// Throws AssemblyError on a cycle or a dangling edge.
void canonicalize(ModelGraph& g);

std::string model_to_json(const ModelGraph& g);
ModelGraph model_from_json(std::string_view text);
std::string model_to_dot(const ModelGraph& g);

}  // namespace cnnsynth
