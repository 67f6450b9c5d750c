#include "cnnsynth/costmodel.hpp"

#include <string>

#include "cnnsynth/errors.hpp"

namespace cnnsynth {

Count checked_mul(Count a, Count b) {
  Count out = 0;
  if (__builtin_mul_overflow(a, b, &out)) {
    throw CostError("cost overflow: " + std::to_string(a) + " * " + std::to_string(b) +
                    " exceeds 64-bit range");
  }
  return out;
}

Count checked_add(Count a, Count b) {
  Count out = 0;
  if (__builtin_add_overflow(a, b, &out)) {
    throw CostError("cost overflow: " + std::to_string(a) + " + " + std::to_string(b) +
                    " exceeds 64-bit range");
  }
  return out;
}

CostVector& CostVector::operator+=(const CostVector& other) {
  mac = checked_add(mac, other.mac);
  wp = checked_add(wp, other.wp);
  return *this;
}

CostVector scale(const CostVector& cost, Count factor) {
  return {checked_mul(cost.mac, factor), checked_mul(cost.wp, factor)};
}

std::int64_t output_size(std::int64_t in_size, std::int64_t kernel, std::int64_t stride) {
  if (in_size <= 0 || kernel <= 0 || stride <= 0) {
    throw CostError("output_size: in_size, kernel and stride must be positive");
  }
  return (in_size + stride - 1) / stride;
}

void validate_shape(const ConvShape& s) {
  auto positive = [](std::int64_t v, const char* name) {
    if (v <= 0) throw CostError(std::string("conv shape: ") + name + " must be positive");
  };
  positive(s.in_h, "in_h");
  positive(s.in_w, "in_w");
  positive(s.in_channels, "in_channels");
  positive(s.kernel, "kernel");
  positive(s.stride, "stride");
  positive(s.out_channels, "out_channels");
}

namespace {

Count output_threads(const ConvShape& s) {
  const auto oh = static_cast<Count>(output_size(s.in_h, s.kernel, s.stride));
  const auto ow = static_cast<Count>(output_size(s.in_w, s.kernel, s.stride));
  return checked_mul(checked_mul(oh, ow), static_cast<Count>(s.out_channels));
}

}  // namespace

Count conv_macs(const ConvShape& s) {
  validate_shape(s);
  const auto k = static_cast<Count>(s.kernel);
  return checked_mul(checked_mul(output_threads(s), checked_mul(k, k)),
                     static_cast<Count>(s.in_channels));
}

Count OutputThreadWarps::warps(const ConvShape& s) const {
  validate_shape(s);
  const Count threads = output_threads(s);
  return threads / kThreadsPerWarp + (threads % kThreadsPerWarp != 0 ? 1 : 0);
}

std::vector<std::string> known_warp_models() { return {std::string(kDefaultWarpModel)}; }

CostModel::CostModel(std::string_view warp_model_id) : id_(warp_model_id) {
  if (warp_model_id == kDefaultWarpModel) {
    estimator_ = std::make_shared<OutputThreadWarps>();
  } else {
    throw CostError("unknown warp model '" + id_ + "'");
  }
}

Count CostModel::warps(const ConvShape& shape) const { return estimator_->warps(shape); }

CostVector CostModel::cost(const ConvShape& shape) const {
  return {conv_macs(shape), estimator_->warps(shape)};
}

Count conv_warps(const ConvShape& shape, std::string_view model_id) {
  return CostModel(model_id).warps(shape);
}

CostVector group_cost(std::span<const WeightedShape> nodes, const CostModel& model) {
  CostVector total;
  for (const auto& node : nodes) total += scale(model.cost(node.shape), node.count);
  return total;
}

CostVector group_cost(std::span<const ConvShape> nodes, const CostModel& model) {
  CostVector total;
  for (const auto& shape : nodes) total += model.cost(shape);
  return total;
}

}  // namespace cnnsynth
