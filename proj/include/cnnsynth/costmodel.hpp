#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cnnsynth {

using Count = std::uint64_t;

inline constexpr std::string_view kDefaultWarpModel = "output-thread-v1";
inline constexpr Count kThreadsPerWarp = 32;

// Geometry of one convolution. Square filters; "same" padding.
struct ConvShape {
  std::int64_t in_h = 0;
  std::int64_t in_w = 0;
  std::int64_t in_channels = 0;
  std::int64_t kernel = 0;
  std::int64_t stride = 0;
  std::int64_t out_channels = 0;

  friend bool operator==(const ConvShape&, const ConvShape&) = default;
};

// Exact (MAC, launched warp) pair. Addition rejects overflow.
struct CostVector {
  Count mac = 0;
  Count wp = 0;

  CostVector& operator+=(const CostVector& other);
  friend CostVector operator+(CostVector a, const CostVector& b) { return a += b; }
  friend bool operator==(const CostVector&, const CostVector&) = default;
};

// A conv shape occurring `count` times.
struct WeightedShape {
  ConvShape shape;
  Count count = 1;
};

Count checked_mul(Count a, Count b);
Count checked_add(Count a, Count b);
CostVector scale(const CostVector& cost, Count factor);

// ceil(in_size / stride). Kernel does not enter under same padding.
std::int64_t output_size(std::int64_t in_size, std::int64_t kernel, std::int64_t stride);

// Throws CostError describing the first violated field.
void validate_shape(const ConvShape& shape);

Count conv_macs(const ConvShape& shape);

// Estimates launched warps for one convolution kernel launch.
class WarpEstimator {
 public:
  virtual ~WarpEstimator() = default;
  virtual std::string_view id() const = 0;
  virtual Count warps(const ConvShape& shape) const = 0;
};

// One thread per output element, 32 threads per warp.
class OutputThreadWarps final : public WarpEstimator {
 public:
  std::string_view id() const override { return kDefaultWarpModel; }
  Count warps(const ConvShape& shape) const override;
};

std::vector<std::string> known_warp_models();

// Value handle over a warp estimator; cheap to copy and safe to share.
class CostModel {
 public:
  // Throws CostError for an unknown id.
  explicit CostModel(std::string_view warp_model_id = kDefaultWarpModel);

  const std::string& id() const { return id_; }
  Count warps(const ConvShape& shape) const;
  CostVector cost(const ConvShape& shape) const;

 private:
  std::string id_;
  std::shared_ptr<const WarpEstimator> estimator_;
};

Count conv_warps(const ConvShape& shape, std::string_view model_id = kDefaultWarpModel);

CostVector group_cost(std::span<const WeightedShape> nodes, const CostModel& model);
CostVector group_cost(std::span<const ConvShape> nodes, const CostModel& model);

}  // namespace cnnsynth
