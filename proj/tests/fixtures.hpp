#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "cnnsynth/assembler.hpp"
#include "cnnsynth/clustering.hpp"
#include "cnnsynth/costmodel.hpp"
#include "cnnsynth/synthesis.hpp"
#include "cnnsynth/trace.hpp"

namespace cnnsynth::testing {

// Group centers and (kernel, stride, count) rows of the classic-network mix.
struct TableGroup {
  std::int64_t center;
  std::vector<FilterBin> bins;
};

inline std::vector<TableGroup> classic_groups() {
  return {
      {224, {{11, 4, 1}, {7, 2, 1}, {3, 1, 2}}},
      {112, {{3, 1, 2}}},
      {56, {{3, 1, 4}, {1, 1, 1}}},
      {28, {{5, 1, 4}, {3, 1, 5}, {1, 1, 8}}},
      {14, {{5, 1, 3}, {3, 1, 13}, {1, 1, 22}}},
      {7, {{3, 1, 2}, {1, 1, 10}}},
  };
}

// MAC / warp pairs of the 3-model and synthetic columns, and the error column.
struct CostRow {
  Count mac_real, wp_real, mac_syn, wp_syn;
  double error_percent;
};

inline std::vector<CostRow> classic_costs() {
  return {
      {2156022912ULL, 2802996, 2156050176ULL, 2803928, 0.02},
      {2774532096ULL, 2792888, 2774419200ULL, 2859720, 1.19},
      {4983881728ULL, 3184980, 4986729216ULL, 3184876, 0.03},
      {5280485376ULL, 2221154, 5280615536ULL, 2221030, 0.00},
      {2199505920ULL, 2789028, 2199066688ULL, 2788961, 0.01},
      {109734912ULL, 885229, 109735598ULL, 885337, 0.00},
  };
}

inline std::vector<CostRow> platform_costs() {
  return {
      {3728928152ULL, 7139725, 3729030144ULL, 7277052, 0.96},
      {6129559271ULL, 11169027, 6129236736ULL, 11165590, 0.01},
      {14495976374ULL, 9817393, 14500048640ULL, 9813450, 0.03},
      {11699424510ULL, 4706169, 11699536710ULL, 4708200, 0.02},
      {3330293660ULL, 3374419, 3330837398ULL, 3374523, 0.00},
      {258530570ULL, 575312, 258472240ULL, 573424, 0.17},
  };
}

// A trace whose records realize classic_groups() bins; channels come from `rng`.
inline Trace trace_from_classic_groups(std::mt19937_64& rng) {
  Trace t;
  t.source_label = "classic_groups";
  std::uniform_int_distribution<std::int64_t> ch(1, 512);
  for (const auto& g : classic_groups()) {
    for (const auto& b : g.bins) {
      // Split each bin into up to two records to exercise count aggregation.
      Count remaining = b.count;
      while (remaining > 0) {
        const Count take = remaining > 1 ? remaining / 2 : 1;
        t.records.push_back({g.center, g.center, ch(rng), b.kernel, b.stride, ch(rng), take});
        remaining -= take;
      }
    }
  }
  return t;
}

// Random routable ClusterSet: square centers, every non-final group has a
// stride-1 slot, and branch outputs are never smaller than the last center.
inline ClusterSet random_cluster_set(std::mt19937_64& rng, std::size_t max_groups = 6,
                                     Count max_bin_count = 4) {
  static const std::vector<std::int64_t> sizes = {224, 112, 64, 56, 28, 17, 14, 8, 7, 5, 3, 1};
  std::uniform_int_distribution<std::size_t> ngroups(1, max_groups);
  const std::size_t n = ngroups(rng);
  std::vector<std::int64_t> centers = sizes;
  std::shuffle(centers.begin(), centers.end(), rng);
  centers.resize(n);
  std::sort(centers.begin(), centers.end(), std::greater<>());

  ClusterSet cs;
  cs.cost_model_id = std::string(kDefaultWarpModel);
  const std::int64_t last = centers.back();
  for (std::size_t s = 0; s < n; ++s) {
    const std::int64_t c = centers[s];
    std::map<std::pair<std::int64_t, std::int64_t>, Count, std::greater<>> bins;
    std::uniform_int_distribution<int> nbins(1, 4);
    std::uniform_int_distribution<Count> count(1, max_bin_count);
    const std::vector<std::int64_t> kernels = {1, 3, 5, 7, 11};
    const std::vector<std::int64_t> strides = {1, 1, 2, 4};
    const int want = nbins(rng);
    for (int b = 0; b < want; ++b) {
      std::int64_t k = kernels[rng() % kernels.size()];
      while (k > c) k = kernels[rng() % kernels.size()];
      std::int64_t st = strides[rng() % strides.size()];
      if (st > c) st = 1;
      if (s + 1 < n && output_size(c, k, st) < last) st = 1;
      bins[{k, st}] += count(rng);
    }
    if (s + 1 < n) {
      bool has_chain = false;
      for (const auto& [ks, cnt] : bins) has_chain = has_chain || ks.second == 1;
      if (!has_chain) bins[{1, 1}] += 1;
    }
    GroupSpec g;
    g.center_h = g.center_w = c;
    for (const auto& [ks, cnt] : bins) g.bins.push_back({ks.first, ks.second, cnt});
    cs.groups.push_back(std::move(g));
    std::uniform_int_distribution<Count> target(1000, 4000000000ULL);
    cs.targets.push_back({target(rng), target(rng) / 1000 + 1});
  }
  return cs;
}

// Replaces the targets of `cs` with the cost of randomly drawn channel
// assignments, evaluated group after group as synthesize would. Returns the
// planted channels.
inline std::vector<std::vector<std::int64_t>> plant_targets(ClusterSet& cs, std::mt19937_64& rng,
                                                            const GenomeConfig& genome = {},
                                                            std::int64_t image_channels = 3) {
  const CostModel model(cs.cost_model_id);
  const auto plan = plan_routes(cs);
  std::vector<std::vector<std::int64_t>> planted;
  for (std::size_t s = 0; s < cs.groups.size(); ++s) {
    const auto layout = make_layout(cs.groups[s], genome);
    Genome hidden;
    for (std::size_t i = 0; i < layout.length(); ++i) {
      hidden.bits.push_back(static_cast<std::uint8_t>(rng() & 1));
    }
    const auto in = incoming_channels(plan, s, planted, image_channels);
    const auto cost = evaluate(hidden, layout, cs.groups[s], in, model);
    cs.targets[s] = {cost.mac, cost.wp};
    planted.push_back(decode(hidden, layout));
  }
  return planted;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("cnnsynth_" + name + "_" + std::to_string(std::random_device{}()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace cnnsynth::testing
