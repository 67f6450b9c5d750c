#include "cnnsynth/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <json.hpp>
#include <sstream>
#include <tuple>

#include "cnnsynth/errors.hpp"

namespace cnnsynth {

using nlohmann::ordered_json;

Count GroupSpec::slot_count() const {
  Count n = 0;
  for (const auto& b : bins) n = checked_add(n, b.count);
  return n;
}

namespace {

using Size = std::pair<std::int64_t, std::int64_t>;

struct SizeMember {
  Size size;
  Count weight = 0;
  double log_area = 0.0;
};

struct WorkCluster {
  std::vector<SizeMember> members;
  std::size_t center = 0;  // index into members
  const Size& center_size() const { return members[center].size; }
  double center_log() const { return members[center].log_area; }
};

void update_medoid(WorkCluster& c) {
  std::size_t best = 0;
  double best_cost = 0.0;
  for (std::size_t i = 0; i < c.members.size(); ++i) {
    double cost = 0.0;
    for (const auto& other : c.members) {
      cost += static_cast<double>(other.weight) * std::abs(c.members[i].log_area - other.log_area);
    }
    const auto& mi = c.members[i];
    const auto& mb = c.members[best];
    const bool better =
        i == 0 || cost < best_cost ||
        (cost == best_cost && std::tie(mi.weight, mi.size) > std::tie(mb.weight, mb.size));
    if (better) {
      best = i;
      best_cost = cost;
    }
  }
  c.center = best;
}

}  // namespace

std::vector<SizeCluster> cluster_by_input_size(const Trace& trace, double merge_tolerance) {
  if (trace.empty()) throw ClusterError("empty trace");
  if (!(merge_tolerance >= 0.0 && merge_tolerance < 1.0)) {
    throw ClusterError("merge_tolerance must be in [0, 1)");
  }

  std::map<Size, Count> weights;
  for (const auto& r : trace.records) {
    auto& w = weights[{r.input_h, r.input_w}];
    w = checked_add(w, r.count);
  }

  std::vector<WorkCluster> clusters;
  for (const auto& [size, weight] : weights) {
    const double log_area =
        std::log(static_cast<double>(size.first)) + std::log(static_cast<double>(size.second));
    clusters.push_back({{SizeMember{size, weight, log_area}}, 0});
  }

  const double limit = merge_tolerance * std::log(2.0);
  while (clusters.size() > 1) {
    std::size_t best_a = 0, best_b = 0;
    double best_d = 0.0;
    bool found = false;
    for (std::size_t a = 0; a < clusters.size(); ++a) {
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        const double d = std::abs(clusters[a].center_log() - clusters[b].center_log());
        auto key = [&](std::size_t x, std::size_t y) {
          return std::minmax(clusters[x].center_size(), clusters[y].center_size());
        };
        if (!found || d < best_d || (d == best_d && key(a, b) < key(best_a, best_b))) {
          best_a = a;
          best_b = b;
          best_d = d;
          found = true;
        }
      }
    }
    if (best_d > limit) break;
    auto& into = clusters[best_a];
    auto& from = clusters[best_b];
    into.members.insert(into.members.end(), from.members.begin(), from.members.end());
    std::sort(into.members.begin(), into.members.end(),
              [](const SizeMember& x, const SizeMember& y) { return x.size < y.size; });
    update_medoid(into);
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(best_b));
  }

  std::map<Size, std::size_t> owner;
  std::vector<SizeCluster> out;
  for (const auto& c : clusters) {
    for (const auto& m : c.members) owner[m.size] = out.size();
    out.push_back({c.center_size().first, c.center_size().second, {}});
  }
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const auto& r = trace.records[i];
    out[owner.at({r.input_h, r.input_w})].member_indices.push_back(i);
  }
  std::sort(out.begin(), out.end(), [](const SizeCluster& x, const SizeCluster& y) {
    return std::make_tuple(x.center_h * x.center_w, x.center_h, x.center_w) >
           std::make_tuple(y.center_h * y.center_w, y.center_h, y.center_w);
  });
  return out;
}

std::vector<FilterBin> bin_group(std::span<const ConvRecord> members) {
  if (members.empty()) throw ClusterError("bin_group: no members");
  std::map<std::pair<std::int64_t, std::int64_t>, Count, std::greater<>> bins;
  for (const auto& r : members) {
    auto& c = bins[{r.kernel, r.stride}];
    c = checked_add(c, r.count);
  }
  std::vector<FilterBin> out;
  for (const auto& [ks, count] : bins) out.push_back({ks.first, ks.second, count});
  return out;
}

GroupTargets compute_group_targets(std::span<const ConvRecord> members, const CostModel& model) {
  if (members.empty()) throw ClusterError("compute_group_targets: no members");
  CostVector total;
  for (const auto& r : members) total += record_cost(r, model);
  return {total.mac, total.wp};
}

ClusterSet build_cluster_set(const Trace& trace, double merge_tolerance, const CostModel& model) {
  ClusterSet cs;
  cs.cost_model_id = model.id();
  for (auto& cluster : cluster_by_input_size(trace, merge_tolerance)) {
    std::vector<ConvRecord> members;
    members.reserve(cluster.member_indices.size());
    for (auto i : cluster.member_indices) members.push_back(trace.records[i]);
    GroupSpec g;
    g.center_h = cluster.center_h;
    g.center_w = cluster.center_w;
    g.bins = bin_group(members);
    g.member_indices = std::move(cluster.member_indices);
    cs.targets.push_back(compute_group_targets(members, model));
    cs.groups.push_back(std::move(g));
  }
  return cs;
}

namespace {

Count scale_round(Count value, double factor) {
  const long double scaled = std::roundl(static_cast<long double>(value) * factor);
  return std::max<Count>(1, static_cast<Count>(scaled));
}

}  // namespace

ClusterSet scale_clusters(const ClusterSet& cs, double factor) {
  if (!(factor > 0.0 && factor <= 1.0)) throw ClusterError("scale factor must be in (0, 1]");
  if (factor == 1.0) return cs;
  ClusterSet out = cs;
  for (auto& g : out.groups) {
    for (auto& b : g.bins) b.count = scale_round(b.count, factor);
  }
  for (auto& t : out.targets) {
    t.mac_real = scale_round(t.mac_real, factor);
    t.wp_real = scale_round(t.wp_real, factor);
  }
  return out;
}

void validate_cluster_set(const ClusterSet& cs) {
  if (cs.groups.empty()) throw ClusterError("cluster set has no groups");
  if (cs.targets.size() != cs.groups.size()) {
    throw ClusterError("cluster set has " + std::to_string(cs.groups.size()) + " groups but " +
                       std::to_string(cs.targets.size()) + " targets");
  }
  for (std::size_t i = 0; i < cs.groups.size(); ++i) {
    const auto& g = cs.groups[i];
    const std::string where = "group " + std::to_string(i + 1);
    if (g.center_h <= 0 || g.center_w <= 0) throw ClusterError(where + ": center must be positive");
    if (i > 0 && g.area() >= cs.groups[i - 1].area()) {
      throw ClusterError(where + ": centers must be strictly decreasing in area");
    }
    if (g.bins.empty()) throw ClusterError(where + ": no bins");
    for (std::size_t b = 0; b < g.bins.size(); ++b) {
      const auto& bin = g.bins[b];
      if (bin.kernel <= 0 || bin.stride <= 0 || bin.count == 0) {
        throw ClusterError(where + ": bin fields must be positive");
      }
      if (b > 0) {
        const auto& prev = g.bins[b - 1];
        if (std::tie(prev.kernel, prev.stride) <= std::tie(bin.kernel, bin.stride)) {
          throw ClusterError(where + ": bins must be unique and sorted by kernel, stride descending");
        }
      }
    }
    if (cs.targets[i].mac_real == 0 || cs.targets[i].wp_real == 0) {
      throw ClusterError(where + ": targets must be positive");
    }
  }
}

std::string cluster_set_to_json(const ClusterSet& cs) {
  ordered_json doc;
  doc["cost_model_id"] = cs.cost_model_id;
  doc["groups"] = ordered_json::array();
  for (std::size_t i = 0; i < cs.groups.size(); ++i) {
    const auto& g = cs.groups[i];
    ordered_json jg;
    jg["center_h"] = g.center_h;
    jg["center_w"] = g.center_w;
    jg["bins"] = ordered_json::array();
    for (const auto& b : g.bins) {
      ordered_json jb;
      jb["kernel"] = b.kernel;
      jb["stride"] = b.stride;
      jb["count"] = b.count;
      jg["bins"].push_back(std::move(jb));
    }
    jg["targets"]["mac_real"] = cs.targets[i].mac_real;
    jg["targets"]["wp_real"] = cs.targets[i].wp_real;
    doc["groups"].push_back(std::move(jg));
  }
  return doc.dump(2) + "\n";
}

namespace {

template <typename T>
T get_uint(const ordered_json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ClusterError(where + ": missing key '" + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number_unsigned()) {
    throw ClusterError(where + ": '" + key + "' must be a non-negative integer");
  }
  return v.get<T>();
}

}  // namespace

ClusterSet cluster_set_from_json(std::string_view text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw ClusterError(std::string("cluster set is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("groups") || !doc["groups"].is_array()) {
    throw ClusterError("cluster set must be an object with a 'groups' array");
  }
  ClusterSet cs;
  cs.cost_model_id = doc.value("cost_model_id", std::string(kDefaultWarpModel));
  std::size_t index = 0;
  for (const auto& jg : doc["groups"]) {
    const std::string where = "group " + std::to_string(++index);
    GroupSpec g;
    g.center_h = get_uint<std::int64_t>(jg, "center_h", where);
    g.center_w = get_uint<std::int64_t>(jg, "center_w", where);
    if (!jg.contains("bins") || !jg["bins"].is_array()) {
      throw ClusterError(where + ": missing 'bins' array");
    }
    for (const auto& jb : jg["bins"]) {
      g.bins.push_back({get_uint<std::int64_t>(jb, "kernel", where),
                        get_uint<std::int64_t>(jb, "stride", where),
                        get_uint<Count>(jb, "count", where)});
    }
    if (!jg.contains("targets")) throw ClusterError(where + ": missing 'targets'");
    const auto& jt = jg["targets"];
    cs.targets.push_back(
        {get_uint<Count>(jt, "mac_real", where), get_uint<Count>(jt, "wp_real", where)});
    cs.groups.push_back(std::move(g));
  }
  validate_cluster_set(cs);
  return cs;
}

std::string cluster_summary(const ClusterSet& cs) {
  std::ostringstream out;
  out << "Group\tGroup center (HxW)\tCounts\tfilter size, filter stride\n";
  for (std::size_t i = 0; i < cs.groups.size(); ++i) {
    const auto& g = cs.groups[i];
    for (std::size_t b = 0; b < g.bins.size(); ++b) {
      if (b == 0) {
        out << i + 1 << '\t' << g.center_h << 'x' << g.center_w << '\t';
      } else {
        out << "\t\t";
      }
      out << g.bins[b].count << '\t' << g.bins[b].kernel << ',' << g.bins[b].stride << '\n';
    }
  }
  return out.str();
}

}  // namespace cnnsynth
