#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cnnsynth/clustering.hpp"
#include "cnnsynth/costmodel.hpp"
#include "cnnsynth/synthesis.hpp"

namespace cnnsynth {

struct GroupReportRow {
  std::size_t group_index = 0;  // 1-based
  GroupTargets target;
  CostVector achieved;
  std::string fitness_error_percent;  // two decimals

  friend bool operator==(const GroupReportRow&, const GroupReportRow&) = default;
};

enum class ReportFormat { Markdown, Csv };

// 100 * value, rounded half-to-even to two decimals ("0.02").
std::string format_percent(double fitness_value);

GroupReportRow make_row(std::size_t group_index, const GroupTargets& target,
                        const CostVector& achieved, const FitnessWeights& weights);

std::vector<GroupReportRow> build_report(const ClusterSet& cs, std::span<const CostVector> achieved,
                                         const FitnessWeights& weights);
std::vector<GroupReportRow> build_report(const ClusterSet& cs, const SynthesisResult& results,
                                         const FitnessWeights& weights);

std::string render(std::span<const GroupReportRow> rows, ReportFormat format);
std::string render(std::span<const GroupReportRow> rows, std::string_view format);

std::vector<GroupReportRow> parse_report_csv(std::string_view text);

}  // namespace cnnsynth
