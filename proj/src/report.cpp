#include "cnnsynth/report.hpp"

#include <algorithm>
#include <array>
#include <cfenv>
#include <charconv>
#include <cmath>
#include <sstream>

#include "cnnsynth/errors.hpp"

namespace cnnsynth {

std::string format_percent(double fitness_value) {
  if (!std::isfinite(fitness_value) || fitness_value < 0.0) {
    throw ReportError("fitness value must be finite and non-negative");
  }
  // Hundredths of a percent; nearbyint rounds half-to-even in the default mode.
  const int saved = std::fegetround();
  std::fesetround(FE_TONEAREST);
  const auto hundredths = static_cast<long long>(std::nearbyint(fitness_value * 1e4));
  std::fesetround(saved);
  const auto frac = hundredths % 100;
  return std::to_string(hundredths / 100) + "." + (frac < 10 ? "0" : "") + std::to_string(frac);
}

GroupReportRow make_row(std::size_t group_index, const GroupTargets& target,
                        const CostVector& achieved, const FitnessWeights& weights) {
  return {group_index, target, achieved, format_percent(fitness(achieved, target, weights).value)};
}

std::vector<GroupReportRow> build_report(const ClusterSet& cs, std::span<const CostVector> achieved,
                                         const FitnessWeights& weights) {
  if (achieved.size() != cs.groups.size() || cs.targets.size() != cs.groups.size()) {
    throw ReportError("report expects " + std::to_string(cs.groups.size()) + " groups, got " +
                      std::to_string(achieved.size()));
  }
  std::vector<GroupReportRow> rows;
  for (std::size_t i = 0; i < achieved.size(); ++i) {
    rows.push_back(make_row(i + 1, cs.targets[i], achieved[i], weights));
  }
  return rows;
}

std::vector<GroupReportRow> build_report(const ClusterSet& cs, const SynthesisResult& results,
                                         const FitnessWeights& weights) {
  const auto achieved = results.achieved();
  return build_report(cs, std::span<const CostVector>(achieved), weights);
}

namespace {

constexpr std::array<std::string_view, 6> kCsvColumns = {
    "group", "mac_target", "wp_target", "mac_achieved", "wp_achieved", "fitness_error_percent"};

std::array<std::string, 6> cells(const GroupReportRow& r) {
  return {std::to_string(r.group_index), std::to_string(r.target.mac_real),
          std::to_string(r.target.wp_real), std::to_string(r.achieved.mac),
          std::to_string(r.achieved.wp),   r.fitness_error_percent};
}

}  // namespace

std::string render(std::span<const GroupReportRow> rows, ReportFormat format) {
  if (rows.empty()) throw ReportError("report has no rows");
  std::ostringstream out;
  if (format == ReportFormat::Csv) {
    for (std::size_t c = 0; c < kCsvColumns.size(); ++c) out << (c ? "," : "") << kCsvColumns[c];
    out << '\n';
    for (const auto& r : rows) {
      const auto row = cells(r);
      for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
      out << '\n';
    }
    return out.str();
  }

  const std::array<std::string, 6> header = {"Group",         "MAC target",   "WP target",
                                             "MAC synthetic", "WP synthetic", "Fitness Error (%)"};
  std::array<std::size_t, 6> width{};
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows) {
    const auto row = cells(r);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  auto line = [&](const std::array<std::string, 6>& row, bool right) {
    out << '|';
    for (std::size_t c = 0; c < row.size(); ++c) {
      const std::string pad(width[c] - row[c].size(), ' ');
      out << ' ' << (right ? pad + row[c] : row[c] + pad) << " |";
    }
    out << '\n';
  };
  line(header, false);
  out << '|';
  for (auto w : width) out << std::string(w + 1, '-') << ":|";
  out << '\n';
  for (const auto& r : rows) line(cells(r), true);
  return out.str();
}

std::string render(std::span<const GroupReportRow> rows, std::string_view format) {
  if (format == "csv") return render(rows, ReportFormat::Csv);
  if (format == "markdown" || format == "markdown-table" || format == "md") {
    return render(rows, ReportFormat::Markdown);
  }
  throw ReportError("unknown report format '" + std::string(format) + "'");
}

std::vector<GroupReportRow> parse_report_csv(std::string_view text) {
  std::vector<GroupReportRow> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> parts;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) parts.push_back(cell);
    if (header) {
      if (parts.size() != kCsvColumns.size() ||
          !std::equal(parts.begin(), parts.end(), kCsvColumns.begin())) {
        throw ReportError("unexpected report header");
      }
      header = false;
      continue;
    }
    if (parts.size() != kCsvColumns.size()) {
      throw ReportError("report line " + std::to_string(line_no) + " has wrong field count");
    }
    std::array<Count, 5> v{};
    for (std::size_t c = 0; c < v.size(); ++c) {
      const auto& p = parts[c];
      const auto [end, ec] = std::from_chars(p.data(), p.data() + p.size(), v[c]);
      if (p.empty() || ec != std::errc{} || end != p.data() + p.size()) {
        throw ReportError("report line " + std::to_string(line_no) + ": bad integer '" + p + "'");
      }
    }
    rows.push_back({static_cast<std::size_t>(v[0]), {v[1], v[2]}, {v[3], v[4]}, parts[5]});
  }
  if (header) throw ReportError("report is empty");
  return rows;
}

}  // namespace cnnsynth
