#include "cnnsynth/trace.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>

#include "cnnsynth/errors.hpp"

namespace cnnsynth {

namespace {

constexpr std::array<std::string_view, 7> kColumns = {
    "input_h", "input_w", "in_channels", "kernel", "stride", "out_channels", "count"};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string row_suffix(std::size_t row) { return ", row " + std::to_string(row); }

}  // namespace

Count Trace::total_multiplicity() const {
  Count total = 0;
  for (const auto& r : records) total = checked_add(total, r.count);
  return total;
}

void validate_record(const ConvRecord& r, std::size_t row) {
  const std::array<std::pair<std::string_view, std::int64_t>, 6> fields = {{
      {"input_h", r.input_h},
      {"input_w", r.input_w},
      {"in_channels", r.in_channels},
      {"kernel", r.kernel},
      {"stride", r.stride},
      {"out_channels", r.out_channels},
  }};
  for (const auto& [name, value] : fields) {
    if (value <= 0) throw TraceError(std::string(name) + " must be positive" + row_suffix(row));
  }
  if (r.count == 0) throw TraceError("count must be positive" + row_suffix(row));
  if (r.kernel > std::min(r.input_h, r.input_w)) {
    throw TraceError("kernel exceeds input size" + row_suffix(row));
  }
  if (r.stride > r.kernel && r.stride > std::min(r.input_h, r.input_w)) {
    throw TraceError("stride exceeds both kernel and input size" + row_suffix(row));
  }
}

Trace parse_trace(std::string_view content, std::string source_label) {
  Trace trace;
  trace.source_label = std::move(source_label);

  // Position of each canonical column in the file's header.
  std::optional<std::array<std::size_t, 7>> layout;
  std::size_t row = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    const auto nl = content.find('\n', pos);
    std::string_view line =
        content.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? content.size() + 1 : nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || line.front() == '#') continue;

    const auto cells = split(line);
    if (!layout) {
      std::array<std::size_t, 7> idx{};
      idx.fill(kColumns.size());
      for (std::size_t c = 0; c < cells.size(); ++c) {
        const auto it = std::find(kColumns.begin(), kColumns.end(), cells[c]);
        if (it == kColumns.end()) {
          throw TraceError("unknown header column '" + std::string(cells[c]) + "'");
        }
        const auto target = static_cast<std::size_t>(it - kColumns.begin());
        if (idx[target] != kColumns.size()) {
          throw TraceError("duplicate header column '" + std::string(cells[c]) + "'");
        }
        idx[target] = c;
      }
      for (std::size_t k = 0; k < kColumns.size(); ++k) {
        if (idx[k] == kColumns.size()) {
          throw TraceError("missing header column '" + std::string(kColumns[k]) + "'");
        }
      }
      layout = idx;
      continue;
    }

    ++row;
    if (cells.size() != kColumns.size()) {
      throw TraceError("expected " + std::to_string(kColumns.size()) + " fields, got " +
                       std::to_string(cells.size()) + row_suffix(row));
    }
    std::array<std::int64_t, 7> values{};
    for (std::size_t k = 0; k < kColumns.size(); ++k) {
      const auto cell = cells[(*layout)[k]];
      std::int64_t v = 0;
      const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc{} || end != cell.data() + cell.size()) {
        throw TraceError(std::string(kColumns[k]) + " is not an integer ('" + std::string(cell) +
                         "')" + row_suffix(row));
      }
      if (v <= 0) throw TraceError(std::string(kColumns[k]) + " must be positive" + row_suffix(row));
      values[k] = v;
    }
    ConvRecord r{values[0], values[1], values[2], values[3],
                 values[4], values[5], static_cast<Count>(values[6])};
    validate_record(r, row);
    trace.records.push_back(r);
  }
  if (trace.records.empty()) throw TraceError("empty trace");
  return trace;
}

Trace load_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TraceError("trace not found: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_trace(buf.str(), path);
  } catch (const TraceError& e) {
    throw TraceError(path + ": " + e.what());
  }
}

std::string serialize_trace(const Trace& trace) {
  std::string out;
  out += kTraceHeader;
  out += '\n';
  for (const auto& r : trace.records) {
    out += std::to_string(r.input_h) + ',' + std::to_string(r.input_w) + ',' +
           std::to_string(r.in_channels) + ',' + std::to_string(r.kernel) + ',' +
           std::to_string(r.stride) + ',' + std::to_string(r.out_channels) + ',' +
           std::to_string(r.count) + '\n';
  }
  return out;
}

CostVector record_cost(const ConvRecord& record, const CostModel& model) {
  return scale(model.cost(record.shape()), record.count);
}

CostVector trace_totals(const Trace& trace, const CostModel& model) {
  if (trace.empty()) throw TraceError("empty trace");
  CostVector total;
  for (const auto& r : trace.records) total += record_cost(r, model);
  return total;
}

}  // namespace cnnsynth
