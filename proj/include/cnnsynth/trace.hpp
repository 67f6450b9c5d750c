#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cnnsynth/costmodel.hpp"

namespace cnnsynth {

// One profiled convolution occurrence class.
struct ConvRecord {
  std::int64_t input_h = 0;
  std::int64_t input_w = 0;
  std::int64_t in_channels = 0;
  std::int64_t kernel = 0;
  std::int64_t stride = 0;
  std::int64_t out_channels = 0;
  Count count = 1;

  ConvShape shape() const {
    return {input_h, input_w, in_channels, kernel, stride, out_channels};
  }
  friend bool operator==(const ConvRecord&, const ConvRecord&) = default;
};

struct Trace {
  std::vector<ConvRecord> records;
  std::string source_label;

  bool empty() const { return records.empty(); }
  // Sum of occurrence counts.
  Count total_multiplicity() const;
};

inline constexpr std::string_view kTraceHeader =
    "input_h,input_w,in_channels,kernel,stride,out_channels,count";

// Throws TraceError naming the offending data row (1-based).
void validate_record(const ConvRecord& record, std::size_t row);

// Parses the comma-separated trace format. Lines starting with '#' and blank
// lines are skipped; CRLF is accepted.
Trace parse_trace(std::string_view content, std::string source_label = {});
Trace load_trace(const std::string& path);

// Canonical text form; parse_trace(serialize_trace(t)) == t.
std::string serialize_trace(const Trace& trace);

CostVector record_cost(const ConvRecord& record, const CostModel& model);
CostVector trace_totals(const Trace& trace, const CostModel& model);

}  // namespace cnnsynth
