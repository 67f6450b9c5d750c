#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cnnsynth/assembler.hpp"
#include "cnnsynth/clustering.hpp"
#include "cnnsynth/config.hpp"
#include "cnnsynth/report.hpp"
#include "cnnsynth/synthesis.hpp"
#include "cnnsynth/trace.hpp"

namespace cnnsynth {

// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitInputError = 1,
  kExitThresholdBreach = 2,
};

ClusterSet cluster_stage(const Trace& trace, const PipelineConfig& config);

struct SynthOutcome {
  SynthesisResult synthesis;
  ModelGraph model;
  std::vector<std::string> violations;
  std::vector<GroupReportRow> rows;
  // 1-based indices of groups whose fitness exceeds the fail threshold.
  std::vector<std::size_t> breaches;
};

SynthOutcome synth_stage(const ClusterSet& clusters, const PipelineConfig& config);

// Command-line level operations. Messages go to `out`/`err`; the return value
// is an ExitCode.
struct CommonOptions {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> scale;
};

int cmd_cluster(const std::string& trace_path, const std::string& out_path,
                const CommonOptions& options, std::ostream& out, std::ostream& err);
int cmd_synth(const std::string& clusters_path, const std::string& model_out,
              const std::string& report_out, const CommonOptions& options, std::ostream& out,
              std::ostream& err);
int cmd_export(const std::string& model_path, const std::string& format,
               const std::string& out_path, std::ostream& out, std::ostream& err);
int cmd_pipeline(const std::string& trace_path, const std::string& out_dir,
                 const CommonOptions& options, std::ostream& out, std::ostream& err);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace cnnsynth
