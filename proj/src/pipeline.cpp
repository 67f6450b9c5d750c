#include "cnnsynth/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "cnnsynth/errors.hpp"

namespace cnnsynth {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << content;
  if (!out) throw Error("failed writing " + path);
}

ClusterSet cluster_stage(const Trace& trace, const PipelineConfig& config) {
  const CostModel model(config.warp_model_id);
  return scale_clusters(build_cluster_set(trace, config.merge_tolerance, model),
                        config.scale_factor);
}

SynthOutcome synth_stage(const ClusterSet& clusters, const PipelineConfig& config) {
  const CostModel model(clusters.cost_model_id);
  SynthOutcome outcome;
  outcome.synthesis = synthesize(clusters, config.genome, config.ga_params(), config.fitness, model,
                                 config.assembler.image_channels);
  const auto assignments = outcome.synthesis.assignments();
  outcome.model = assemble_network(clusters, assignments, config.assembler, config.seed);
  outcome.violations = validate_graph(outcome.model);
  outcome.rows = build_report(clusters, outcome.synthesis, config.fitness);
  for (std::size_t i = 0; i < outcome.synthesis.groups.size(); ++i) {
    if (outcome.synthesis.groups[i].evolution.fitness.value > config.fail_threshold) {
      outcome.breaches.push_back(i + 1);
    }
  }
  return outcome;
}

namespace {

PipelineConfig resolve_config(const CommonOptions& options) {
  PipelineConfig config = options.config_path ? load_config(*options.config_path) : PipelineConfig{};
  if (options.seed) config.seed = *options.seed;
  if (options.scale) config.scale_factor = *options.scale;
  validate_config(config);
  return config;
}

ReportFormat report_format_for(const std::string& path) {
  const auto ext = fs::path(path).extension().string();
  return ext == ".md" ? ReportFormat::Markdown : ReportFormat::Csv;
}

void print_violations(const std::vector<std::string>& violations, std::ostream& err) {
  err << "model failed validation with " << violations.size() << " violation(s):\n";
  for (const auto& v : violations) err << "  " << v << '\n';
}

void report_breaches(const SynthOutcome& outcome, const PipelineConfig& config, std::ostream& err) {
  for (auto g : outcome.breaches) {
    const auto& f = outcome.synthesis.groups[g - 1].evolution.fitness;
    err << "group " << g << ": fitness " << std::setprecision(6) << f.value
        << " exceeds fail threshold " << config.fail_threshold << '\n';
  }
}

// Runs `body`, mapping library errors to exit code 1.
template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
}

}  // namespace

int cmd_cluster(const std::string& trace_path, const std::string& out_path,
                const CommonOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto config = resolve_config(options);
    const auto clusters = cluster_stage(load_trace(trace_path), config);
    write_file(out_path, cluster_set_to_json(clusters));
    out << cluster_summary(clusters);
    return int{kExitOk};
  });
}

int cmd_synth(const std::string& clusters_path, const std::string& model_out,
              const std::string& report_out, const CommonOptions& options, std::ostream& out,
              std::ostream& err) {
  return guarded(err, [&] {
    const auto config = resolve_config(options);
    const auto clusters = cluster_set_from_json(read_file(clusters_path));
    const auto outcome = synth_stage(clusters, config);
    if (!outcome.violations.empty()) {
      print_violations(outcome.violations, err);
      return int{kExitInputError};
    }
    write_file(model_out, model_to_json(outcome.model));
    write_file(report_out, render(outcome.rows, report_format_for(report_out)));
    out << render(outcome.rows, ReportFormat::Markdown);
    if (!outcome.breaches.empty()) {
      report_breaches(outcome, config, err);
      return int{kExitThresholdBreach};
    }
    return int{kExitOk};
  });
}

int cmd_export(const std::string& model_path, const std::string& format,
               const std::string& out_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (format != "dot" && format != "json") {
      err << "error: unknown export format '" << format << "' (expected dot or json)\n";
      return int{kExitInputError};
    }
    auto model = model_from_json(read_file(model_path));
    const auto violations = validate_graph(model);
    if (!violations.empty()) {
      print_violations(violations, err);
      return int{kExitInputError};
    }
    canonicalize(model);
    write_file(out_path, format == "dot" ? model_to_dot(model) : model_to_json(model));
    out << "wrote " << out_path << '\n';
    return int{kExitOk};
  });
}

int cmd_pipeline(const std::string& trace_path, const std::string& out_dir,
                 const CommonOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto config = resolve_config(options);
    const auto clusters = cluster_stage(load_trace(trace_path), config);
    fs::create_directories(out_dir);
    const auto dir = fs::path(out_dir);
    write_file((dir / "clusters.json").string(), cluster_set_to_json(clusters));
    out << cluster_summary(clusters) << '\n';

    const auto outcome = synth_stage(clusters, config);
    if (!outcome.violations.empty()) {
      print_violations(outcome.violations, err);
      return int{kExitInputError};
    }
    write_file((dir / "model.json").string(), model_to_json(outcome.model));
    write_file((dir / "model.dot").string(), model_to_dot(outcome.model));
    write_file((dir / "report.csv").string(), render(outcome.rows, ReportFormat::Csv));
    out << render(outcome.rows, ReportFormat::Markdown);
    if (!outcome.breaches.empty()) {
      report_breaches(outcome, config, err);
      return int{kExitThresholdBreach};
    }
    return int{kExitOk};
  });
}

}  // namespace cnnsynth
