#include <CLI11.hpp>
#include <iostream>

#include "cnnsynth/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthesize a benchmark CNN from profiled convolution traces"};
  app.require_subcommand(1);

  cnnsynth::CommonOptions common;
  std::string config_path;
  std::uint64_t seed = 0;
  double scale = 1.0;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Pipeline config (JSON)");
    cmd->add_option("--seed", seed, "Override the configured seed");
    cmd->add_option("--scale", scale, "Override clustering.scale_factor");
  };

  std::string trace_path, clusters_path, model_path, out_path, out_dir, report_path;
  std::string format = "dot";

  auto* cluster = app.add_subcommand("cluster", "Cluster a trace into groups");
  cluster->add_option("--trace", trace_path, "Trace file")->required();
  cluster->add_option("--out", out_path, "ClusterSet output (JSON)")->required();
  add_common(cluster);

  auto* synth = app.add_subcommand("synth", "Evolve channels and assemble the model");
  synth->add_option("--clusters", clusters_path, "ClusterSet file")->required();
  synth->add_option("--model", model_path, "Model output (JSON)")->required();
  synth->add_option("--out", report_path, "Report output (.csv or .md)")->required();
  add_common(synth);

  auto* exporter = app.add_subcommand("export", "Convert a model file");
  exporter->add_option("--model", model_path, "Model file")->required();
  exporter->add_option("--format", format, "dot or json");
  exporter->add_option("--out", out_path, "Output file")->required();

  auto* pipeline = app.add_subcommand("pipeline", "cluster, synth and export in one run");
  pipeline->add_option("--trace", trace_path, "Trace file")->required();
  pipeline->add_option("--out-dir", out_dir, "Artifact directory")->required();
  add_common(pipeline);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cnnsynth::kExitInputError;
  }

  auto* active = app.get_subcommands().front();
  if (active != exporter) {
    if (active->count("--config")) common.config_path = config_path;
    if (active->count("--seed")) common.seed = seed;
    if (active->count("--scale")) common.scale = scale;
  }

  if (active == cluster) {
    return cnnsynth::cmd_cluster(trace_path, out_path, common, std::cout, std::cerr);
  }
  if (active == synth) {
    return cnnsynth::cmd_synth(clusters_path, model_path, report_path, common, std::cout,
                               std::cerr);
  }
  if (active == exporter) {
    return cnnsynth::cmd_export(model_path, format, out_path, std::cout, std::cerr);
  }
  return cnnsynth::cmd_pipeline(trace_path, out_dir, common, std::cout, std::cerr);
}
