#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cnnsynth/assembler.hpp"
#include "cnnsynth/clustering.hpp"
#include "cnnsynth/config.hpp"
#include "cnnsynth/costmodel.hpp"
#include "cnnsynth/errors.hpp"
#include "cnnsynth/pipeline.hpp"
#include "cnnsynth/report.hpp"
#include "cnnsynth/synthesis.hpp"
#include "cnnsynth/trace.hpp"

namespace py = pybind11;
using namespace cnnsynth;

namespace {

ConvShape make_shape(std::int64_t in_h, std::int64_t in_w, std::int64_t in_channels,
                     std::int64_t kernel, std::int64_t stride, std::int64_t out_channels) {
  return {in_h, in_w, in_channels, kernel, stride, out_channels};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Synthetic CNN benchmark generation from profiled convolution traces.";

  py::register_exception<Error>(m, "Error", PyExc_ValueError);

  py::class_<ConvShape>(m, "ConvShape")
      .def(py::init(&make_shape), py::arg("in_h"), py::arg("in_w"), py::arg("in_channels"),
           py::arg("kernel"), py::arg("stride"), py::arg("out_channels"))
      .def_readwrite("in_h", &ConvShape::in_h)
      .def_readwrite("in_w", &ConvShape::in_w)
      .def_readwrite("in_channels", &ConvShape::in_channels)
      .def_readwrite("kernel", &ConvShape::kernel)
      .def_readwrite("stride", &ConvShape::stride)
      .def_readwrite("out_channels", &ConvShape::out_channels);

  py::class_<CostVector>(m, "CostVector")
      .def(py::init<>())
      .def(py::init([](Count mac, Count wp) { return CostVector{mac, wp}; }), py::arg("mac"),
           py::arg("wp"))
      .def_readwrite("mac", &CostVector::mac)
      .def_readwrite("wp", &CostVector::wp)
      .def("__eq__", [](const CostVector& a, const CostVector& b) { return a == b; })
      .def("__repr__", [](const CostVector& c) {
        return "CostVector(mac=" + std::to_string(c.mac) + ", wp=" + std::to_string(c.wp) + ")";
      });

  m.def("output_size", &output_size, py::arg("in_size"), py::arg("kernel"), py::arg("stride"));
  m.def("conv_macs", &conv_macs, py::arg("shape"));
  m.def(
      "conv_warps",
      [](const ConvShape& s, const std::string& model) { return conv_warps(s, model); },
      py::arg("shape"), py::arg("model_id") = std::string(kDefaultWarpModel));

  py::class_<ConvRecord>(m, "ConvRecord")
      .def_readonly("input_h", &ConvRecord::input_h)
      .def_readonly("input_w", &ConvRecord::input_w)
      .def_readonly("in_channels", &ConvRecord::in_channels)
      .def_readonly("kernel", &ConvRecord::kernel)
      .def_readonly("stride", &ConvRecord::stride)
      .def_readonly("out_channels", &ConvRecord::out_channels)
      .def_readonly("count", &ConvRecord::count);

  py::class_<Trace>(m, "Trace")
      .def_readonly("records", &Trace::records)
      .def_readonly("source_label", &Trace::source_label)
      .def("total_multiplicity", &Trace::total_multiplicity)
      .def("__len__", [](const Trace& t) { return t.records.size(); });

  m.def(
      "parse_trace", [](const std::string& text) { return parse_trace(text); }, py::arg("text"));
  m.def("serialize_trace", &serialize_trace, py::arg("trace"));
  m.def(
      "trace_totals",
      [](const Trace& t, const std::string& model) { return trace_totals(t, CostModel(model)); },
      py::arg("trace"), py::arg("model_id") = std::string(kDefaultWarpModel));

  py::class_<FilterBin>(m, "FilterBin")
      .def_readonly("kernel", &FilterBin::kernel)
      .def_readonly("stride", &FilterBin::stride)
      .def_readonly("count", &FilterBin::count);
  py::class_<GroupTargets>(m, "GroupTargets")
      .def(py::init([](Count mac, Count wp) { return GroupTargets{mac, wp}; }),
           py::arg("mac_real"), py::arg("wp_real"))
      .def_readonly("mac_real", &GroupTargets::mac_real)
      .def_readonly("wp_real", &GroupTargets::wp_real);
  py::class_<GroupSpec>(m, "GroupSpec")
      .def_readonly("center_h", &GroupSpec::center_h)
      .def_readonly("center_w", &GroupSpec::center_w)
      .def_readonly("bins", &GroupSpec::bins)
      .def_readonly("member_indices", &GroupSpec::member_indices);
  py::class_<ClusterSet>(m, "ClusterSet")
      .def_readonly("groups", &ClusterSet::groups)
      .def_readonly("targets", &ClusterSet::targets)
      .def_readonly("cost_model_id", &ClusterSet::cost_model_id)
      .def("to_json", &cluster_set_to_json)
      .def("summary", &cluster_summary)
      .def_static("from_json", [](const std::string& s) { return cluster_set_from_json(s); });

  m.def(
      "cluster",
      [](const Trace& t, double tolerance, const std::string& model) {
        return build_cluster_set(t, tolerance, CostModel(model));
      },
      py::arg("trace"), py::arg("merge_tolerance") = 0.0,
      py::arg("model_id") = std::string(kDefaultWarpModel));
  m.def("scale_clusters", &scale_clusters, py::arg("clusters"), py::arg("factor"));

  py::class_<FitnessValue>(m, "FitnessValue")
      .def_readonly("value", &FitnessValue::value)
      .def_readonly("mac_err", &FitnessValue::mac_err)
      .def_readonly("wp_err", &FitnessValue::wp_err);
  m.def(
      "fitness",
      [](const CostVector& achieved, const GroupTargets& targets, double w_mac, double w_wp) {
        return fitness(achieved, targets, {w_mac, w_wp});
      },
      py::arg("achieved"), py::arg("targets"), py::arg("mac_weight") = 0.5,
      py::arg("wp_weight") = 0.5);
  m.def("format_percent", &format_percent, py::arg("fitness_value"));

  m.def(
      "parse_config", [](const std::string& s) { return config_to_json(parse_config(s)); },
      py::arg("text"), "Validates a config document and returns it with defaults filled in.");

  m.def(
      "synthesize",
      [](const ClusterSet& cs, const std::string& config_json) {
        const auto config = config_json.empty() ? PipelineConfig{} : parse_config(config_json);
        auto outcome = synth_stage(cs, config);
        py::dict result;
        result["model_json"] = model_to_json(outcome.model);
        result["model_dot"] = model_to_dot(outcome.model);
        result["report_csv"] = render(outcome.rows, ReportFormat::Csv);
        result["channels"] = outcome.synthesis.assignments();
        result["achieved"] = outcome.synthesis.achieved();
        std::vector<double> values;
        for (const auto& g : outcome.synthesis.groups) values.push_back(g.evolution.fitness.value);
        result["fitness"] = values;
        result["violations"] = outcome.violations;
        result["breaches"] = outcome.breaches;
        return result;
      },
      py::arg("clusters"), py::arg("config_json") = std::string());

  m.def(
      "validate_model", [](const std::string& s) { return validate_graph(model_from_json(s)); },
      py::arg("model_json"));
  m.def(
      "model_to_dot", [](const std::string& s) { return model_to_dot(model_from_json(s)); },
      py::arg("model_json"));
}
