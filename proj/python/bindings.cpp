#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "crcdet/calibrate.hpp"
#include "crcdet/detections.hpp"
#include "crcdet/errors.hpp"
#include "crcdet/geometry.hpp"
#include "crcdet/harness.hpp"
#include "crcdet/pairing.hpp"
#include "crcdet/risk.hpp"
#include "crcdet/synth.hpp"

namespace py = pybind11;
using namespace crcdet;

namespace {

std::string repr_box(const Box3& b) {
  const auto a = b.to_array();
  return "Box3([" + std::to_string(a[0]) + ", " + std::to_string(a[1]) + ", " + std::to_string(a[2]) +
         ", " + std::to_string(a[3]) + ", " + std::to_string(a[4]) + ", " + std::to_string(a[5]) + "])";
}

}  // namespace

PYBIND11_MODULE(_crcdet, m) {
  m.doc() = "Conformal false-negative-rate calibration for 3D detection candidates";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  // geometry
  py::class_<Box3>(m, "Box3")
      .def(py::init<>())
      .def(py::init([](const std::array<double, 6>& c) { return Box3::from_array(c); }), py::arg("coords"))
      .def(py::init([](const Vec3& a, const Vec3& b) { return Box3::from_corners(a, b); }),
           py::arg("corner_a"), py::arg("corner_b"))
      .def_readwrite("min_corner", &Box3::min_corner)
      .def_readwrite("max_corner", &Box3::max_corner)
      .def("to_list", &Box3::to_array)
      .def("translated", &Box3::translated)
      .def("__eq__", [](const Box3& a, const Box3& b) { return a == b; })
      .def("__repr__", &repr_box);

  py::class_<CandidateBox>(m, "CandidateBox")
      .def(py::init([](const Box3& b, double c) { return CandidateBox{b, c}; }), py::arg("box"),
           py::arg("confidence"))
      .def_readwrite("box", &CandidateBox::box)
      .def_readwrite("confidence", &CandidateBox::confidence);

  m.def("volume", &volume);
  m.def("iou", &iou, py::arg("a"), py::arg("b"));
  m.def("nms_filter",
        [](const std::vector<CandidateBox>& boxes, double t) { return nms_filter(boxes, t); },
        py::arg("boxes"), py::arg("iou_threshold") = kDefaultNmsThreshold);

  // detections
  py::class_<GroundTruthNodule>(m, "GroundTruthNodule")
      .def(py::init([](const Box3& b, int c) { return GroundTruthNodule{b, c}; }), py::arg("box"),
           py::arg("consensus"))
      .def_readwrite("box", &GroundTruthNodule::box)
      .def_readwrite("consensus", &GroundTruthNodule::consensus);

  py::class_<ScanRecord>(m, "ScanRecord")
      .def(py::init<>())
      .def(py::init([](std::string id, std::vector<CandidateBox> c, std::vector<GroundTruthNodule> g) {
             return ScanRecord{std::move(id), std::move(c), std::move(g)};
           }),
           py::arg("scan_id"), py::arg("candidates"), py::arg("ground_truth"))
      .def_readwrite("scan_id", &ScanRecord::scan_id)
      .def_readwrite("candidates", &ScanRecord::candidates)
      .def_readwrite("ground_truth", &ScanRecord::ground_truth)
      .def("to_json", &serialize_record)
      .def_static("from_json", [](const std::string& s) { return parse_record(s); });

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<>())
      .def(py::init([](std::vector<ScanRecord> scans, std::string provenance) {
             Dataset d{std::move(scans), std::move(provenance)};
             validate(d);
             return d;
           }),
           py::arg("scans"), py::arg("provenance") = "")
      .def_readwrite("scans", &Dataset::scans)
      .def_readwrite("provenance", &Dataset::provenance)
      .def("nodule_count", &Dataset::nodule_count)
      .def("__len__", &Dataset::size)
      .def("__eq__", [](const Dataset& a, const Dataset& b) { return a == b; });

  m.def("load_dataset",
        [](const std::filesystem::path& p, std::optional<double> nms) {
          return load_dataset(p, LoadOptions{nms});
        },
        py::arg("path"), py::arg("nms_threshold") = std::nullopt);
  m.def("save_dataset", &save_dataset, py::arg("dataset"), py::arg("path"));
  m.def("filter_consensus", &filter_consensus, py::arg("dataset"), py::arg("min_consensus"));
  m.def("split_dataset", &split_dataset, py::arg("dataset"), py::arg("seed"));
  m.def("find_unpairable_truth", [](const Dataset& d) {
    std::vector<std::pair<std::string, std::size_t>> out;
    for (const auto& u : find_unpairable_truth(d)) out.emplace_back(u.scan_id, u.truth_index);
    return out;
  });

  // pairing
  py::class_<PairingResult>(m, "PairingResult")
      .def_readonly("matches", &PairingResult::matches)
      .def_readonly("unmatched_truth", &PairingResult::unmatched_truth)
      .def_property_readonly("contested_claims",
                             [](const PairingResult& r) { return r.diagnostics.contested_claims; })
      .def_property_readonly("fallbacks", [](const PairingResult& r) { return r.diagnostics.fallbacks; });
  m.def("pair",
        [](const std::vector<GroundTruthNodule>& t, const std::vector<CandidateBox>& c) { return pair(t, c); },
        py::arg("truth"), py::arg("prediction_set"));
  m.def("count_outcomes",
        [](const std::vector<GroundTruthNodule>& t, const std::vector<CandidateBox>& c) {
          const auto o = count_outcomes(t, c);
          return py::make_tuple(o.tp, o.fp, o.fn);
        },
        py::arg("truth"), py::arg("prediction_set"));

  // risk
  py::class_<PredictionSet>(m, "PredictionSet")
      .def_readonly("scan_id", &PredictionSet::scan_id)
      .def_readonly("lambda_", &PredictionSet::lambda)
      .def_readonly("members", &PredictionSet::members);
  m.def("prediction_set", &prediction_set, py::arg("scan"), py::arg("lam"));
  m.def("fnr_loss", py::overload_cast<const ScanRecord&, double>(&fnr_loss), py::arg("scan"),
        py::arg("lam"));

  py::class_<RiskCurve>(m, "RiskCurve")
      .def_readonly("grid", &RiskCurve::grid)
      .def_readonly("empirical_risk", &RiskCurve::empirical_risk)
      .def_readonly("pooled_sensitivity", &RiskCurve::pooled_sensitivity)
      .def_readonly("n", &RiskCurve::n);
  m.def("risk_curve", py::overload_cast<const Dataset&>(&risk_curve), py::arg("calibration"));

  py::class_<AggregateMetrics>(m, "AggregateMetrics")
      .def_readonly("sensitivity_froc", &AggregateMetrics::sensitivity_froc)
      .def_readonly("sensitivity_prc", &AggregateMetrics::sensitivity_prc)
      .def_readonly("precision_prc", &AggregateMetrics::precision_prc)
      .def_readonly("false_positives_froc", &AggregateMetrics::false_positives_froc)
      .def_readonly("efficiency", &AggregateMetrics::efficiency)
      .def_readonly("fn_per_scan", &AggregateMetrics::fn_per_scan)
      .def_readonly("empty_prediction_sets", &AggregateMetrics::empty_prediction_sets);
  m.def("aggregate_metrics", py::overload_cast<const Dataset&, double>(&aggregate_metrics),
        py::arg("test"), py::arg("lam"));

  // calibrate
  py::enum_<Strategy>(m, "Strategy")
      .value("Naive", Strategy::Naive)
      .value("FROC", Strategy::Froc)
      .value("CRC", Strategy::Crc);

  py::class_<StrategySpec>(m, "StrategySpec")
      .def(py::init([](Strategy kind, double fixed_lambda, double target, double alpha) {
             return StrategySpec{kind, fixed_lambda, target, alpha};
           }),
           py::arg("kind"), py::arg("fixed_lambda") = 0.5, py::arg("target_sensitivity") = 0.9,
           py::arg("alpha") = 0.1)
      .def_readwrite("kind", &StrategySpec::kind)
      .def_readwrite("fixed_lambda", &StrategySpec::fixed_lambda)
      .def_readwrite("target_sensitivity", &StrategySpec::target_sensitivity)
      .def_readwrite("alpha", &StrategySpec::alpha);

  py::class_<CalibrationResult>(m, "CalibrationResult")
      .def_readonly("strategy", &CalibrationResult::strategy)
      .def_readonly("lambda_hat", &CalibrationResult::lambda_hat)
      .def_readonly("alpha", &CalibrationResult::alpha)
      .def_readonly("target_sensitivity", &CalibrationResult::target_sensitivity)
      .def_readonly("n", &CalibrationResult::n)
      .def_readonly("achieved_calibration_risk", &CalibrationResult::achieved_calibration_risk)
      .def_readonly("infeasible", &CalibrationResult::infeasible);

  m.def("calibrate_naive", &calibrate_naive, py::arg("fixed_lambda") = 0.5);
  m.def("calibrate_froc", py::overload_cast<const Dataset&, double>(&calibrate_froc),
        py::arg("calibration"), py::arg("target_sensitivity") = 0.9);
  m.def("calibrate_crc", py::overload_cast<const Dataset&, double>(&calibrate_crc),
        py::arg("calibration"), py::arg("alpha"));

  py::class_<TrialReport>(m, "TrialReport")
      .def_readonly("dataset", &TrialReport::dataset)
      .def_readonly("strategy", &TrialReport::strategy)
      .def_readonly("rep", &TrialReport::rep)
      .def_readonly("lambda_hat", &TrialReport::lambda_hat)
      .def_readonly("sensitivity", &TrialReport::sensitivity)
      .def_readonly("precision", &TrialReport::precision)
      .def_readonly("efficiency", &TrialReport::efficiency)
      .def_readonly("fn", &TrialReport::fn)
      .def_readonly("fp", &TrialReport::fp)
      .def_readonly("infeasible", &TrialReport::infeasible);
  m.def("evaluate", py::overload_cast<const CalibrationResult&, const Dataset&>(&evaluate),
        py::arg("result"), py::arg("test"));

  // synth
  py::class_<GeneratorConfig>(m, "GeneratorConfig")
      .def(py::init<>())
      .def_readwrite("n_scans", &GeneratorConfig::n_scans)
      .def_readwrite("nodules_min", &GeneratorConfig::nodules_min)
      .def_readwrite("nodules_max", &GeneratorConfig::nodules_max)
      .def_readwrite("nodule_count_p", &GeneratorConfig::nodule_count_p)
      .def_readwrite("n_annotators", &GeneratorConfig::n_annotators)
      .def_readwrite("salience_alpha", &GeneratorConfig::salience_alpha)
      .def_readwrite("salience_beta", &GeneratorConfig::salience_beta)
      .def_readwrite("annotator_midpoint", &GeneratorConfig::annotator_midpoint)
      .def_readwrite("annotator_steepness", &GeneratorConfig::annotator_steepness)
      .def_readwrite("detector_sharpness", &GeneratorConfig::detector_sharpness)
      .def_readwrite("detector_noise", &GeneratorConfig::detector_noise)
      .def_readwrite("distractors_min", &GeneratorConfig::distractors_min)
      .def_readwrite("distractors_max", &GeneratorConfig::distractors_max)
      .def_readwrite("distractor_alpha", &GeneratorConfig::distractor_alpha)
      .def_readwrite("distractor_beta", &GeneratorConfig::distractor_beta)
      .def_readwrite("volume_extent", &GeneratorConfig::volume_extent)
      .def_readwrite("diameter_min", &GeneratorConfig::diameter_min)
      .def_readwrite("diameter_max", &GeneratorConfig::diameter_max)
      .def_readwrite("seed", &GeneratorConfig::seed);
  m.def("generate", &generate, py::arg("config"));
  m.def("consensus_shift_suite", &consensus_shift_suite, py::arg("config"));

  // harness
  py::class_<SummaryRow>(m, "SummaryRow")
      .def_readonly("dataset", &SummaryRow::dataset)
      .def_readonly("strategy", &SummaryRow::strategy)
      .def_readonly("trials", &SummaryRow::trials)
      .def_readonly("failures", &SummaryRow::failures)
      .def_readonly("infeasible", &SummaryRow::infeasible)
      .def_readonly("lambda_hat", &SummaryRow::lambda_hat)
      .def_readonly("sensitivity", &SummaryRow::sensitivity)
      .def_readonly("sensitivity_se", &SummaryRow::sensitivity_se)
      .def_readonly("precision", &SummaryRow::precision)
      .def_readonly("efficiency", &SummaryRow::efficiency)
      .def_readonly("fn", &SummaryRow::fn)
      .def_readonly("fp", &SummaryRow::fp);
  m.def("run_experiment",
        [](const std::filesystem::path& plan_path, std::optional<std::filesystem::path> out_dir) {
          auto plan = load_plan(plan_path);
          if (out_dir) plan.output_dir = *out_dir;
          py::gil_scoped_release release;
          return run_experiment(plan).rows;
        },
        py::arg("plan_path"), py::arg("output_dir") = std::nullopt);
}
