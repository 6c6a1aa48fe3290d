#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cli.hpp"
#include "mospred/cca.hpp"
#include "mospred/checkpoint.hpp"
#include "mospred/error.hpp"
#include "mospred/feature_file.hpp"
#include "mospred/metrics.hpp"
#include "mospred/model.hpp"
#include "mospred/segmentation.hpp"
#include "mospred/trainer.hpp"

namespace py = pybind11;
using namespace mospred;

namespace {

FeatureTensor tensor_from(const FrameMatrix& data, float fps, std::string utterance_id) {
  FeatureTensor t;
  t.data = data;
  t.frames_per_second = fps;
  t.utterance_id = std::move(utterance_id);
  return t;
}

py::dict level_dict(const metrics::LevelReport& r) {
  py::dict d;
  d["n"] = r.n;
  d["mse"] = r.mse;
  d["lcc"] = r.lcc;
  d["srcc"] = r.srcc;
  d["warnings"] = r.warnings;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "MOS prediction over frozen frame-level features";

  auto base = py::register_exception<Error>(m, "MospredError", PyExc_RuntimeError);
  py::register_exception<ArgumentError>(m, "ArgumentError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<LookupError>(m, "LookupError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<UndefinedCorrelation>(m, "UndefinedCorrelation", base.ptr());
  py::register_exception<TrainingError>(m, "TrainingError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());

  m.def(
      "read_features",
      [](const std::string& path) {
        const auto t = read_feature_file(path);
        return py::make_tuple(t.data, t.frames_per_second);
      },
      py::arg("path"), "Reads a MOSF file; returns (frames x d float32 array, frames_per_second).");
  m.def(
      "write_features",
      [](const std::string& path, const FrameMatrix& data, float fps) { write_feature_file(tensor_from(data, fps, {}), path); },
      py::arg("path"), py::arg("frames"), py::arg("frames_per_second"));

  m.def(
      "segment_frames",
      [](int n, double fps, double seg, double stride) {
        std::vector<std::pair<int, int>> out;
        for (const auto& r : segment_frames(n, fps, seg, stride)) out.emplace_back(r.start, r.end);
        return out;
      },
      py::arg("num_frames"), py::arg("frames_per_second"), py::arg("seg_seconds") = 1.0,
      py::arg("stride_seconds") = 0.5, "Half-open (start, end) frame ranges of the scoring segments.");

  m.def("mse", [](const std::vector<double>& p, const std::vector<double>& t) { return metrics::mse(p, t); });
  m.def("lcc", [](const std::vector<double>& p, const std::vector<double>& t) { return metrics::lcc(p, t); });
  m.def("srcc", [](const std::vector<double>& p, const std::vector<double>& t) { return metrics::srcc(p, t); });
  m.def("fractional_ranks", [](const std::vector<double>& v) { return metrics::fractional_ranks(v); });
  m.def(
      "evaluate",
      [](const std::vector<std::string>& ids, const std::vector<std::string>& systems,
         const std::vector<double>& pred, const std::vector<double>& truth) {
        if (ids.size() != systems.size() || ids.size() != pred.size() || ids.size() != truth.size())
          throw ArgumentError("evaluate: inputs differ in length");
        std::vector<metrics::ScoredUtterance> recs;
        for (std::size_t i = 0; i < ids.size(); ++i) recs.push_back({ids[i], systems[i], pred[i], truth[i]});
        const auto r = metrics::evaluate(recs);
        py::dict d;
        d["utterance"] = level_dict(r.utterance);
        d["system"] = level_dict(r.system);
        return d;
      },
      py::arg("utterance_ids"), py::arg("system_ids"), py::arg("predicted"), py::arg("truth"));

  py::class_<cca::CcaModel>(m, "CcaModel")
      .def_readonly("weights", &cca::CcaModel::weights)
      .def_readonly("intercept", &cca::CcaModel::intercept)
      .def_readonly("ridge_lambda", &cca::CcaModel::ridge_lambda)
      .def_readonly("effective_lambda", &cca::CcaModel::effective_lambda)
      .def_readonly("train_correlation", &cca::CcaModel::train_correlation)
      .def("predict", [](const cca::CcaModel& c, const Eigen::MatrixXd& x) { return cca::cca_predict(c, x); })
      .def("correlation",
           [](const cca::CcaModel& c, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
             return cca::cca_apply(c, x, y);
           });
  m.def("cca_fit", &cca::cca_fit, py::arg("embeddings"), py::arg("scores"), py::arg("lam") = cca::kDefaultLambda);
  m.def(
      "utterance_embed",
      [](const FrameMatrix& data) { return cca::utterance_embed(tensor_from(data, 1.0F, {})); },
      py::arg("frames"), "Mean over frames.");

  py::class_<MosModel>(m, "Model")
      .def_static("load", &load_checkpoint, py::arg("path"))
      .def("save", [](const MosModel& mm, const std::string& path) { save_checkpoint(mm, path); })
      .def_property_readonly("input_dim", [](const MosModel& mm) { return mm.config.input_dim; })
      .def_property_readonly("hidden_dim", [](const MosModel& mm) { return mm.config.hidden_dim; })
      .def_property_readonly("judge_ids", [](const MosModel& mm) { return mm.judge_ids; })
      .def_property_readonly("ablation",
                             [](const MosModel& mm) {
                               py::dict d;
                               d["no_segments"] = mm.config.ablation.no_segments;
                               d["mean_pooling"] = mm.config.ablation.mean_pooling;
                               d["no_clipping"] = mm.config.ablation.no_clipping;
                               return d;
                             })
      .def(
          "predict",
          [](const MosModel& mm, const FrameMatrix& data, float fps) {
            return predict(mm, tensor_from(data, fps, {}));
          },
          py::arg("frames"), py::arg("frames_per_second"))
      .def(
          "segment_scores",
          [](const MosModel& mm, const FrameMatrix& data, float fps) {
            return forward_mean(mm, tensor_from(data, fps, {})).segment_scores;
          },
          py::arg("frames"), py::arg("frames_per_second"))
      .def(
          "judge_score",
          [](const MosModel& mm, const FrameMatrix& data, float fps, const std::string& judge) {
            return *forward_judge(mm, tensor_from(data, fps, {}), judge).judge_score;
          },
          py::arg("frames"), py::arg("frames_per_second"), py::arg("judge_id"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int rc = 0;
        {
          py::gil_scoped_release release;
          rc = cli::run(args, out, err);
        }
        return py::make_tuple(rc, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line in-process; returns (exit_code, stdout, stderr).");
}
