#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "iterdet/checkpoint.hpp"
#include "iterdet/iterdet.hpp"
#include "iterdet/metrics.hpp"
#include "iterdet/nms.hpp"
#include "iterdet/train.hpp"

namespace py = pybind11;
using namespace iterdet;

namespace {

Tensor tensor_from_array(py::array_t<double, py::array::c_style |
                                                 py::array::forcecast> array) {
  Tensor t;
  for (py::ssize_t i = 0; i < array.ndim(); ++i) {
    t.shape.push_back(static_cast<int>(array.shape(i)));
  }
  t.data.assign(array.data(), array.data() + array.size());
  return t;
}

py::array_t<double> tensor_to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape.begin(), t.shape.end());
  py::array_t<double> out(shape);
  std::copy(t.data.begin(), t.data.end(), out.mutable_data());
  return out;
}

py::array_t<int> history_to_array(const HistoryMap& map) {
  py::array_t<int> out({map.height(), map.width()});
  std::copy(map.counts().begin(), map.counts().end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_iterdet, m) {
  m.doc() = "Iterative crowded-scene detection core";

  py::class_<BBox>(m, "BBox")
      .def(py::init<double, double, double, double>(), py::arg("x"),
           py::arg("y"), py::arg("w"), py::arg("h"))
      .def_readwrite("x", &BBox::x)
      .def_readwrite("y", &BBox::y)
      .def_readwrite("w", &BBox::w)
      .def_readwrite("h", &BBox::h)
      .def("area", &BBox::area)
      .def("__repr__", [](const BBox& b) {
        return "BBox(" + std::to_string(b.x) + ", " + std::to_string(b.y) +
               ", " + std::to_string(b.w) + ", " + std::to_string(b.h) + ")";
      });

  py::class_<ScoredBox>(m, "ScoredBox")
      .def(py::init([](const BBox& box, double score, int iteration) {
             return ScoredBox{box, score, iteration};
           }),
           py::arg("box"), py::arg("score"), py::arg("iteration") = 0)
      .def_readwrite("box", &ScoredBox::box)
      .def_readwrite("score", &ScoredBox::score)
      .def_readwrite("iteration", &ScoredBox::iteration);

  m.def("iou", &iou, py::arg("a"), py::arg("b"));
  m.def(
      "rasterize_history",
      [](const std::vector<BBox>& boxes, int width, int height) {
        return history_to_array(rasterize_history(boxes, width, height));
      },
      py::arg("boxes"), py::arg("width"), py::arg("height"));
  m.def(
      "clip_box",
      [](const BBox& b, int width, int height) -> py::object {
        auto clipped = clip_box(b, width, height);
        if (!clipped) return py::none();
        return py::cast(*clipped);
      },
      py::arg("box"), py::arg("width"), py::arg("height"));

  m.def("greedy_nms", &greedy_nms, py::arg("boxes"), py::arg("iou_threshold"));
  m.def("soft_nms_linear", &soft_nms_linear, py::arg("boxes"),
        py::arg("iou_threshold"), py::arg("final_threshold"));

  py::class_<SceneSpec>(m, "SceneSpec")
      .def(py::init<>())
      .def_readwrite("image_size", &SceneSpec::image_size)
      .def_readwrite("objects_min", &SceneSpec::objects_min)
      .def_readwrite("objects_max", &SceneSpec::objects_max)
      .def_readwrite("object_size_min", &SceneSpec::object_size_min)
      .def_readwrite("object_size_max", &SceneSpec::object_size_max)
      .def_readwrite("overlap_boost", &SceneSpec::overlap_boost)
      .def_readwrite("noise_sigma", &SceneSpec::noise_sigma)
      .def_readwrite("seed", &SceneSpec::seed);

  py::class_<SceneSample>(m, "SceneSample")
      .def_property_readonly(
          "image", [](const SceneSample& s) { return tensor_to_array(s.image); })
      .def_readonly("boxes", &SceneSample::boxes)
      .def_readonly("pair_counts", &SceneSample::pair_counts);

  m.def("generate_dataset", &generate_dataset, py::arg("spec"),
        py::arg("n_scenes"), py::arg("seed"));
  m.def("save_dataset", &save_dataset, py::arg("samples"), py::arg("dir"));
  m.def("load_dataset", &load_dataset, py::arg("dir"));

  py::class_<DetectorConfig>(m, "DetectorConfig")
      .def(py::init<>())
      .def_readwrite("stem_channels", &DetectorConfig::stem_channels)
      .def_readwrite("trunk_depth", &DetectorConfig::trunk_depth)
      .def_readwrite("head_stride", &DetectorConfig::head_stride)
      .def_readwrite("score_threshold", &DetectorConfig::score_threshold)
      .def_readwrite("nms_iou", &DetectorConfig::nms_iou);

  py::class_<DetectorParams>(m, "DetectorParams");

  py::class_<IterConfig>(m, "IterConfig")
      .def(py::init<>())
      .def_readwrite("max_iterations", &IterConfig::max_iterations)
      .def_readwrite("stop_score", &IterConfig::stop_score)
      .def_readwrite("max_total", &IterConfig::max_total)
      .def_property(
          "mode",
          [](const IterConfig& c) {
            return c.mode == IterMode::Standard ? "standard" : "one-per-iter";
          },
          [](IterConfig& c, const std::string& mode) {
            c.mode = mode == "one-per-iter" ? IterMode::OnePerIteration
                                            : IterMode::Standard;
          });

  py::class_<IterResult>(m, "IterResult")
      .def_readonly("boxes", &IterResult::boxes)
      .def_readonly("per_iteration_counts", &IterResult::per_iteration_counts)
      .def_readonly("iterations_run", &IterResult::iterations_run);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("lr", &TrainConfig::lr)
      .def_readwrite("seed", &TrainConfig::seed);

  m.def(
      "train_detector",
      [](const std::vector<SceneSample>& dataset,
         const DetectorConfig& det_config, const TrainConfig& train_config) {
        TrainResult result = train_detector(dataset, det_config, train_config);
        return py::make_tuple(result.params, result.epoch_loss);
      },
      py::arg("dataset"), py::arg("det_config"), py::arg("train_config"));

  m.def(
      "run_inference",
      [](py::array_t<double> image, const DetectorParams& params,
         const DetectorConfig& det_config, const IterConfig& iter_config) {
        return run_inference(tensor_from_array(image), params, det_config,
                             iter_config);
      },
      py::arg("image"), py::arg("params"), py::arg("det_config"),
      py::arg("iter_config"));

  m.def(
      "save_checkpoint",
      [](const std::string& path, const DetectorConfig& config,
         const DetectorParams& params) {
        save_checkpoint(path, {config, params});
      },
      py::arg("path"), py::arg("config"), py::arg("params"));
  m.def(
      "load_checkpoint",
      [](const std::string& path) {
        Checkpoint ckpt = load_checkpoint(path);
        return py::make_tuple(ckpt.config, ckpt.params);
      },
      py::arg("path"));

  py::class_<EvalSample>(m, "EvalSample")
      .def(py::init([](const std::vector<ScoredBox>& detections,
                       const std::vector<BBox>& ground_truth, int width,
                       int height) {
             return EvalSample{detections, ground_truth, width, height};
           }),
           py::arg("detections"), py::arg("ground_truth"), py::arg("width") = 0,
           py::arg("height") = 0);

  m.def("average_precision", &average_precision, py::arg("samples"),
        py::arg("iou_threshold") = 0.5);
  m.def("recall_at", &recall_at, py::arg("samples"),
        py::arg("score_threshold"), py::arg("iou_threshold") = 0.5);
  m.def("mmr", &mmr, py::arg("samples"), py::arg("iou_threshold") = 0.5);
  m.def(
      "crowding_stats",
      [](const std::vector<SceneSample>& dataset) {
        CrowdingStats stats = crowding_stats(dataset);
        py::dict out;
        out["objects_per_image"] = stats.objects_per_image;
        py::dict pairs;
        for (std::size_t i = 0; i < stats.thresholds.size(); ++i) {
          pairs[py::cast(stats.thresholds[i])] = stats.pairs_per_image[i];
        }
        out["pairs_per_image"] = pairs;
        return out;
      },
      py::arg("dataset"));
}
