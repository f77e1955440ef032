// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtir/checkpoint.hpp"
#include "dtir/degrade.hpp"
#include "dtir/diffusion.hpp"
#include "dtir/metrics.hpp"
#include "dtir/model.hpp"
#include "dtir/tensor.hpp"

namespace py = pybind11;
using namespace dtir;

namespace {

using FArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Tensor tensor_from_array(const FArray& a) {
    py::buffer_info info = a.request();
    Shape shape(info.shape.begin(), info.shape.end());
    std::vector<float> data(static_cast<const float*>(info.ptr),
                            static_cast<const float*>(info.ptr) + info.size);
    return Tensor::from_data(shape, std::move(data));
}

py::array array_from_tensor(const Tensor& t) {
    const auto& shape = t.shape();
    std::vector<py::ssize_t> dims(shape.begin(), shape.end());
    py::array_t<float> out(dims);
    std::copy(t.data(), t.data() + t.numel(), out.mutable_data());
    return out;
}

struct PyModel {
    ParamStore params;
    ModelSpec spec;
    bool use_moe = false;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "diffusion-training-enhanced image restoration core";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
    py::register_exception<NumericsError>(m, "NumericsError", PyExc_FloatingPointError);

    py::class_<NoiseSchedule>(m, "NoiseSchedule")
        .def_readonly("T", &NoiseSchedule::T)
        .def_readonly("beta", &NoiseSchedule::beta)
        .def_readonly("alpha", &NoiseSchedule::alpha)
        .def_readonly("alpha_bar", &NoiseSchedule::alpha_bar)
        .def_readonly("sigma", &NoiseSchedule::sigma);

    m.def("build_schedule", &build_schedule,
          py::arg("T") = 50, py::arg("beta_start") = 0.02f,
          py::arg("beta_end") = 0.30f, py::arg("terminal_max") = 1e-3f);

    m.def("forward_diffuse",
          [](const FArray& x0, const FArray& eps, int t, const NoiseSchedule& sched) {
              NoTape guard;
              return array_from_tensor(
                  forward_diffuse(tensor_from_array(x0), t, tensor_from_array(eps), sched));
          },
          py::arg("x0"), py::arg("eps"), py::arg("t"), py::arg("sched"));

    m.def("make_clean",
          [](std::uint64_t seed, int n, int channels, int height, int width) {
              auto imgs = make_clean(seed, n, Shape{channels, height, width});
              py::list out;
              for (const auto& img : imgs) out.append(array_from_tensor(img));
              return out;
          },
          py::arg("seed"), py::arg("n"), py::arg("channels") = 1,
          py::arg("height") = 32, py::arg("width") = 32);

    m.def("degrade",
          [](const FArray& clean, const std::string& tag, std::uint64_t seed) {
              auto deg = Degradation::parse(tag);
              deg.validate();
              return array_from_tensor(degrade(tensor_from_array(clean), deg, seed));
          },
          py::arg("clean"), py::arg("tag"), py::arg("seed"));

    m.def("psnr",
          [](const FArray& a, const FArray& b) {
              return psnr(tensor_from_array(a), tensor_from_array(b));
          },
          py::arg("a"), py::arg("b"));
    m.def("ssim",
          [](const FArray& a, const FArray& b) {
              return ssim(tensor_from_array(a), tensor_from_array(b));
          },
          py::arg("a"), py::arg("b"));

    py::class_<PyModel>(m, "Model")
        .def(py::init([](int in_channels, int base_channels, int depth, int embed_dim,
                         int n_experts, int adapter_dim, bool use_moe, std::uint64_t seed) {
                 ModelSpec spec;
                 spec.in_channels = in_channels;
                 spec.base_channels = base_channels;
                 spec.depth = depth;
                 spec.embed_dim = embed_dim;
                 spec.n_experts = n_experts;
                 spec.adapter_dim = adapter_dim;
                 PyModel model;
                 model.params = build_model(spec, seed);
                 model.spec = spec;
                 model.use_moe = use_moe;
                 return model;
             }),
             py::arg("in_channels") = 1, py::arg("base_channels") = 16,
             py::arg("depth") = 3, py::arg("embed_dim") = 32,
             py::arg("n_experts") = 10, py::arg("adapter_dim") = 4,
             py::arg("use_moe") = false, py::arg("seed") = 0)
        .def_property_readonly("n_scalars",
                               [](const PyModel& self) { return self.params.n_scalars(); })
        .def("forward",
             [](PyModel& self, const FArray& x, const std::vector<int>& ts) {
                 NoTape guard;
                 return array_from_tensor(forward(
                     self.params, self.spec, tensor_from_array(x), ts, self.use_moe));
             },
             py::arg("x"), py::arg("ts"))
        .def("save",
             [](PyModel& self, const std::string& path) {
                 save_model_checkpoint(self.params, self.spec, self.use_moe, path);
             },
             py::arg("path"))
        .def_static("load", [](const std::string& path) {
            LoadedModel loaded = load_model_checkpoint(path);
            PyModel model;
            model.params = std::move(loaded.params);
            model.spec = loaded.spec;
            model.use_moe = loaded.use_moe;
            return model;
        },
        py::arg("path"));

    m.def("sample",
          [](PyModel& self, const NoiseSchedule& sched, std::uint64_t seed,
             int channels, int height, int width) {
              return array_from_tensor(
                  sample(self.params, self.spec, sched, Shape{channels, height, width}, seed));
          },
          py::arg("model"), py::arg("sched"), py::arg("seed"), py::arg("channels") = 1,
          py::arg("height") = 32, py::arg("width") = 32);

    m.def("restore",
          [](PyModel& self, const FArray& degraded, int t_mat) {
              return array_from_tensor(restore_image(
                  self.params, self.spec, tensor_from_array(degraded), t_mat, self.use_moe));
          },
          py::arg("model"), py::arg("degraded"), py::arg("t_mat"));
}
