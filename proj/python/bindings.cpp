#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lrnerv/complexity.hpp"
#include "lrnerv/lrconv.hpp"
#include "lrnerv/metrics.hpp"
#include "lrnerv/ops.hpp"
#include "lrnerv/quantizer.hpp"
#include "lrnerv/svg.hpp"
#include "lrnerv/rd_sweep.hpp"
#include "lrnerv/video.hpp"

namespace py = pybind11;
using namespace lrnerv;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
  Array out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

py::dict report_dict(const ComplexityReport& r) {
  py::list layers;
  for (const LayerCost& l : r.layers) {
    py::dict d;
    d["name"] = l.name;
    d["params"] = l.params;
    d["macs"] = l.macs;
    d["gflops"] = l.gflops();
    layers.append(d);
  }
  py::dict d;
  d["plan"] = r.plan;
  d["params"] = r.params;
  d["macs"] = r.macs;
  d["gflops"] = r.gflops();
  d["param_reduction_pct"] = r.param_reduction_pct();
  d["gflops_reduction_pct"] = r.gflops_reduction_pct();
  d["layers"] = layers;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Low-rank separable convolutions for NeRV video decoders.";

  m.def("select_rank", &select_rank, py::arg("c_in"), py::arg("c_out"), py::arg("rho") = kDefaultRho);
  m.def("dense_param_count", &dense_param_count, py::arg("c_in"), py::arg("c_out"), py::arg("k"));
  m.def("lr_param_count", &lr_param_count, py::arg("c_in"), py::arg("c_out"), py::arg("k"), py::arg("rank"));
  m.def("conv_macs", &conv_macs);
  m.def("bpp", &bpp, py::arg("total_bits"), py::arg("frames"), py::arg("height"), py::arg("width"));

  m.def(
      "conv2d",
      [](const Array& x, const Array& w, std::optional<Array> bias, std::size_t pad) {
        const Tensor b = bias ? to_tensor(*bias) : Tensor();
        return to_array(conv2d(to_tensor(x), to_tensor(w), bias ? &b : nullptr, Padding{pad, pad}));
      },
      py::arg("x"), py::arg("w"), py::arg("bias") = py::none(), py::arg("pad") = 0);
  m.def("pixel_shuffle", [](const Array& x, std::size_t s) { return to_array(pixel_shuffle(to_tensor(x), s)); });

  py::class_<LRConvLayer>(m, "LRConv")
      .def(py::init([](std::size_t c_in, std::size_t c_out, std::size_t k, double rho, std::uint64_t seed) {
             return init_lrconv(c_in, c_out, k, rho, seed);
           }),
           py::arg("c_in"), py::arg("c_out"), py::arg("k") = 3, py::arg("rho") = kDefaultRho, py::arg("seed") = 0)
      .def_property_readonly("rank", &LRConvLayer::rank)
      .def_property_readonly("proj", [](const LRConvLayer& l) { return to_array(l.proj); })
      .def_property_readonly("recon", [](const LRConvLayer& l) { return to_array(l.recon); })
      .def_property_readonly("bias", [](const LRConvLayer& l) { return to_array(l.bias); })
      .def("forward", [](const LRConvLayer& l, const Array& x) { return to_array(lrconv_forward(l, to_tensor(x))); })
      .def("effective_kernel", [](const LRConvLayer& l) { return to_array(compose_effective_kernel(l)); });

  m.def("parse_plan", [](const std::string& s) { return FactorizationPlan::parse(s).stages; });
  m.def("plan_label", [](const std::string& s) { return FactorizationPlan::parse(s).label(); });

  m.def("psnr", [](const Array& a, const Array& b) { return psnr(to_tensor(a), to_tensor(b)); });
  m.def("ssim", [](const Array& a, const Array& b) { return ssim(to_tensor(a), to_tensor(b)); });
  m.def(
      "ms_ssim", [](const Array& a, const Array& b, std::size_t scales) { return ms_ssim(to_tensor(a), to_tensor(b), scales); },
      py::arg("a"), py::arg("b"), py::arg("scales") = 5);

  m.def(
      "quantize",
      [](const Array& w, int bits, bool per_channel) {
        const QuantizedTensor q =
            quantize_tensor(to_tensor(w), bits, per_channel ? Granularity::kPerChannel : Granularity::kPerTensor);
        py::array_t<std::int8_t> values(std::vector<py::ssize_t>(q.shape.begin(), q.shape.end()));
        std::copy(q.values.begin(), q.values.end(), values.mutable_data());
        return py::make_tuple(values, q.scales);
      },
      py::arg("w"), py::arg("bits") = kDefaultBits, py::arg("per_channel") = false);
  m.def(
      "fake_quantize",
      [](const Array& w, int bits, bool per_channel) {
        return to_array(dequantize_tensor(
            quantize_tensor(to_tensor(w), bits, per_channel ? Granularity::kPerChannel : Granularity::kPerTensor)));
      },
      py::arg("w"), py::arg("bits") = kDefaultBits, py::arg("per_channel") = false);

  m.def(
      "model_report",
      [](const std::string& config_path, const std::string& plan, double rho) {
        return report_dict(model_report(load_config(config_path).decoder, FactorizationPlan::parse(plan, rho)));
      },
      py::arg("config"), py::arg("plan") = "-", py::arg("rho") = kDefaultRho);

  m.def("synthetic_video", [](std::size_t n, std::size_t h, std::size_t w) {
    py::list out;
    for (const Tensor& f : synthetic_video(n, h, w)) out.append(to_array(f));
    return out;
  });

  m.def("rd_plot_svg", [](const std::string& csv_text) { return render_svg(rd_panels(parse_rd_csv(csv_text))); });
}
