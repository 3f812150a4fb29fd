#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vms/attention.hpp"
#include "vms/audit.hpp"
#include "vms/bench.hpp"
#include "vms/blocks.hpp"
#include "vms/error.hpp"
#include "vms/golden.hpp"
#include "vms/layout.hpp"
#include "vms/ssm.hpp"
#include "vms/train.hpp"

namespace py = pybind11;

namespace {

using NdArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

vms::Array to_array(const NdArray& a) {
  vms::Shape shape(a.shape(), a.shape() + a.ndim());
  if (a.ndim() == 0) shape = {1};
  return vms::Array(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

NdArray to_numpy(const vms::Array& a) {
  NdArray out(a.shape());
  std::copy(a.data().begin(), a.data().end(), out.mutable_data());
  return out;
}

vms::SsmParams ssm_from_dict(const py::dict& d) {
  const vms::Array a_log = to_array(d["a_log"].cast<NdArray>());
  const vms::Array dt_in = to_array(d["dt_in"].cast<NdArray>());
  vms::SsmParams p = vms::zero_ssm_params({a_log.extent(0), a_log.extent(1), dt_in.extent(1)});
  p.for_each([&](std::string_view name, vms::Array& t) {
    t = to_array(d[py::str(std::string(name))].cast<NdArray>());
  });
  return p;
}

py::dict ssm_to_dict(const vms::SsmParams& p) {
  py::dict d;
  p.for_each([&](std::string_view name, const vms::Array& t) { d[py::str(std::string(name))] = to_numpy(t); });
  return d;
}

vms::BlockConfig make_config(const std::string& kind, std::size_t d, std::size_t e, std::size_t n,
                             std::uint64_t seed) {
  vms::BlockConfig cfg;
  cfg.kind = vms::parse_block_kind(kind);
  cfg.d_model = d;
  cfg.expand = e;
  cfg.d_state = n;
  cfg.seed = seed;
  return cfg;
}

// Holder so the variant is exposed as one Python class.
struct PyBlock {
  vms::Block b;
};

}  // namespace

PYBIND11_MODULE(_vmsuite, m) {
  m.doc() = "Selective-scan kernels, bidirectional token mixers and video token layouts";

  auto base = py::register_exception<vms::Error>(m, "VmsError", PyExc_ValueError);
  py::register_exception<vms::ShapeMismatch>(m, "ShapeMismatch", base.ptr());
  py::register_exception<vms::OddInnerWidth>(m, "OddInnerWidth", base.ptr());
  py::register_exception<vms::LayoutMismatch>(m, "LayoutMismatch", base.ptr());
  py::register_exception<vms::EmptyVideo>(m, "EmptyVideo", base.ptr());
  py::register_exception<vms::InsufficientPoints>(m, "InsufficientPoints", base.ptr());
  py::register_exception<vms::GoldenMismatch>(m, "GoldenMismatch", base.ptr());

  m.def("discretize_zoh",
        [](const NdArray& a, const NdArray& b, const NdArray& delta) {
          const auto z = vms::discretize_zoh(to_array(a), to_array(b), to_array(delta));
          return py::make_tuple(to_numpy(z.a_bar), to_numpy(z.b_bar));
        },
        py::arg("a"), py::arg("b"), py::arg("delta"));

  m.def("init_ssm_params",
        [](std::size_t d_inner, std::size_t d_state, std::size_t dt_rank, std::uint64_t seed) {
          vms::Rng rng(seed);
          return ssm_to_dict(vms::init_ssm_params({d_inner, d_state, dt_rank}, rng));
        },
        py::arg("d_inner"), py::arg("d_state") = 16, py::arg("dt_rank") = 1, py::arg("seed") = 0);

  m.def("selective_scan",
        [](const py::dict& params, const NdArray& x, std::size_t chunk) {
          const auto p = ssm_from_dict(params);
          const auto xa = to_array(x);
          return to_numpy(chunk ? vms::selective_scan_chunked(p, xa, chunk) : vms::selective_scan(p, xa));
        },
        py::arg("params"), py::arg("x"), py::arg("chunk") = 0,
        "Selective scan with h0 = 0; chunk = 0 scans the whole sequence at once.");

  m.def("selective_scan_backward",
        [](const py::dict& params, const NdArray& x, const NdArray& dy) {
          const auto g = vms::selective_scan_backward(ssm_from_dict(params), to_array(x), to_array(dy));
          return py::make_tuple(ssm_to_dict(g.params), to_numpy(g.dx));
        },
        py::arg("params"), py::arg("x"), py::arg("dy"));

  py::class_<PyBlock>(m, "Block")
      .def(py::init([](const std::string& kind, std::size_t d, std::size_t e, std::size_t n,
                       std::uint64_t seed) { return PyBlock{vms::make_block(make_config(kind, d, e, n, seed))}; }),
           py::arg("kind"), py::arg("d_model"), py::arg("expand") = 2, py::arg("d_state") = 16,
           py::arg("seed") = 0)
      .def("__call__", [](const PyBlock& pb, const NdArray& x) { return to_numpy(vms::block_forward(pb.b, to_array(x))); })
      .def("backward",
           [](const PyBlock& pb, const NdArray& x, const NdArray& dy) {
             const auto g = vms::block_backward(pb.b, to_array(x), to_array(dy));
             py::dict grads;
             vms::for_each_tensor(g.params, [&](const std::string& name, const vms::Array& a) {
               grads[py::str(name)] = to_numpy(a);
             });
             return py::make_tuple(grads, to_numpy(g.dx));
           })
      .def("tensors",
           [](const PyBlock& pb) {
             py::dict out;
             vms::for_each_tensor(pb.b, [&](const std::string& name, const vms::Array& a) {
               out[py::str(name)] = to_numpy(a);
             });
             return out;
           })
      .def("count_params",
           [](const PyBlock& pb) {
             const auto c = vms::count_params(pb.b);
             py::dict d;
             d["static"] = c.static_weights;
             d["dynamic"] = c.dynamic;
             d["dynamic_unique"] = c.dynamic_unique;
             d["bias"] = c.bias;
             return d;
           })
      .def_property_readonly("kind", [](const PyBlock& pb) {
        return std::string(vms::to_string(vms::block_config(pb.b).kind));
      });

  m.def("adapter_forward",
        [](const PyBlock& inner, const NdArray& tokens, double gate, const std::string& style) {
          vms::AdapterConfig cfg;
          cfg.style = style == "frozen" ? vms::AdapterStyle::frozen : vms::AdapterStyle::vanilla;
          if (style != "frozen" && style != "vanilla") throw vms::InvalidArgument("style must be vanilla|frozen");
          cfg.gate = gate;
          cfg.inner = inner.b;
          return to_numpy(vms::adapter_forward(cfg, to_array(tokens)));
        },
        py::arg("inner"), py::arg("tokens"), py::arg("gate") = 0.0, py::arg("style") = "vanilla");

  m.def("flatten_spacetime",
        [](const NdArray& frames, const NdArray& cls, std::optional<NdArray> temporal_pos) {
          const auto v = temporal_pos ? vms::VideoTokens{to_array(frames), to_array(cls), to_array(*temporal_pos)}
                                      : vms::VideoTokens::with_zero_pos(to_array(frames), to_array(cls));
          const auto f = vms::flatten_spacetime(v);
          std::vector<std::size_t> cls_idx;
          for (std::size_t t = 0; t < f.layout.frames(); ++t) cls_idx.push_back(f.layout.cls_index(t));
          return py::make_tuple(to_numpy(f.seq), cls_idx);
        },
        py::arg("frames"), py::arg("cls"), py::arg("temporal_pos") = py::none());

  m.def("pool_cls",
        [](const NdArray& seq, std::size_t frames, std::size_t patches) {
          return to_numpy(vms::pool_cls(to_array(seq), vms::TokenLayout(frames, patches)));
        },
        py::arg("seq"), py::arg("frames"), py::arg("patches"));

  m.def("arrange_multimodal",
        [](const NdArray& video, const NdArray& text, const std::string& kind, const NdArray& pos_video,
           const NdArray& pos_text, const NdArray& type_video, const NdArray& type_text) {
          const vms::ModalityEmbeddings emb{to_array(pos_video), to_array(pos_text), to_array(type_video),
                                            to_array(type_text)};
          return to_numpy(vms::arrange_multimodal(to_array(video), to_array(text), vms::parse_arrangement(kind), emb));
        },
        py::arg("video"), py::arg("text"), py::arg("kind"), py::arg("pos_video"), py::arg("pos_text"),
        py::arg("type_video"), py::arg("type_text"));

  m.def("extract_video",
        [](const NdArray& seq, const std::string& kind, std::size_t video_len, std::size_t text_len) {
          return to_numpy(vms::extract_video(to_array(seq), vms::parse_arrangement(kind), video_len, text_len));
        },
        py::arg("seq"), py::arg("kind"), py::arg("video_len"), py::arg("text_len"));

  m.def("attention_naive",
        [](const NdArray& x, const NdArray& wq, const NdArray& wk, const NdArray& wv, const NdArray& wo) {
          const vms::AttentionWeights w{to_array(wq), to_array(wk), to_array(wv), to_array(wo)};
          return to_numpy(vms::attention_naive(to_array(x), w));
        },
        py::arg("x"), py::arg("wq"), py::arg("wk"), py::arg("wv"), py::arg("wo"));

  m.def("fit_loglog",
        [](const std::vector<double>& tokens, const std::vector<double>& wall) {
          const auto f = vms::fit_loglog(tokens, wall);
          return py::make_tuple(f.slope, f.intercept, f.r2);
        },
        py::arg("tokens"), py::arg("wall"), "Returns (slope, intercept, r2) in log-log space.");

  m.def("param_audit",
        []() {
          const auto report = vms::param_audit(vms::default_audit_config());
          return py::make_tuple(report.ok(), report.to_text());
        });

  m.def("toy_train",
        [](const std::string& kind, std::uint64_t seed, std::size_t steps) {
          vms::TrainConfig cfg;
          cfg.kind = vms::parse_block_kind(kind);
          cfg.seed = seed;
          cfg.steps = steps;
          py::gil_scoped_release release;
          return vms::toy_train(cfg);
        },
        py::arg("kind") = "dbm", py::arg("seed") = 7, py::arg("steps") = 200);

  m.def("golden_verify",
        [](const std::string& dir) {
          const auto report = vms::golden_verify(dir);
          return py::make_tuple(report.ok(), report.to_text());
        },
        py::arg("dir"));
}
