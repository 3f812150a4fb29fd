#include "vms/golden.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vms/blocks.hpp"
#include "vms/error.hpp"
#include "vms/layout.hpp"
#include "vms/rng.hpp"
#include "vms/ssm.hpp"

namespace vms {

namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kManifest = "manifest.json";

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

double normwise_err(const Array& got, const Array& want) {
  if (got.shape() != want.shape()) return INFINITY;
  double diff = 0.0, scale = 1.0;
  const auto g = got.data(), w = want.data();
  for (std::size_t i = 0; i < g.size(); ++i) {
    diff = std::max(diff, std::abs(g[i] - w[i]));
    scale = std::max(scale, std::abs(w[i]));
  }
  return diff / scale;
}

// ---- parameter (de)flattening ------------------------------------------

std::vector<NamedArray> block_tensors(const Block& block) {
  std::vector<NamedArray> out;
  for_each_tensor(block, [&](const std::string& name, const Array& a) {
    out.push_back({"param." + name, a});
  });
  return out;
}

Block block_from_tensors(const BlockConfig& cfg, const std::vector<NamedArray>& arrays) {
  Block block = zero_block(cfg);
  for_each_tensor(block, [&](const std::string& name, Array& a) {
    const Array& src = find_array(arrays, "param." + name);
    require_shape(src.shape(), a.shape(), name.c_str());
    a = src;
  });
  return block;
}

std::vector<NamedArray> ssm_tensors(const SsmParams& p) {
  std::vector<NamedArray> out;
  p.for_each([&](std::string_view name, const Array& a) {
    out.push_back({"ssm." + std::string(name), a});
  });
  return out;
}

SsmParams ssm_from_tensors(const std::vector<NamedArray>& arrays) {
  const Array& a_log = find_array(arrays, "ssm.a_log");
  const Array& dt_in = find_array(arrays, "ssm.dt_in");
  require_rank(a_log.shape(), 2, "ssm.a_log");
  require_rank(dt_in.shape(), 2, "ssm.dt_in");
  SsmParams p = zero_ssm_params({a_log.extent(0), a_log.extent(1), dt_in.extent(1)});
  p.for_each([&](std::string_view name, Array& a) {
    const std::string full = "ssm." + std::string(name);
    const Array& src = find_array(arrays, full);
    require_shape(src.shape(), a.shape(), full.c_str());
    a = src;
  });
  return p;
}

Json parse_meta(const std::string& meta) {
  try {
    return Json::parse(meta);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("golden metadata: ") + e.what());
  }
}

AdapterStyle parse_style(const std::string& s) {
  if (s == "vanilla") return AdapterStyle::vanilla;
  if (s == "frozen") return AdapterStyle::frozen;
  throw FormatError("golden metadata: unknown adapter style '" + s + "'");
}

// ---- case builders ------------------------------------------------------

GoldenCase finish(std::string name, std::string kind, Json meta, std::vector<NamedArray> inputs) {
  GoldenCase c{std::move(name), std::move(kind), meta.dump(), std::move(inputs), {}};
  c.outputs = golden_compute(c.kind, c.meta, c.inputs);
  return c;
}

GoldenCase zoh_case() {
  Rng rng(101);
  const std::size_t di = 4, n = 3, m = 5;
  Array a = rng.uniform_array({di, n}, 0.1, 2.0);
  for (auto& v : a.data()) v = -v;
  return finish("zoh", "zoh", Json::object(),
                {{"a", a},
                 {"b", rng.uniform_array({di, n}, -1.0, 1.0)},
                 {"delta", rng.uniform_array({m, di}, 1e-3, 1.0)}});
}

GoldenCase scan_case() {
  Rng rng(102);
  const std::size_t di = 6, n = 4, m = 12;
  std::vector<NamedArray> inputs = ssm_tensors(init_ssm_params({di, n, 2}, rng));
  inputs.push_back({"x", rng.uniform_array({m, di}, -1.0, 1.0)});
  return finish("selective_scan", "selective_scan", Json::object(), std::move(inputs));
}

GoldenCase block_case(BlockKind kind, std::uint64_t seed) {
  BlockConfig cfg;
  cfg.kind = kind;
  cfg.d_model = 4;
  cfg.d_state = 4;
  cfg.seed = seed;
  Rng rng(seed + 1000);
  std::vector<NamedArray> inputs = block_tensors(make_block(cfg));
  inputs.push_back({"x", rng.uniform_array({8, cfg.d_model}, -1.0, 1.0)});
  Json meta;
  meta["config"] = Json::parse(block_config_to_json(cfg));
  return finish(std::string(to_string(kind)) + "_block", "block", meta, std::move(inputs));
}

GoldenCase adapter_case(AdapterStyle style) {
  BlockConfig cfg;
  cfg.kind = BlockKind::dbm;
  cfg.d_model = 4;
  cfg.d_state = 3;
  cfg.seed = 31;
  Rng rng(style == AdapterStyle::vanilla ? 201 : 202);
  const std::size_t d = cfg.d_model;
  std::vector<NamedArray> inputs = block_tensors(make_block(cfg));
  inputs.push_back({"tokens", rng.uniform_array({3, 5, d}, -1.0, 1.0)});
  inputs.push_back({"gate", Array({1}, {0.4})});
  inputs.push_back({"spatial.weight", rng.uniform_array({d, d}, -0.5, 0.5)});
  Json meta;
  meta["config"] = Json::parse(block_config_to_json(cfg));
  meta["style"] = style == AdapterStyle::vanilla ? "vanilla" : "frozen";
  return finish(std::string("adapter_") + meta["style"].get<std::string>(), "adapter", meta,
                std::move(inputs));
}

GoldenCase flatten_case() {
  Rng rng(301);
  const std::size_t t = 3, p = 5, d = 4;
  Json meta;
  meta["T"] = t;
  meta["P"] = p;
  return finish("flatten_spacetime", "flatten", meta,
                {{"frames", rng.uniform_array({t, p, d}, -1.0, 1.0)},
                 {"cls", rng.uniform_array({d}, -1.0, 1.0)},
                 {"temporal_pos", rng.uniform_array({t, d}, -0.1, 0.1)}});
}

GoldenCase pool_case() {
  Rng rng(302);
  const std::size_t t = 4, p = 4, d = 3;
  Json meta;
  meta["T"] = t;
  meta["P"] = p;
  return finish("pool_cls", "pool", meta,
                {{"seq", rng.uniform_array({t * (p + 1), d}, -1.0, 1.0)}});
}

GoldenCase arrange_case(Arrangement kind, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t lv = 5, lq = 2, d = 3;
  LayoutDescriptor desc;
  desc.frames = 1;
  desc.patches = lv - 1;
  desc.cls_offset = desc.patches / 2;
  desc.kind = kind;
  desc.video_len = lv;
  desc.text_len = lq;
  Json meta;
  meta["layout"] = Json::parse(layout_to_json(desc));
  std::string name = "arrange_" + std::string(to_string(kind));
  for (auto& ch : name)
    if (ch == '+') ch = '_';
  return finish(name, "arrange", meta,
                {{"video", rng.uniform_array({lv, d}, -1.0, 1.0)},
                 {"text", rng.uniform_array({lq, d}, -1.0, 1.0)},
                 {"pos_video", rng.uniform_array({lv, d}, -0.1, 0.1)},
                 {"pos_text", rng.uniform_array({lq, d}, -0.1, 0.1)},
                 {"type_video", rng.uniform_array({d}, -0.1, 0.1)},
                 {"type_text", rng.uniform_array({d}, -0.1, 0.1)}});
}

SpatialMixer linear_mixer(const Array& w) {
  return [w](const Array& a) { return matmul(a, w); };
}

}  // namespace

std::vector<GoldenCase> golden_cases() {
  std::vector<GoldenCase> cases;
  cases.push_back(zoh_case());
  cases.push_back(scan_case());
  cases.push_back(block_case(BlockKind::mamba, 11));
  cases.push_back(block_case(BlockKind::vim, 12));
  cases.push_back(block_case(BlockKind::dbm, 13));
  cases.push_back(adapter_case(AdapterStyle::vanilla));
  cases.push_back(adapter_case(AdapterStyle::frozen));
  cases.push_back(flatten_case());
  cases.push_back(pool_case());
  cases.push_back(arrange_case(Arrangement::left, 401));
  cases.push_back(arrange_case(Arrangement::right, 402));
  cases.push_back(arrange_case(Arrangement::both, 403));
  cases.push_back(arrange_case(Arrangement::middle, 404));
  return cases;
}

std::vector<NamedArray> golden_compute(const std::string& kind, const std::string& meta_text,
                                       const std::vector<NamedArray>& in) {
  const Json meta = parse_meta(meta_text);
  if (kind == "zoh") {
    const auto z = discretize_zoh(find_array(in, "a"), find_array(in, "b"), find_array(in, "delta"));
    return {{"a_bar", z.a_bar}, {"b_bar", z.b_bar}};
  }
  if (kind == "selective_scan") {
    const SsmParams p = ssm_from_tensors(in);
    const auto r = selective_scan_from(p, find_array(in, "x"), Array({p.d_inner(), p.d_state()}), 5);
    return {{"y", r.y}, {"h_last", r.h}};
  }
  if (kind == "block") {
    const BlockConfig cfg = block_config_from_json(meta.at("config").dump());
    return {{"y", block_forward(block_from_tensors(cfg, in), find_array(in, "x"))}};
  }
  if (kind == "adapter") {
    const BlockConfig cfg = block_config_from_json(meta.at("config").dump());
    AdapterConfig ac;
    ac.style = parse_style(meta.at("style").get<std::string>());
    ac.gate = find_array(in, "gate")[0];
    ac.inner = block_from_tensors(cfg, in);
    const Array& tokens = find_array(in, "tokens");
    return {{"out", adapter_forward(ac, tokens, linear_mixer(find_array(in, "spatial.weight")))},
            {"out_no_spatial", adapter_forward(ac, tokens)}};
  }
  if (kind == "flatten") {
    const VideoTokens v{find_array(in, "frames"), find_array(in, "cls"),
                        find_array(in, "temporal_pos")};
    const auto f = flatten_spacetime(v);
    Array cls_idx({f.layout.frames()});
    for (std::size_t t = 0; t < f.layout.frames(); ++t) cls_idx[t] = double(f.layout.cls_index(t));
    return {{"seq", f.seq}, {"cls_index", cls_idx}};
  }
  if (kind == "pool") {
    const TokenLayout layout(meta.at("T").get<std::size_t>(), meta.at("P").get<std::size_t>());
    return {{"pooled", pool_cls(find_array(in, "seq"), layout)}};
  }
  if (kind == "arrange") {
    const LayoutDescriptor d = layout_from_json(meta.at("layout").dump());
    const ModalityEmbeddings emb{find_array(in, "pos_video"), find_array(in, "pos_text"),
                                 find_array(in, "type_video"), find_array(in, "type_text")};
    const Array seq = arrange_multimodal(find_array(in, "video"), find_array(in, "text"), d.kind, emb);
    return {{"seq", seq}, {"video_out", extract_video(seq, d.kind, d.video_len, d.text_len)}};
  }
  throw FormatError("golden: unknown case kind '" + kind + "'");
}

std::optional<std::vector<NamedArray>> golden_compute_f32(const std::string& kind,
                                                          const std::string& meta_text,
                                                          const std::vector<NamedArray>& in) {
  if (kind == "selective_scan") {
    const SsmParamsF p = ssm_from_tensors(in).cast<float>();
    const ArrayF x = find_array(in, "x").cast<float>();
    const auto r = selective_scan_from(p, x, ArrayF({p.d_inner(), p.d_state()}), 5);
    return std::vector<NamedArray>{{"y", r.y.cast<double>()}, {"h_last", r.h.cast<double>()}};
  }
  if (kind == "block") {
    const BlockConfig cfg = block_config_from_json(parse_meta(meta_text).at("config").dump());
    const BlockF b = to_float(block_from_tensors(cfg, in));
    return std::vector<NamedArray>{
        {"y", block_forward(b, find_array(in, "x").cast<float>()).cast<double>()}};
  }
  return std::nullopt;
}

void golden_generate(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Json manifest;
  manifest["format"] = 1;
  manifest["cases"] = Json::array();
  for (const auto& c : golden_cases()) {
    Json jc;
    jc["name"] = c.name;
    jc["kind"] = c.kind;
    jc["file"] = c.name + ".vmsa";
    jc["meta"] = Json::parse(c.meta);
    jc["tensors"] = Json::array();
    std::vector<NamedArray> all;
    auto add = [&](const std::vector<NamedArray>& arrays, const char* role) {
      for (const auto& a : arrays) {
        Json jt;
        jt["name"] = a.name;
        jt["role"] = role;
        jt["shape"] = a.array.shape();
        jt["fnv1a64"] = hex64(fnv1a64(a.array));
        jc["tensors"].push_back(jt);
        all.push_back(a);
      }
    };
    add(c.inputs, "input");
    add(c.outputs, "output");
    write_arrays(dir / (c.name + ".vmsa"), all);
    manifest["cases"].push_back(jc);
  }
  std::ofstream f(dir / kManifest);
  if (!f) throw FormatError("cannot write " + (dir / kManifest).string());
  f << manifest.dump(2) << '\n';
}

bool GoldenReport::ok() const {
  for (const auto& c : checks)
    if (!c.ok) return false;
  return !checks.empty();
}

std::string GoldenReport::to_text() const {
  std::ostringstream os;
  os << "# golden verify, tolerance " << tolerance << "\n";
  for (const auto& c : checks) {
    os << (c.ok ? "ok   " : "FAIL ") << c.case_name << '/' << c.tensor << "  max_err=" << c.max_err;
    if (!c.note.empty()) os << "  " << c.note;
    os << '\n';
  }
  if (!f32_drift.empty()) {
    os << "# f32 recompute vs f64 golden (informational)\n";
    for (const auto& c : f32_drift) {
      os << "     " << c.case_name << '/' << c.tensor << "  max_err=" << c.max_err << '\n';
    }
  }
  return os.str();
}

GoldenReport golden_verify(const std::filesystem::path& dir, double tolerance) {
  GoldenReport report;
  report.tolerance = tolerance;
  std::ifstream mf(dir / kManifest);
  if (!mf) throw FormatError("golden: no manifest at " + (dir / kManifest).string());
  Json manifest;
  try {
    manifest = Json::parse(mf);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("golden manifest: ") + e.what());
  }

  for (const auto& jc : manifest.at("cases")) {
    const std::string name = jc.at("name").get<std::string>();
    auto fail = [&](const std::string& tensor, const std::string& note, double err = INFINITY) {
      report.checks.push_back({name, tensor, err, false, note});
    };
    std::vector<NamedArray> stored;
    try {
      stored = read_arrays(dir / jc.at("file").get<std::string>());
    } catch (const Error& e) {
      fail("<file>", e.what());
      continue;
    }

    std::vector<NamedArray> inputs, outputs;
    bool intact = true;
    for (const auto& jt : jc.at("tensors")) {
      const std::string tname = jt.at("name").get<std::string>();
      const auto it = std::find_if(stored.begin(), stored.end(),
                                   [&](const NamedArray& a) { return a.name == tname; });
      if (it == stored.end()) {
        fail(tname, "missing from container");
        intact = false;
        continue;
      }
      if (it->array.shape() != jt.at("shape").get<Shape>()) {
        fail(tname, "shape differs from manifest");
        intact = false;
        continue;
      }
      if (hex64(fnv1a64(it->array)) != jt.at("fnv1a64").get<std::string>()) {
        fail(tname, "checksum mismatch (stored bytes changed)");
        intact = false;
        continue;
      }
      (jt.at("role") == "input" ? inputs : outputs).push_back(*it);
    }
    if (!intact) continue;

    const std::string kind = jc.at("kind").get<std::string>();
    const std::string meta = jc.at("meta").dump();
    std::vector<NamedArray> fresh;
    try {
      fresh = golden_compute(kind, meta, inputs);
    } catch (const Error& e) {
      fail("<compute>", e.what());
      continue;
    }
    for (const auto& want : outputs) {
      const auto it = std::find_if(fresh.begin(), fresh.end(),
                                   [&](const NamedArray& a) { return a.name == want.name; });
      const double err = it == fresh.end() ? INFINITY : normwise_err(it->array, want.array);
      report.checks.push_back({name, want.name, err, err <= tolerance, ""});
    }
    if (const auto f32 = golden_compute_f32(kind, meta, inputs)) {
      for (const auto& got : *f32) {
        const Array& want = find_array(outputs, got.name);
        report.f32_drift.push_back({name, got.name, normwise_err(got.array, want), true, ""});
      }
    }
  }
  return report;
}

void require_golden_pass(const GoldenReport& report) {
  if (report.ok()) return;
  std::ostringstream os;
  os << "golden verify failed:";
  for (const auto& c : report.checks) {
    if (c.ok) continue;
    os << "\n  " << c.case_name << '/' << c.tensor << " max_err=" << c.max_err;
    if (!c.note.empty()) os << " (" << c.note << ')';
  }
  throw GoldenMismatch(os.str());
}

}  // namespace vms
