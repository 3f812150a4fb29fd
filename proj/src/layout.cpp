#include "vms/layout.hpp"

#include <json.hpp>

namespace vms {

TokenLayout::TokenLayout(std::size_t frames, std::size_t patches)
    : frames_(frames), patches_(patches) {
  if (frames == 0 || patches == 0) {
    throw EmptyVideo("token layout needs T >= 1 and P >= 1, got T=" + std::to_string(frames) +
                     " P=" + std::to_string(patches));
  }
}

std::size_t TokenLayout::cls_index(std::size_t frame) const {
  if (frame >= frames_) throw LayoutMismatch("cls_index: frame out of range");
  return frame * row_length() + cls_offset();
}

std::size_t TokenLayout::patch_index(std::size_t frame, std::size_t patch) const {
  if (frame >= frames_ || patch >= patches_) throw LayoutMismatch("patch_index: out of range");
  const std::size_t slot = patch < cls_offset() ? patch : patch + 1;
  return frame * row_length() + slot;
}

TokenLayout::Slot TokenLayout::slot_of(std::size_t flat) const {
  if (flat >= length()) throw LayoutMismatch("slot_of: flat index out of range");
  const std::size_t frame = flat / row_length(), slot = flat % row_length();
  if (slot == cls_offset()) return {frame, true, 0};
  return {frame, false, slot < cls_offset() ? slot : slot - 1};
}

VideoTokens VideoTokens::with_zero_pos(Array frames, Array cls) {
  require_rank(frames.shape(), 3, "video frames");
  const std::size_t t = frames.extent(0), d = frames.extent(2);
  return {std::move(frames), std::move(cls), Array({t, d})};
}

FlattenedVideo flatten_spacetime(const VideoTokens& v) {
  require_rank(v.frames.shape(), 3, "flatten_spacetime frames");
  const std::size_t t_len = v.frames.extent(0), p_len = v.frames.extent(1), d = v.frames.extent(2);
  TokenLayout layout(t_len, p_len);
  require_shape(v.cls.shape(), {d}, "flatten_spacetime cls");
  require_shape(v.temporal_pos.shape(), {t_len, d}, "flatten_spacetime temporal_pos");

  Array seq({layout.length(), d});
  for (std::size_t t = 0; t < t_len; ++t) {
    const std::size_t ci = layout.cls_index(t);
    for (std::size_t c = 0; c < d; ++c) seq(ci, c) = v.cls[c] + v.temporal_pos(t, c);
    for (std::size_t p = 0; p < p_len; ++p) {
      const std::size_t fi = layout.patch_index(t, p);
      for (std::size_t c = 0; c < d; ++c) seq(fi, c) = v.frames(t, p, c) + v.temporal_pos(t, c);
    }
  }
  return {std::move(seq), layout};
}

Array pool_cls(const Array& seq_out, const TokenLayout& layout) {
  require_rank(seq_out.shape(), 2, "pool_cls");
  if (seq_out.extent(0) != layout.length()) {
    throw LayoutMismatch("pool_cls: sequence length " + std::to_string(seq_out.extent(0)) +
                         " != layout length " + std::to_string(layout.length()));
  }
  const std::size_t d = seq_out.extent(1);
  Array out({d});
  for (std::size_t t = 0; t < layout.frames(); ++t) {
    const std::size_t ci = layout.cls_index(t);
    for (std::size_t c = 0; c < d; ++c) out[c] += seq_out(ci, c);
  }
  for (auto& v : out.data()) v /= static_cast<double>(layout.frames());
  return out;
}

// ---- arrangements -------------------------------------------------------

std::string_view to_string(Arrangement kind) {
  switch (kind) {
    case Arrangement::left: return "L";
    case Arrangement::right: return "R";
    case Arrangement::both: return "L+R";
    case Arrangement::middle: return "M";
  }
  return "?";
}

Arrangement parse_arrangement(std::string_view name) {
  if (name == "L") return Arrangement::left;
  if (name == "R") return Arrangement::right;
  if (name == "L+R") return Arrangement::both;
  if (name == "M") return Arrangement::middle;
  throw InvalidArgument("unknown arrangement '" + std::string(name) + "' (expected L|R|L+R|M)");
}

std::size_t arranged_length(Arrangement kind, std::size_t video_len, std::size_t text_len) {
  return video_len + (kind == Arrangement::both ? 2 : 1) * text_len;
}

namespace {

// Start offset of the video block, and where (inside it) text is spliced for M.
std::size_t video_start(Arrangement kind, std::size_t text_len) {
  return kind == Arrangement::left || kind == Arrangement::both ? text_len : 0;
}

}  // namespace

std::vector<std::size_t> video_slots(Arrangement kind, std::size_t video_len, std::size_t text_len) {
  std::vector<std::size_t> slots(video_len);
  const std::size_t start = video_start(kind, text_len), mid = video_len / 2;
  for (std::size_t i = 0; i < video_len; ++i) {
    slots[i] = kind == Arrangement::middle && i >= mid ? i + text_len : start + i;
  }
  return slots;
}

std::vector<std::size_t> text_slots(Arrangement kind, std::size_t video_len, std::size_t text_len) {
  std::vector<std::size_t> slots;
  auto run = [&](std::size_t from) {
    for (std::size_t i = 0; i < text_len; ++i) slots.push_back(from + i);
  };
  switch (kind) {
    case Arrangement::left: run(0); break;
    case Arrangement::right: run(video_len); break;
    case Arrangement::both: run(0); run(text_len + video_len); break;
    case Arrangement::middle: run(video_len / 2); break;
  }
  return slots;
}

Array arrange_multimodal(const Array& video, const Array& text, Arrangement kind,
                         const ModalityEmbeddings& emb) {
  require_rank(video.shape(), 2, "arrange_multimodal video");
  require_rank(text.shape(), 2, "arrange_multimodal text");
  const std::size_t lv = video.extent(0), lq = text.extent(0), d = video.extent(1);
  if (text.extent(1) != d) throw ShapeMismatch("arrange_multimodal: video/text widths differ");
  require_shape(emb.pos_video.shape(), {lv, d}, "arrange_multimodal pos_video");
  require_shape(emb.pos_text.shape(), {lq, d}, "arrange_multimodal pos_text");
  require_shape(emb.type_video.shape(), {d}, "arrange_multimodal type_video");
  require_shape(emb.type_text.shape(), {d}, "arrange_multimodal type_text");
  if (emb.type_video == emb.type_text) {
    throw InvalidArgument("arrange_multimodal: video and text type embeddings must differ");
  }

  Array out({arranged_length(kind, lv, lq), d});
  const auto vs = video_slots(kind, lv, lq);
  for (std::size_t i = 0; i < lv; ++i)
    for (std::size_t c = 0; c < d; ++c)
      out(vs[i], c) = video(i, c) + emb.pos_video(i, c) + emb.type_video[c];
  const auto ts = text_slots(kind, lv, lq);
  for (std::size_t j = 0; j < ts.size(); ++j) {
    const std::size_t i = j % std::max<std::size_t>(lq, 1);
    for (std::size_t c = 0; c < d; ++c)
      out(ts[j], c) = text(i, c) + emb.pos_text(i, c) + emb.type_text[c];
  }
  return out;
}

Array extract_video(const Array& seq_out, Arrangement kind, std::size_t video_len,
                    std::size_t text_len) {
  require_rank(seq_out.shape(), 2, "extract_video");
  if (seq_out.extent(0) != arranged_length(kind, video_len, text_len)) {
    throw LayoutMismatch("extract_video: sequence length " + std::to_string(seq_out.extent(0)) +
                         " does not match arrangement " + std::string(to_string(kind)) +
                         " with L_v=" + std::to_string(video_len) +
                         " L_q=" + std::to_string(text_len));
  }
  const std::size_t d = seq_out.extent(1);
  Array out({video_len, d});
  const auto vs = video_slots(kind, video_len, text_len);
  for (std::size_t i = 0; i < video_len; ++i) {
    auto src = seq_out.row(vs[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

std::string layout_to_json(const LayoutDescriptor& d) {
  nlohmann::ordered_json j;
  j["T"] = d.frames;
  j["P"] = d.patches;
  j["cls_offset"] = d.cls_offset;
  j["kind"] = std::string(to_string(d.kind));
  j["L_v"] = d.video_len;
  j["L_q"] = d.text_len;
  return j.dump();
}

LayoutDescriptor layout_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    LayoutDescriptor d;
    d.frames = j.at("T").get<std::size_t>();
    d.patches = j.at("P").get<std::size_t>();
    d.cls_offset = j.at("cls_offset").get<std::size_t>();
    d.kind = parse_arrangement(j.at("kind").get<std::string>());
    d.video_len = j.at("L_v").get<std::size_t>();
    d.text_len = j.at("L_q").get<std::size_t>();
    if (d.cls_offset != d.patches / 2) {
      throw LayoutMismatch("layout descriptor: cls_offset must equal floor(P/2)");
    }
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("layout descriptor: ") + e.what());
  }
}

}  // namespace vms
