#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "vms/array.hpp"

namespace vms {

/// Space-time token order: each frame contributes P spatial tokens in raster
/// order with its cls token inserted at cls_offset = floor(P/2); frames follow
/// each other in time order. Flat length is T * (P + 1).
class TokenLayout {
 public:
  TokenLayout(std::size_t frames, std::size_t patches);

  std::size_t frames() const noexcept { return frames_; }
  std::size_t patches() const noexcept { return patches_; }
  std::size_t cls_offset() const noexcept { return patches_ / 2; }
  std::size_t row_length() const noexcept { return patches_ + 1; }
  std::size_t length() const noexcept { return frames_ * row_length(); }

  std::size_t cls_index(std::size_t frame) const;
  std::size_t patch_index(std::size_t frame, std::size_t patch) const;

  struct Slot {
    std::size_t frame;
    bool is_cls;
    std::size_t patch;  // meaningful only when !is_cls
  };
  Slot slot_of(std::size_t flat) const;

  friend bool operator==(const TokenLayout&, const TokenLayout&) = default;

 private:
  std::size_t frames_;
  std::size_t patches_;
};

struct VideoTokens {
  Array frames;        // [T, P, D]
  Array cls;           // [D]
  Array temporal_pos;  // [T, D], zero at initialization

  // Zero temporal positions for the given frames and cls token.
  static VideoTokens with_zero_pos(Array frames, Array cls);
};

struct FlattenedVideo {
  Array seq;  // [T * (P + 1), D]
  TokenLayout layout;
};

// Adds temporal_pos[t] to every token of frame t (cls included), then flattens.
FlattenedVideo flatten_spacetime(const VideoTokens& v);
// Mean of the T cls outputs.
Array pool_cls(const Array& seq_out, const TokenLayout& layout);

// ---- video/text arrangements --------------------------------------------

enum class Arrangement { left, right, both, middle };  // L, R, L+R, M

std::string_view to_string(Arrangement kind);
Arrangement parse_arrangement(std::string_view name);  // "L", "R", "L+R", "M"

struct ModalityEmbeddings {
  Array pos_video;   // [L_v, D]
  Array pos_text;    // [L_q, D]
  Array type_video;  // [D]
  Array type_text;   // [D], must differ from type_video
};

std::size_t arranged_length(Arrangement kind, std::size_t video_len, std::size_t text_len);
// Flat positions of the video tokens, in frame order.
std::vector<std::size_t> video_slots(Arrangement kind, std::size_t video_len, std::size_t text_len);
// Flat positions of text tokens; L+R lists the left copy first.
std::vector<std::size_t> text_slots(Arrangement kind, std::size_t video_len, std::size_t text_len);

/// V~ = v + pos_video + type_video, Q~ = q + pos_text + type_text, then
///   L: [Q~; V~]   R: [V~; Q~]   L+R: [Q~; V~; Q~]   M: Q~ inserted at floor(L_v/2) inside V~
Array arrange_multimodal(const Array& video, const Array& text, Arrangement kind,
                         const ModalityEmbeddings& emb);
// Video-slot rows of a mixer output over an arranged sequence.
Array extract_video(const Array& seq_out, Arrangement kind, std::size_t video_len,
                    std::size_t text_len);

/// Serializable descriptor for golden tests:
/// {"T":..,"P":..,"cls_offset":..,"kind":"L|R|L+R|M","L_v":..,"L_q":..}
struct LayoutDescriptor {
  std::size_t frames = 0;
  std::size_t patches = 0;
  std::size_t cls_offset = 0;
  Arrangement kind = Arrangement::left;
  std::size_t video_len = 0;
  std::size_t text_len = 0;
};

std::string layout_to_json(const LayoutDescriptor& d);
LayoutDescriptor layout_from_json(const std::string& text);

}  // namespace vms
