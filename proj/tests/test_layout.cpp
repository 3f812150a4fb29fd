#include <gtest/gtest.h>

#include <set>

#include "oracles.hpp"
#include "vms/blocks.hpp"
#include "vms/error.hpp"
#include "vms/layout.hpp"

using vms::Arrangement;
using vms::Array;

namespace {

constexpr Arrangement kKinds[] = {Arrangement::left, Arrangement::right, Arrangement::both,
                                  Arrangement::middle};

vms::ModalityEmbeddings random_embeddings(std::size_t lv, std::size_t lq, std::size_t d, vms::Rng& rng) {
  return {rng.uniform_array({lv, d}, -1, 1), rng.uniform_array({lq, d}, -1, 1),
          rng.uniform_array({d}, -1, 1), rng.uniform_array({d}, -1, 1)};
}

}  // namespace

TEST(Layout, SmallExamples) {
  const vms::TokenLayout one(1, 2);
  EXPECT_EQ(one.length(), 3u);
  EXPECT_EQ(one.cls_index(0), 1u);
  const vms::TokenLayout two(2, 4);
  EXPECT_EQ(two.length(), 10u);
  EXPECT_EQ(two.cls_index(0), 2u);
  EXPECT_EQ(two.cls_index(1), 7u);
}

TEST(Layout, EmptyVideoRejected) {
  EXPECT_THROW(vms::TokenLayout(0, 3), vms::EmptyVideo);
  EXPECT_THROW(vms::TokenLayout(3, 0), vms::EmptyVideo);
}

TEST(Layout, Bijection) {
  for (std::size_t t = 1; t <= 8; ++t) {
    for (std::size_t p = 1; p <= 9; ++p) {
      const vms::TokenLayout lay(t, p);
      EXPECT_EQ(lay.cls_offset(), p / 2);
      std::set<std::size_t> seen;
      std::size_t cls = 0;
      for (std::size_t f = 0; f < t; ++f) {
        EXPECT_EQ(lay.cls_index(f), f * (p + 1) + p / 2);
        seen.insert(lay.cls_index(f));
        for (std::size_t q = 0; q < p; ++q) {
          const std::size_t i = lay.patch_index(f, q);
          seen.insert(i);
          const auto s = lay.slot_of(i);
          EXPECT_EQ(s.frame, f);
          EXPECT_FALSE(s.is_cls);
          EXPECT_EQ(s.patch, q);
        }
      }
      for (std::size_t i = 0; i < lay.length(); ++i) cls += lay.slot_of(i).is_cls;
      EXPECT_EQ(seen.size(), lay.length());
      EXPECT_EQ(cls, t);
    }
  }
}

TEST(Layout, FlattenPlacesTokens) {
  vms::Rng rng(1);
  const std::size_t t = 3, p = 5, d = 2;
  const vms::VideoTokens v{rng.uniform_array({t, p, d}, -1, 1), rng.uniform_array({d}, -1, 1),
                           rng.uniform_array({t, d}, -1, 1)};
  const auto f = vms::flatten_spacetime(v);
  for (std::size_t fr = 0; fr < t; ++fr) {
    for (std::size_t c = 0; c < d; ++c) {
      EXPECT_EQ(f.seq(f.layout.cls_index(fr), c), v.cls[c] + v.temporal_pos(fr, c));
      for (std::size_t q = 0; q < p; ++q) {
        EXPECT_EQ(f.seq(f.layout.patch_index(fr, q), c), v.frames(fr, q, c) + v.temporal_pos(fr, c));
      }
    }
  }
}

TEST(Layout, ZeroTemporalPositionIsInert) {
  vms::Rng rng(2);
  const Array frames = rng.uniform_array({4, 3, 2}, -1, 1), cls = rng.uniform_array({2}, -1, 1);
  const auto v = vms::VideoTokens::with_zero_pos(frames, cls);
  for (double x : v.temporal_pos.data()) EXPECT_EQ(x, 0.0);
  const auto f = vms::flatten_spacetime(v);
  EXPECT_EQ(f.seq(f.layout.patch_index(2, 1), 1), frames(2, 1, 1));
}

TEST(Layout, PoolCls) {
  vms::Rng rng(3);
  const vms::TokenLayout one(1, 3);
  const Array s1 = rng.uniform_array({one.length(), 2}, -1, 1);
  const Array p1 = vms::pool_cls(s1, one);
  EXPECT_EQ(p1[0], s1(1, 0));
  EXPECT_EQ(p1[1], s1(1, 1));

  const vms::TokenLayout two(2, 4);
  Array s2 = rng.uniform_array({two.length(), 1}, -1, 1);
  s2(2, 0) = 1.0;
  s2(7, 0) = 4.0;
  EXPECT_EQ(vms::pool_cls(s2, two)[0], 2.5);
  EXPECT_THROW(vms::pool_cls(Array({9, 1}), two), vms::LayoutMismatch);
}

TEST(Layout, PoolTouchesOnlyClsSlots) {
  const vms::TokenLayout lay(5, 6);
  vms::Rng rng(4);
  Array s = rng.uniform_array({lay.length(), 3}, -1, 1);
  const Array before = vms::pool_cls(s, lay);
  for (std::size_t i = 0; i < lay.length(); ++i) {
    if (lay.slot_of(i).is_cls) continue;
    for (std::size_t c = 0; c < 3; ++c) s(i, c) = 1e6;
  }
  EXPECT_EQ(vms::pool_cls(s, lay), before);
}

TEST(Arrange, LengthsAndExamples) {
  EXPECT_EQ(vms::arranged_length(Arrangement::left, 4, 2), 6u);
  EXPECT_EQ(vms::arranged_length(Arrangement::both, 4, 2), 8u);
  EXPECT_EQ(vms::text_slots(Arrangement::middle, 4, 2), (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(vms::video_slots(Arrangement::middle, 4, 2), (std::vector<std::size_t>{0, 1, 4, 5}));
  EXPECT_EQ(vms::text_slots(Arrangement::both, 4, 2), (std::vector<std::size_t>{0, 1, 6, 7}));
}

TEST(Arrange, EmptyTextLeavesVideo) {
  vms::Rng rng(5);
  const Array v = rng.uniform_array({4, 3}, -1, 1), q({0, 3});
  const auto emb = random_embeddings(4, 0, 3, rng);
  const Array out = vms::arrange_multimodal(v, q, Arrangement::left, emb);
  ASSERT_EQ(out.shape(), v.shape());
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(out(i, c), v(i, c) + emb.pos_video(i, c) + emb.type_video[c]);
}

TEST(Arrange, BothCopiesIdentical) {
  vms::Rng rng(6);
  const auto emb = random_embeddings(4, 2, 3, rng);
  const Array out = vms::arrange_multimodal(rng.uniform_array({4, 3}, -1, 1),
                                            rng.uniform_array({2, 3}, -1, 1), Arrangement::both, emb);
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_EQ(out(0, c), out(6, c));
    EXPECT_EQ(out(1, c), out(7, c));
  }
}

TEST(Arrange, TypeEmbeddingsMustDiffer) {
  vms::Rng rng(7);
  auto emb = random_embeddings(2, 1, 3, rng);
  emb.type_text = emb.type_video;
  EXPECT_THROW(vms::arrange_multimodal(Array({2, 3}), Array({1, 3}), Arrangement::right, emb),
               vms::InvalidArgument);
  EXPECT_THROW(vms::arrange_multimodal(Array({2, 3}), Array({1, 4}), Arrangement::right,
                                       random_embeddings(2, 1, 3, rng)),
               vms::ShapeMismatch);
}

TEST(Arrange, RoundTripRandomized) {
  vms::Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t lv = 1 + rng.below(12), lq = rng.below(6), d = 2;
    const Arrangement kind = kKinds[rng.below(4)];
    const auto vs = vms::video_slots(kind, lv, lq);
    const auto ts = vms::text_slots(kind, lv, lq);
    std::vector<int> hits(vms::arranged_length(kind, lv, lq), 0);
    for (auto i : vs) ++hits[i];
    for (auto i : ts) ++hits[i];
    for (int h : hits) EXPECT_EQ(h, 1);

    const auto emb = random_embeddings(lv, lq, d, rng);
    const Array v = rng.uniform_array({lv, d}, -1, 1), q = rng.uniform_array({lq, d}, -1, 1);
    const Array seq = vms::arrange_multimodal(v, q, kind, emb);
    const Array back = vms::extract_video(seq, kind, lv, lq);
    for (std::size_t i = 0; i < lv; ++i)
      for (std::size_t c = 0; c < d; ++c) EXPECT_EQ(back(i, c), v(i, c) + emb.pos_video(i, c) + emb.type_video[c]);
  }
}

TEST(Arrange, ExtractChecksLength) {
  EXPECT_THROW(vms::extract_video(Array({7, 2}), Arrangement::both, 4, 2), vms::LayoutMismatch);
}

TEST(Arrange, OrderMattersToScanningMixer) {
  vms::BlockConfig cfg;
  cfg.kind = vms::BlockKind::dbm;
  cfg.d_model = 4;
  cfg.seed = 3;
  const vms::Block mixer = vms::make_block(cfg);
  vms::Rng rng(9);
  const auto emb = random_embeddings(6, 3, 4, rng);
  const Array v = rng.uniform_array({6, 4}, -1, 1), q = rng.uniform_array({3, 4}, -1, 1);
  const Array l = vms::extract_video(
      vms::block_forward(mixer, vms::arrange_multimodal(v, q, Arrangement::left, emb)), Arrangement::left, 6, 3);
  const Array r = vms::extract_video(
      vms::block_forward(mixer, vms::arrange_multimodal(v, q, Arrangement::right, emb)), Arrangement::right, 6, 3);
  EXPECT_GT(vms::max_abs_diff(l, r), 0.0);
}

TEST(Arrange, DescriptorJson) {
  vms::LayoutDescriptor d{2, 5, 2, Arrangement::middle, 12, 3};
  const auto back = vms::layout_from_json(vms::layout_to_json(d));
  EXPECT_EQ(back.frames, 2u);
  EXPECT_EQ(back.patches, 5u);
  EXPECT_EQ(back.kind, Arrangement::middle);
  EXPECT_EQ(back.text_len, 3u);
  EXPECT_THROW(vms::layout_from_json(R"({"T":1,"P":4,"cls_offset":1,"kind":"L","L_v":5,"L_q":0})"),
               vms::LayoutMismatch);
  EXPECT_EQ(vms::parse_arrangement("L+R"), Arrangement::both);
  EXPECT_THROW(vms::parse_arrangement("X"), vms::InvalidArgument);
}
