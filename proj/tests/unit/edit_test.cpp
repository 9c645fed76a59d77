#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "generators.hpp"
#include "scif/edit.hpp"
#include "scif/reconstruct.hpp"

namespace scif {
namespace {

SparseRepresentation blank(std::uint32_t w, std::uint32_t h, FeatureKind kind, std::uint32_t channels = 1) {
  SparseRepresentation r;
  r.width = w;
  r.height = h;
  r.channels = channels;
  r.kind = kind;
  r.sample_offset = 1.5f;
  r.dc_anchor.assign(channels, 0.4f);
  r.contours = ContourSet{w, h, {}};
  return r;
}

// Adds a contour through `pts`; feature j of point i is base + i + j / 10.
void add(SparseRepresentation& r, std::uint32_t id, std::vector<std::pair<int, int>> pts, float base = 0.0f) {
  Contour c;
  c.id = id;
  for (auto [x, y] : pts) c.points.push_back(Point{std::uint16_t(x), std::uint16_t(y)});
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = 0; j < r.feature_dim(); ++j) c.features.push_back(base + float(i) + float(j) / 10.0f);
  c.normals = contour_normals(c);
  r.contours.contours.push_back(std::move(c));
}

std::vector<std::pair<int, int>> row(int x0, int x1, int y) {
  std::vector<std::pair<int, int>> pts;
  for (int x = x0; x <= x1; ++x) pts.emplace_back(x, y);
  return pts;
}

const Contour* find(const SparseRepresentation& r, std::uint32_t id) {
  for (const auto& c : r.contours.contours)
    if (c.id == id) return &c;
  return nullptr;
}

EditOptions min_len(std::size_t n) { return EditOptions{n}; }

TEST(Select, WholeImageBoxIdsAndMajority) {
  auto r = blank(20, 20, FeatureKind::kColor);
  add(r, 3, row(0, 9, 2));
  add(r, 7, row(0, 9, 4));
  add(r, 9, row(0, 9, 6));
  EXPECT_EQ(select(r, Selection::everything(r)), (std::vector<std::uint32_t>{3, 7, 9}));
  EXPECT_EQ(select(r, Selection::of_ids({3, 7})), (std::vector<std::uint32_t>{3, 7}));
  // Four, five and six of ten points inside: only six is a strict majority.
  EXPECT_TRUE(select(r, Selection::of_box(Box{0, 2, 3, 2})).empty());
  EXPECT_TRUE(select(r, Selection::of_box(Box{0, 4, 4, 4})).empty());
  EXPECT_EQ(select(r, Selection::of_box(Box{4, 6, 19, 6})), (std::vector<std::uint32_t>{9}));
}

TEST(ApplyEdit, TranslateByZeroIsIdentity) {
  testing::Rng rng(40);
  for (int k = 0; k < 50; ++k) {
    const auto r = testing::random_representation(rng);
    const auto out = apply_edit(r, {Translate{Selection::everything(r), 0.0, 0.0}}, min_len(2));
    ASSERT_EQ(out.contours.contours.size(), r.contours.contours.size());
    for (std::size_t i = 0; i < r.contours.contours.size(); ++i) {
      const auto &a = r.contours.contours[i], &b = out.contours.contours[i];
      EXPECT_EQ(a.id, b.id);
      EXPECT_EQ(a.points, b.points);
      EXPECT_EQ(a.features, b.features);
      for (std::size_t j = 0; j < a.size(); ++j) {
        EXPECT_NEAR(a.normals[j].x, b.normals[j].x, 1e-6);
        EXPECT_NEAR(a.normals[j].y, b.normals[j].y, 1e-6);
      }
    }
  }
}

TEST(ApplyEdit, EraseAllReconstructsToAnchor) {
  for (int kind : {0, 1}) {
    testing::Rng rng(41 + kind);
    auto shape = testing::ReprShape{};
    shape.kind = kind;
    shape.channels = 3;
    const auto r = testing::random_representation(rng, shape);
    const auto out = apply_edit(r, {Erase{Selection::everything(r)}});
    EXPECT_TRUE(out.contours.contours.empty());
    EXPECT_TRUE(is_valid(out));
    const auto res = reconstruct(out);
    for (std::uint32_t c = 0; c < 3; ++c)
      for (double v : res.unclamped[c]) EXPECT_NEAR(v, r.dc_anchor[c], 1e-12);
  }
}

TEST(ApplyEdit, TranslateOffTheImageRemovesContour) {
  auto r = blank(16, 16, FeatureKind::kColor);
  add(r, 0, row(2, 13, 3));
  add(r, 1, row(2, 13, 9));
  const auto out = apply_edit(r, {Translate{Selection::of_ids({0}), 16.0, 0.0}});
  ASSERT_EQ(out.contours.contours.size(), 1u);
  EXPECT_EQ(out.contours.contours[0].id, 1u);
  EXPECT_TRUE(is_valid(out));
}

TEST(ApplyEdit, ScaleByTwoBridgesAndInterpolates) {
  auto r = blank(32, 12, FeatureKind::kColor);
  add(r, 0, row(0, 9, 5));
  const auto out = apply_edit(r, {Scale{Selection::of_ids({0}), 0.0, 5.0, 2.0, 2.0}});
  ASSERT_EQ(out.contours.contours.size(), 1u);
  const auto& c = out.contours.contours[0];
  // Endpoints land on x = 0 and 18; Bresenham fills every column between.
  ASSERT_EQ(c.size(), 19u);
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(c.points[i].x, i);
    EXPECT_EQ(c.points[i].y, 5);
    for (std::size_t j = 0; j < 2; ++j)
      EXPECT_NEAR(c.features[i * 2 + j], double(i) / 2.0 + double(j) / 10.0, 1e-6) << i;
  }
}

TEST(ApplyEdit, ScaleCollapsesDuplicatesKeepingTheFirst) {
  auto r = blank(20, 10, FeatureKind::kColor);
  add(r, 0, row(0, 11, 4));
  const auto out = apply_edit(r, {Scale{Selection::of_ids({0}), 0.0, 4.0, 0.5, 1.0}}, min_len(2));
  const auto& c = out.contours.contours.at(0);
  ASSERT_EQ(c.size(), 7u);  // llround(i / 2) for i = 0..11 takes values 0..6
  // x = 1 first arises from i = 1 (0.5 rounds away from zero).
  EXPECT_EQ(c.points[1].x, 1);
  EXPECT_NEAR(c.features[2], 1.0, 1e-6);
  EXPECT_NEAR(c.features[4], 3.0, 1e-6);  // x = 2 first from i = 3 (1.5 -> 2)
}

TEST(ApplyEdit, GradientReprojectionFollowsNewNormal) {
  auto r = blank(20, 20, FeatureKind::kGradient, 3);
  Contour c;
  c.id = 0;
  for (int x = 3; x < 15; ++x) c.points.push_back(Point{std::uint16_t(x), 8});
  for (std::size_t i = 0; i < c.size(); ++i) c.features.insert(c.features.end(), {3.0f, 4.0f, 3.0f, -4.0f, 0.0f, 0.0f});
  c.normals = contour_normals(c);  // (0, 1) everywhere
  r.contours.contours.push_back(c);
  const auto same = apply_edit(r, {Scale{Selection::of_ids({0}), 8.0, 8.0, 1.0, 1.0}});
  const auto& a = same.contours.contours.at(0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::vector<double> expected{0.0, 5.0, 0.0, -5.0, 0.0, 0.0};
    for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(a.features[i * 6 + j], expected[j], 1e-6);
  }
  Scale doubled{Selection::of_ids({0}), 8.0, 8.0, 1.0, 1.0, 2.0};
  EXPECT_NEAR(apply_edit(r, {doubled}).contours.contours.at(0).features[1], 10.0, 1e-6);
  // Translation carries gradients verbatim.
  EXPECT_EQ(apply_edit(r, {Translate{Selection::of_ids({0}), 1.0, 1.0}}).contours.contours.at(0).features, c.features);
}

TEST(ApplyEdit, LastWriterTakesCollidingPixels) {
  // The row owns (5,5) until the column is moved down onto it.
  auto base = blank(12, 12, FeatureKind::kColor);
  add(base, 0, row(0, 11, 5));
  std::vector<std::pair<int, int>> upper;
  for (int y = 0; y < 5; ++y) upper.emplace_back(5, y);
  add(base, 1, upper);
  const auto moved = apply_edit(base, {Translate{Selection::of_ids({1}), 0.0, 1.0}}, min_len(2));
  // The column now covers (5,1)..(5,5); the row splits around x = 5.
  ASSERT_TRUE(find(moved, 1));
  EXPECT_EQ(find(moved, 1)->points.back(), (Point{5, 5}));
  const auto* left = find(moved, 0);
  ASSERT_TRUE(left);
  EXPECT_EQ(left->size(), 5u);
  EXPECT_EQ(left->points.back(), (Point{4, 5}));
  EXPECT_EQ(moved.contours.contours.size(), 3u);
  const auto& right = moved.contours.contours.back();
  EXPECT_EQ(right.id, 2u);
  EXPECT_EQ(right.points.front(), (Point{6, 5}));
  EXPECT_EQ(right.size(), 6u);
  EXPECT_NEAR(right.features[0], 6.0, 1e-6);  // features follow their pixels
  EXPECT_TRUE(is_valid(moved));
}

TEST(ApplyEdit, PasteAddsFreshIdsAndKeepsAnchor) {
  auto r = blank(30, 30, FeatureKind::kColor);
  add(r, 4, row(0, 11, 2));
  auto donor = std::make_shared<SparseRepresentation>(blank(30, 30, FeatureKind::kColor));
  donor->dc_anchor = {0.9f};
  add(*donor, 0, row(0, 11, 20), 5.0f);
  const auto out = apply_edit(r, {Paste{donor, "d", Selection::of_ids({0}), 3.0, -10.0}});
  ASSERT_EQ(out.contours.contours.size(), 2u);
  const auto& pasted = out.contours.contours[1];
  EXPECT_EQ(pasted.id, 5u);
  EXPECT_EQ(pasted.points.front(), (Point{3, 10}));
  EXPECT_EQ(pasted.features, donor->contours.contours[0].features);
  EXPECT_EQ(out.dc_anchor, r.dc_anchor);
}

TEST(ApplyEdit, Errors) {
  auto r = blank(20, 20, FeatureKind::kColor);
  add(r, 0, row(0, 11, 2));
  try {
    apply_edit(r, {Translate{Selection::everything(r), 1, 0}, Erase{Selection::of_ids({0, 8})}});
    FAIL();
  } catch (const EditError& e) {
    EXPECT_EQ(e.code(), EditError::Code::kUnknownId);
    EXPECT_EQ(e.op_index(), 1u);
  }
  auto gradient = std::make_shared<SparseRepresentation>(blank(20, 20, FeatureKind::kGradient));
  try {
    apply_edit(r, {Paste{gradient, "g", Selection::everything(*gradient), 0, 0}});
    FAIL();
  } catch (const EditError& e) {
    EXPECT_EQ(e.code(), EditError::Code::kKindMismatch);
  }
  EXPECT_THROW(apply_edit(r, {Scale{Selection::everything(r), 0, 0, 0.0, 1.0}}), EditError);
  EXPECT_THROW(apply_edit(r, {Erase{Selection::of_box(Box{5, 5, 1, 1})}}), EditError);
  // Emptying the representation is fine.
  EXPECT_NO_THROW(apply_edit(r, {Translate{Selection::everything(r), -100, 0}}));
}

TEST(ApplyEditProperty, OutputAlwaysValidAndInputUntouched) {
  testing::Rng rng(500);
  int exercised = 0;
  for (int k = 0; k < 500; ++k) {
    auto shape = testing::ReprShape{};
    shape.kind = k % 2;
    shape.channels = 1 + 2 * ((k / 2) % 2);
    shape.min_len = 10;
    const auto r = testing::random_representation(rng, shape);
    auto donor = testing::random_representation(rng, shape);
    donor.width = r.width;
    donor.height = r.height;
    donor.contours.width = r.width;
    donor.contours.height = r.height;
    donor.contours.contours.erase(
        std::remove_if(donor.contours.contours.begin(), donor.contours.contours.end(),
                       [&](const Contour& c) {
                         return std::any_of(c.points.begin(), c.points.end(),
                                            [&](const Point& p) { return p.x >= r.width || p.y >= r.height; });
                       }),
        donor.contours.contours.end());
    exercised += !r.contours.contours.empty();
    const auto snapshot = r;
    const auto script = testing::random_script(rng, r, std::make_shared<const SparseRepresentation>(donor));
    const auto out = apply_edit(r, script);
    EXPECT_EQ(r, snapshot) << k;
    ASSERT_TRUE(is_valid(out)) << k;
    std::set<std::uint32_t> ids;
    for (const auto& c : out.contours.contours) {
      EXPECT_GE(c.size(), 10u);
      EXPECT_TRUE(ids.insert(c.id).second);
      EXPECT_EQ(c.normals.size(), c.size());
    }
    EXPECT_EQ(out.dc_anchor, r.dc_anchor);
  }
  EXPECT_GT(exercised, 250);
}

TEST(ApplyEditProperty, IntegerTranslateRoundTrip) {
  testing::Rng rng(501);
  for (int k = 0; k < 100; ++k) {
    const auto r = testing::random_representation(rng);
    int minx = int(r.width), maxx = -1, miny = int(r.height), maxy = -1;
    for (const auto& c : r.contours.contours)
      for (const auto& p : c.points) {
        minx = std::min<int>(minx, p.x);
        maxx = std::max<int>(maxx, p.x);
        miny = std::min<int>(miny, p.y);
        maxy = std::max<int>(maxy, p.y);
      }
    if (maxx < 0) continue;
    const int a = testing::uniform_int(rng, -minx, int(r.width) - 1 - maxx);
    const int b = testing::uniform_int(rng, -miny, int(r.height) - 1 - maxy);
    const auto all = Selection::everything(r);
    const auto out = apply_edit(apply_edit(r, {Translate{all, double(a), double(b)}}, min_len(2)),
                                {Translate{all, double(-a), double(-b)}}, min_len(2));
    ASSERT_EQ(out.contours.contours.size(), r.contours.contours.size());
    for (std::size_t i = 0; i < r.contours.contours.size(); ++i) {
      EXPECT_EQ(out.contours.contours[i].points, r.contours.contours[i].points);
      EXPECT_EQ(out.contours.contours[i].features, r.contours.contours[i].features);
    }
  }
}

TEST(ApplyEditProperty, EraseThenPasteRestoresReconstruction) {
  testing::Rng rng(502);
  for (int k = 0; k < 20; ++k) {
    auto shape = testing::ReprShape{};
    shape.kind = k % 2;
    shape.max_side = 16;
    const auto r = testing::random_representation(rng, shape);
    const auto snapshot = std::make_shared<const SparseRepresentation>(r);
    const auto all = Selection::everything(r);
    const auto out = apply_edit(r, {Erase{all}, Paste{snapshot, "snap", all, 0.0, 0.0}}, min_len(2));
    const auto before = reconstruct(r), after = reconstruct(out);
    for (std::uint32_t c = 0; c < r.channels; ++c)
      for (std::size_t i = 0; i < r.pixel_count(); ++i)
        EXPECT_LE(std::abs(before.unclamped[c][i] - after.unclamped[c][i]), 2.0 / 255.0);
  }
}

}  // namespace
}  // namespace scif
