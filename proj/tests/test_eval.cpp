#include <doctest.h>

#include <string>
#include <vector>

#include "twibridge/errors.hpp"
#include "twibridge/eval.hpp"
#include "twibridge/rng.hpp"
#include "oracles.hpp"

using namespace twibridge;
using namespace twibridge::eval;

namespace {

LabelMap row(const std::vector<int>& v) {
  LabelMap lm(1, v.size());
  for (std::size_t i = 0; i < v.size(); ++i) lm.labels[i] = static_cast<std::uint8_t>(v[i]);
  return lm;
}

IoUReport report_of(const std::vector<int>& gt, const std::vector<int>& pred, std::size_t c) {
  ConfusionMatrix cm(c);
  accumulate(cm, row(gt), row(pred));
  return iou_report(cm);
}

}  // namespace

TEST_CASE("hand case mean IoU is exactly 7/12") {
  const auto r = report_of({0, 0, 1, 1}, {0, 1, 1, 1}, 2);
  CHECK(*r.per_class[0] == 0.5);
  CHECK(*r.per_class[1] == 2.0 / 3.0);
  CHECK(r.mean_iou == 7.0 / 12.0);
}

TEST_CASE("exhaustive 4-pixel 2-class enumeration matches set-based IoU") {
  int checked = 0;
  for (int g = 0; g < 16; ++g)
    for (int p = 0; p < 16; ++p) {
      std::vector<int> gt(4), pred(4);
      for (int i = 0; i < 4; ++i) {
        gt[i] = (g >> i) & 1;
        pred[i] = (p >> i) & 1;
      }
      const auto oracle = test::set_based_mean_iou(gt, pred, 2);
      const auto r = report_of(gt, pred, 2);
      CAPTURE(g);
      CAPTURE(p);
      CHECK(r.mean_iou == static_cast<double>(oracle.num) / static_cast<double>(oracle.den));
      ++checked;
    }
  CHECK(checked == 256);
}

TEST_CASE("perfect prediction scores one and classes absent everywhere are excluded") {
  const auto r = report_of({0, 0, 2, 2}, {0, 0, 2, 2}, 4);
  CHECK(r.mean_iou == 1.0);
  CHECK_FALSE(r.per_class[1].has_value());
  CHECK_FALSE(r.per_class[3].has_value());
  CHECK(r.evaluated == 4);
}

TEST_CASE("void ground truth is ignored regardless of the prediction there") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    LabelMap gt(6, 6), pred(6, 6);
    for (auto& l : gt.labels) l = static_cast<std::uint8_t>(rng.below(3));
    for (auto& l : pred.labels) l = static_cast<std::uint8_t>(rng.below(3));
    ConfusionMatrix base(3);
    accumulate(base, gt, pred);

    LabelMap gt_void = gt, pred_changed = pred;
    std::size_t voided = 0;
    for (std::size_t i = 0; i < gt.labels.size(); ++i) {
      if (rng.uniform() < 0.3) {
        gt_void.labels[i] = kVoid;
        pred_changed.labels[i] = static_cast<std::uint8_t>((pred.labels[i] + 1 + rng.below(2)) % 3);
        ++voided;
      }
    }
    ConfusionMatrix a(3), b(3);
    accumulate(a, gt_void, pred);
    accumulate(b, gt_void, pred_changed);
    CHECK(a == b);
    CHECK(a.ignored == voided);
    CHECK(a.evaluated() + voided == base.evaluated());
  }
}

TEST_CASE("confusion accumulation is additive and order independent") {
  Rng rng(5);
  std::vector<std::pair<LabelMap, LabelMap>> pairs;
  for (int i = 0; i < 6; ++i) {
    LabelMap g(4, 5), p(4, 5);
    for (auto& l : g.labels) l = rng.uniform() < 0.1 ? kVoid : static_cast<std::uint8_t>(rng.below(4));
    for (auto& l : p.labels) l = static_cast<std::uint8_t>(rng.below(4));
    pairs.emplace_back(g, p);
  }
  ConfusionMatrix all(4), rev(4), left(4), right(4);
  for (const auto& [g, p] : pairs) accumulate(all, g, p);
  for (auto it = pairs.rbegin(); it != pairs.rend(); ++it) accumulate(rev, it->first, it->second);
  for (std::size_t i = 0; i < pairs.size(); ++i) accumulate(i < 3 ? left : right, pairs[i].first, pairs[i].second);
  ConfusionMatrix merged = left;
  merged += right;
  CHECK(all == rev);
  CHECK(all == merged);
  CHECK(iou_report(all).mean_iou == iou_report(merged).mean_iou);
}

TEST_CASE("mean IoU stays in [0, 1] on random inputs") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    LabelMap g(3, 3), p(3, 3);
    for (auto& l : g.labels) l = static_cast<std::uint8_t>(rng.below(5));
    for (auto& l : p.labels) l = static_cast<std::uint8_t>(rng.below(5));
    ConfusionMatrix cm(5);
    accumulate(cm, g, p);
    const auto r = iou_report(cm);
    CHECK(r.mean_iou >= 0.0);
    CHECK(r.mean_iou <= 1.0);
  }
}

TEST_CASE("accumulate and iou_report reject malformed input") {
  ConfusionMatrix cm(2);
  CHECK_THROWS_AS(accumulate(cm, LabelMap(2, 2), LabelMap(2, 3)), ShapeError);
  CHECK_THROWS_AS(accumulate(cm, row({0, 2}), row({0, 1})), ShapeError);
  CHECK_THROWS_AS(accumulate(cm, row({0, 1}), row({0, 2})), ShapeError);
  CHECK_THROWS_AS(accumulate(cm, row({0, 1}), row({0, 255})), ProtocolError);

  ConfusionMatrix only_void(2);
  accumulate(only_void, row({255, 255}), row({0, 1}));
  CHECK_THROWS_AS(iou_report(only_void), ProtocolError);
}

TEST_CASE("comparison report marks the first best row and formats CSV and table") {
  const auto a = report_of({0, 0, 1, 1}, {0, 1, 1, 1}, 2);
  const auto b = report_of({0, 0, 1, 1}, {0, 0, 1, 1}, 2);
  const auto rows = compare_report({{"phi0", a}, {"phi3", b}, {"one_step", b}});
  REQUIRE(rows.size() == 3);
  CHECK_FALSE(rows[0].best);
  CHECK(rows[1].best);
  CHECK_FALSE(rows[2].best);

  const auto csv = to_csv(rows);
  CHECK(csv.rfind("name,mean_iou,iou_class_0,iou_class_1,best\n", 0) == 0);
  CHECK(csv.find("phi3,1,1,1,1\n") != std::string::npos);
  CHECK(csv.find("one_step,1,1,1,0\n") != std::string::npos);

  const auto table = render_table(rows);
  CHECK(table.find("58.3") != std::string::npos);
  CHECK(table.find("100.0") != std::string::npos);
  CHECK(table.find('*') != std::string::npos);

  const auto missing = compare_report({{"x", report_of({0, 0}, {0, 0}, 3)}});
  CHECK(to_csv(missing).find("x,1,1,,,1\n") != std::string::npos);
}
