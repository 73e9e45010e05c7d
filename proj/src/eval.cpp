#include "twibridge/eval.hpp"

#include <cstdio>
#include <numeric>
#include <sstream>

#include "twibridge/errors.hpp"

namespace twibridge::eval {

std::uint64_t ConfusionMatrix::evaluated() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.class_count != class_count) throw ShapeError("cannot merge confusion matrices of different class counts");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  ignored += other.ignored;
  return *this;
}

void accumulate(ConfusionMatrix& cm, const LabelMap& ground_truth, const LabelMap& prediction) {
  if (ground_truth.height != prediction.height || ground_truth.width != prediction.width ||
      ground_truth.labels.size() != prediction.labels.size()) {
    throw ShapeError("ground truth and prediction dimensions differ");
  }
  const std::size_t c = cm.class_count;
  for (std::size_t i = 0; i < ground_truth.labels.size(); ++i) {
    const auto p = prediction.labels[i];
    if (p == kVoid) throw ProtocolError("prediction contains VOID");
    if (p >= c) throw ShapeError("predicted class out of range");
    const auto g = ground_truth.labels[i];
    if (g == kVoid) {
      ++cm.ignored;
      continue;
    }
    if (g >= c) throw ShapeError("ground-truth class out of range");
    ++cm.counts[g * c + p];
  }
}

namespace {

using u128 = unsigned __int128;

u128 gcd128(u128 a, u128 b) {
  while (b != 0) {
    const u128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

// Exact sum of tp/uni fractions; false when an intermediate would overflow.
bool rational_mean(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& fracs, double& out) {
  constexpr u128 kLimit = static_cast<u128>(1) << 100;
  u128 num = 0, den = 1;
  for (const auto& [tp, uni] : fracs) {
    const u128 g = gcd128(den, uni);
    const u128 scale = uni / g;
    if (den > kLimit / scale) return false;
    num = num * scale + static_cast<u128>(tp) * (den / g);
    den *= scale;
    const u128 r = gcd128(num, den);
    if (r > 1) {
      num /= r;
      den /= r;
    }
  }
  den *= fracs.size();
  const u128 r = gcd128(num, den);
  if (r > 1) {
    num /= r;
    den /= r;
  }
  if (num >= (static_cast<u128>(1) << 53) || den >= (static_cast<u128>(1) << 53)) return false;
  out = static_cast<double>(static_cast<std::uint64_t>(num)) / static_cast<double>(static_cast<std::uint64_t>(den));
  return true;
}

}  // namespace

IoUReport iou_report(const ConfusionMatrix& cm) {
  const std::size_t c = cm.class_count;
  IoUReport r;
  r.per_class.resize(c);
  r.evaluated = cm.evaluated();
  r.ignored = cm.ignored;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> fracs;
  double sum = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    std::uint64_t row = 0, col = 0;
    for (std::size_t j = 0; j < c; ++j) {
      row += cm.at(k, j);
      col += cm.at(j, k);
    }
    const std::uint64_t tp = cm.at(k, k);
    const std::uint64_t uni = row + col - tp;  // TP + FN + FP
    if (uni == 0) continue;
    const double iou = static_cast<double>(tp) / static_cast<double>(uni);
    r.per_class[k] = iou;
    sum += iou;
    fracs.emplace_back(tp, uni);
  }
  if (fracs.empty()) throw ProtocolError("no class has a non-empty union; nothing to evaluate");
  // Correctly rounded mean when the exact fraction fits, plain average otherwise.
  if (!rational_mean(fracs, r.mean_iou)) r.mean_iou = sum / static_cast<double>(fracs.size());
  return r;
}

std::vector<ReportRow> compare_report(const std::vector<std::pair<std::string, IoUReport>>& entries) {
  std::vector<ReportRow> rows;
  rows.reserve(entries.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    rows.push_back({entries[i].first, entries[i].second, false});
    if (entries[i].second.mean_iou > entries[best].second.mean_iou) best = i;
  }
  if (!rows.empty()) rows[best].best = true;
  return rows;
}

std::string to_csv(const std::vector<ReportRow>& rows) {
  std::size_t c = 0;
  for (const auto& r : rows) c = std::max(c, r.report.per_class.size());
  std::ostringstream out;
  out << "name,mean_iou";
  for (std::size_t k = 0; k < c; ++k) out << ",iou_class_" << k;
  out << ",best\n";
  char buf[32];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.report.mean_iou);
    out << r.name << ',' << buf;
    for (std::size_t k = 0; k < c; ++k) {
      out << ',';
      if (k < r.report.per_class.size() && r.report.per_class[k]) {
        std::snprintf(buf, sizeof buf, "%.17g", *r.report.per_class[k]);
        out << buf;
      }
    }
    out << ',' << (r.best ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string render_table(const std::vector<ReportRow>& rows) {
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %8s\n", static_cast<int>(width), "Model", "Mean IoU");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-*s  %8.1f%s\n", static_cast<int>(width), r.name.c_str(), 100.0 * r.report.mean_iou,
                  r.best ? " *" : "");
    out << buf;
  }
  return out.str();
}

}  // namespace twibridge::eval
