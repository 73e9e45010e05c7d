#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "twibridge/image.hpp"

namespace twibridge::eval {

// counts[g * C + p] = pixels with ground truth g predicted as p.
struct ConfusionMatrix {
  std::size_t class_count = 0;
  std::vector<std::uint64_t> counts;
  std::uint64_t ignored = 0;

  explicit ConfusionMatrix(std::size_t c = 0) : class_count(c), counts(c * c, 0) {}

  std::uint64_t at(std::size_t gt, std::size_t pred) const { return counts[gt * class_count + pred]; }
  std::uint64_t evaluated() const;

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix&) const = default;
};

struct IoUReport {
  std::vector<std::optional<double>> per_class;  // empty when the class union is zero
  double mean_iou = 0.0;
  std::uint64_t evaluated = 0;
  std::uint64_t ignored = 0;
};

// Void ground-truth pixels only bump `ignored`. Throws ShapeError on a size
// mismatch and ProtocolError on a void prediction.
void accumulate(ConfusionMatrix& cm, const LabelMap& ground_truth, const LabelMap& prediction);

// Throws ProtocolError when no class has a non-zero union.
IoUReport iou_report(const ConfusionMatrix& cm);

struct ReportRow {
  std::string name;
  IoUReport report;
  bool best = false;
};

// Rows keep input order; the first row holding the maximal mean is flagged.
std::vector<ReportRow> compare_report(const std::vector<std::pair<std::string, IoUReport>>& entries);

// Header "name,mean_iou,iou_class_0..iou_class_{C-1},best"; full precision,
// undefined class IoUs left blank.
std::string to_csv(const std::vector<ReportRow>& rows);
// Fixed-width text table with mean IoU in percent, one decimal.
std::string render_table(const std::vector<ReportRow>& rows);

}  // namespace twibridge::eval
