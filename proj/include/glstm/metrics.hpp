#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glstm/kernels.hpp"

namespace glstm {

/// L x L pixel counts; rows are ground truth, columns predictions.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {}
  /// Row-major counts. Throws ArgumentError unless there are L*L of them,
  /// all non-negative.
  static ConfusionMatrix from_counts(std::size_t classes, std::vector<std::int64_t> counts);

  [[nodiscard]] std::size_t classes() const noexcept { return classes_; }
  [[nodiscard]] std::int64_t at(std::size_t gt, std::size_t pred) const { return counts_.at(gt * classes_ + pred); }
  std::int64_t& at(std::size_t gt, std::size_t pred) { return counts_.at(gt * classes_ + pred); }
  [[nodiscard]] std::int64_t total() const noexcept;
  [[nodiscard]] std::int64_t gt_count(std::size_t c) const;
  [[nodiscard]] std::int64_t pred_count(std::size_t c) const;
  [[nodiscard]] std::span<const std::int64_t> counts() const noexcept { return counts_; }

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t classes_ = 0;
  std::vector<std::int64_t> counts_;
};

/// Throws DataError on a label outside [0, classes) and ArgumentError on a
/// length mismatch.
ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> gt, std::size_t classes,
                          Backend backend = Backend::parallel);

struct IouReport {
  /// Empty for a class absent from both ground truth and prediction.
  std::vector<std::optional<double>> per_class;
  /// Mean over the classes that have a value; 0 when none do.
  double mean = 0.0;
};
IouReport iou(const ConfusionMatrix& cm);

struct PrfReport {
  std::vector<double> precision, recall, f1;  // 0 where undefined
  double avg_precision = 0.0;
  double avg_recall = 0.0;
  double avg_f1 = 0.0;
  double accuracy = 0.0;
  /// Correct foreground pixels over foreground ground-truth pixels; 0 when
  /// there are none.
  double foreground_accuracy = 0.0;
};
/// Averages run over non-background classes that occur in the ground truth
/// or the prediction.
PrfReport prf1(const ConfusionMatrix& cm, int background);

struct MetricSummary {
  IouReport iou;
  PrfReport prf;
};
MetricSummary summarize(const ConfusionMatrix& cm, int background);

/// "metric,class,value" rows; per-class rows use the class id, averages
/// use "mean". Absent-class IoU is written as an empty value.
std::string metrics_csv(const MetricSummary& m);
/// Fixed-width table with one row per class and a summary block.
std::string metrics_table(const MetricSummary& m);

}  // namespace glstm
