#include "glstm/metrics.hpp"

#include <numeric>

#include <fmt/format.h>

#include "glstm/errors.hpp"

namespace glstm {
namespace {

double ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionMatrix ConfusionMatrix::from_counts(std::size_t classes, std::vector<std::int64_t> counts) {
  if (counts.size() != classes * classes) {
    throw ArgumentError(fmt::format("{} counts given for {} classes", counts.size(), classes));
  }
  for (std::int64_t c : counts) {
    if (c < 0) throw ArgumentError("confusion counts must be non-negative");
  }
  ConfusionMatrix cm(classes);
  cm.counts_ = std::move(counts);
  return cm;
}

std::int64_t ConfusionMatrix::total() const noexcept {
  return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::gt_count(std::size_t c) const {
  std::int64_t s = 0;
  for (std::size_t p = 0; p < classes_; ++p) s += at(c, p);
  return s;
}

std::int64_t ConfusionMatrix::pred_count(std::size_t c) const {
  std::int64_t s = 0;
  for (std::size_t g = 0; g < classes_; ++g) s += at(g, c);
  return s;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.classes_ != classes_) throw ArgumentError("cannot add confusion matrices of different sizes");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> gt, std::size_t classes,
                          Backend backend) {
  if (pred.size() != gt.size()) {
    throw ArgumentError(fmt::format("prediction has {} pixels, ground truth {}", pred.size(), gt.size()));
  }
  const int limit = static_cast<int>(classes);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || pred[i] >= limit || gt[i] < 0 || gt[i] >= limit) {
      throw DataError(fmt::format("pixel {}: labels ({}, {}) outside [0, {})", i, gt[i], pred[i], classes));
    }
  }
  std::vector<std::int64_t> counts(classes * classes, 0);
  kernels::confusion_tally(backend, pred, gt, classes, counts);
  return ConfusionMatrix::from_counts(classes, std::move(counts));
}

IouReport iou(const ConfusionMatrix& cm) {
  IouReport r;
  r.per_class.resize(cm.classes());
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    const std::int64_t tp = cm.at(c, c);
    const std::int64_t uni = cm.gt_count(c) + cm.pred_count(c) - tp;
    if (uni == 0) continue;
    r.per_class[c] = ratio(tp, uni);
    sum += *r.per_class[c];
    ++present;
  }
  r.mean = present == 0 ? 0.0 : sum / static_cast<double>(present);
  return r;
}

PrfReport prf1(const ConfusionMatrix& cm, int background) {
  const std::size_t n = cm.classes();
  PrfReport r;
  r.precision.assign(n, 0.0);
  r.recall.assign(n, 0.0);
  r.f1.assign(n, 0.0);
  std::int64_t correct = 0;
  std::int64_t fg_correct = 0;
  std::int64_t fg_total = 0;
  std::size_t averaged = 0;
  for (std::size_t c = 0; c < n; ++c) {
    const std::int64_t tp = cm.at(c, c);
    const std::int64_t gt = cm.gt_count(c);
    const std::int64_t pred = cm.pred_count(c);
    const double p = ratio(tp, pred);
    const double rc = ratio(tp, gt);
    r.precision[c] = p;
    r.recall[c] = rc;
    r.f1[c] = p + rc == 0.0 ? 0.0 : 2.0 * p * rc / (p + rc);
    correct += tp;
    if (static_cast<int>(c) == background) continue;
    fg_correct += tp;
    fg_total += gt;
    if (gt == 0 && pred == 0) continue;
    r.avg_precision += p;
    r.avg_recall += rc;
    r.avg_f1 += r.f1[c];
    ++averaged;
  }
  if (averaged > 0) {
    const double k = static_cast<double>(averaged);
    r.avg_precision /= k;
    r.avg_recall /= k;
    r.avg_f1 /= k;
  }
  r.accuracy = ratio(correct, cm.total());
  r.foreground_accuracy = ratio(fg_correct, fg_total);
  return r;
}

MetricSummary summarize(const ConfusionMatrix& cm, int background) { return {iou(cm), prf1(cm, background)}; }

std::string metrics_csv(const MetricSummary& m) {
  std::string out = "metric,class,value\n";
  const std::size_t n = m.prf.precision.size();
  for (std::size_t c = 0; c < n; ++c) {
    out += m.iou.per_class[c] ? fmt::format("iou,{},{:.6f}\n", c, *m.iou.per_class[c]) : fmt::format("iou,{},\n", c);
    out += fmt::format("precision,{},{:.6f}\n", c, m.prf.precision[c]);
    out += fmt::format("recall,{},{:.6f}\n", c, m.prf.recall[c]);
    out += fmt::format("f1,{},{:.6f}\n", c, m.prf.f1[c]);
  }
  out += fmt::format("iou,mean,{:.6f}\n", m.iou.mean);
  out += fmt::format("precision,mean,{:.6f}\n", m.prf.avg_precision);
  out += fmt::format("recall,mean,{:.6f}\n", m.prf.avg_recall);
  out += fmt::format("f1,mean,{:.6f}\n", m.prf.avg_f1);
  out += fmt::format("accuracy,all,{:.6f}\n", m.prf.accuracy);
  out += fmt::format("fg_accuracy,all,{:.6f}\n", m.prf.foreground_accuracy);
  return out;
}

std::string metrics_table(const MetricSummary& m) {
  std::string out = fmt::format("{:>6} {:>8} {:>9} {:>8} {:>8}\n", "class", "IoU", "precision", "recall", "F1");
  const std::size_t n = m.prf.precision.size();
  for (std::size_t c = 0; c < n; ++c) {
    const std::string iou_cell = m.iou.per_class[c] ? fmt::format("{:.4f}", *m.iou.per_class[c]) : "-";
    out += fmt::format("{:>6} {:>8} {:>9.4f} {:>8.4f} {:>8.4f}\n", c, iou_cell, m.prf.precision[c],
                       m.prf.recall[c], m.prf.f1[c]);
  }
  out += fmt::format("{:>6} {:>8.4f} {:>9.4f} {:>8.4f} {:>8.4f}\n", "mean", m.iou.mean, m.prf.avg_precision,
                     m.prf.avg_recall, m.prf.avg_f1);
  out += fmt::format("pixel accuracy       {:.4f}\n", m.prf.accuracy);
  out += fmt::format("foreground accuracy  {:.4f}\n", m.prf.foreground_accuracy);
  return out;
}

}  // namespace glstm
