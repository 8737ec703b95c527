#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "glstm/metrics.hpp"
#include "glstm/model.hpp"
#include "glstm/params.hpp"

namespace glstm {

struct SgdConfig {
  double lr_new = 0.001;
  double lr_pretrained = 0.0001;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  std::size_t batch = 2;
  int epochs_a = 30;
  int epochs_b = 30;

  /// Throws ArgumentError on negative rates, momentum outside [0, 1), a zero
  /// batch or negative epoch counts.
  void validate() const;
};

/// Momentum SGD: v <- momentum * v - lr * (g + wd * p); p <- p + v.
/// Weight decay applies to parameters flagged `decay`.
class SgdOptimizer {
 public:
  explicit SgdOptimizer(const ParamStore& store);
  /// `lr[i]` is the rate for parameter i; parameters with `active[i]` false
  /// are left alone, velocity included.
  void step(ParamStore& store, const Gradients& grads, std::span<const double> lr, std::span<const char> active,
            double momentum, double weight_decay);
  [[nodiscard]] const Gradients& velocity() const noexcept { return velocity_; }

 private:
  Gradients velocity_;
};

/// Mean loss over `batch` and the matching averaged gradients, one tape per
/// sample. Samples may run on separate workers; the reduction is in sample
/// order, so the result does not depend on the worker count.
double batch_gradients(const ParamStore& store, std::span<const PreparedImage* const> batch,
                       const ParserConfig& cfg, Stage stage, Gradients& out);

struct EvalResult {
  double loss = 0.0;
  ConfusionMatrix confusion;
  [[nodiscard]] double miou() const { return iou(confusion).mean; }
};
/// Loss and pixel confusion of `stage` predictions over a labelled set.
EvalResult evaluate(const ParamStore& store, std::span<const PreparedImage> data, const ParserConfig& cfg,
                    Stage stage);

struct HistoryRow {
  int epoch = 0;  // 1-based across both stages
  char stage = 'A';
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_miou = 0.0;
};
std::string history_csv(std::span<const HistoryRow> rows);

struct TrainResult {
  ParamStore params;
  std::vector<HistoryRow> history;
};

using EpochCallback = std::function<void(const HistoryRow&)>;

/// Stage A trains the frontend and confidence head on the head loss at
/// lr_new. Stage B trains the whole parser on the parse loss, with the
/// Graph LSTM layers and classifier at lr_new and the stage-A parameters at
/// lr_pretrained. With layers == 0 stage B keeps training the head alone.
/// Throws NumericalError naming the first parameter with a non-finite
/// gradient or value.
TrainResult train_two_stage(std::span<const PreparedImage> train, std::span<const PreparedImage> val,
                            const ParserConfig& cfg, const SgdConfig& sgd, std::uint64_t seed,
                            const EpochCallback& on_epoch = {});

/// Continues training `store` in one stage for `epochs` epochs; used by
/// train_two_stage and by tests that need a single stage.
std::vector<HistoryRow> train_stage(ParamStore& store, std::span<const PreparedImage> train,
                                    std::span<const PreparedImage> val, const ParserConfig& cfg,
                                    const SgdConfig& sgd, Stage stage, int epochs, int first_epoch,
                                    std::uint64_t seed, const EpochCallback& on_epoch = {});

}  // namespace glstm
