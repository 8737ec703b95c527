#include "glstm/train.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "glstm/errors.hpp"
#include "glstm/parallel.hpp"

namespace glstm {
namespace {

[[noreturn]] void report_non_finite(const ParamStore& store, const Gradients& grads, std::string_view when) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (!store[i].value.all_finite()) {
      throw NumericalError(fmt::format("{}: non-finite value in parameter {}", when, store[i].name));
    }
  }
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (!grads[i].all_finite()) {
      throw NumericalError(fmt::format("{}: non-finite gradient in parameter {}", when, store[i].name));
    }
  }
  throw NumericalError(fmt::format("{}: non-finite loss with finite parameters and gradients", when));
}

bool all_finite(const Gradients& g) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!g[i].all_finite()) return false;
  }
  return true;
}

}  // namespace

void SgdConfig::validate() const {
  if (!(lr_new >= 0.0) || !(lr_pretrained >= 0.0)) throw ArgumentError("learning rates must be non-negative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ArgumentError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ArgumentError("weight decay must be non-negative");
  if (batch == 0) throw ArgumentError("batch size must be positive");
  if (epochs_a < 0 || epochs_b < 0) throw ArgumentError("epoch counts must be non-negative");
}

SgdOptimizer::SgdOptimizer(const ParamStore& store) : velocity_(store) {}

void SgdOptimizer::step(ParamStore& store, const Gradients& grads, std::span<const double> lr,
                        std::span<const char> active, double momentum, double weight_decay) {
  if (grads.size() != store.size() || lr.size() != store.size() || active.size() != store.size() ||
      velocity_.size() != store.size()) {
    throw ContractError("optimizer inputs do not match the parameter store");
  }
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (!active[i]) continue;
    Parameter& p = store[i];
    Tensor& v = velocity_[i];
    const double wd = p.decay ? weight_decay : 0.0;
    const double rate = lr[i] * p.lr_mult;
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      v[k] = momentum * v[k] - rate * (grads[i][k] + wd * p.value[k]);
      p.value[k] += v[k];
    }
  }
}

double batch_gradients(const ParamStore& store, std::span<const PreparedImage* const> batch,
                       const ParserConfig& cfg, Stage stage, Gradients& out) {
  if (batch.empty()) throw ArgumentError("empty batch");
  const std::size_t n = batch.size();
  std::vector<Gradients> per_sample(n, Gradients(store));
  std::vector<double> losses(n, 0.0);
  std::vector<std::exception_ptr> errors(n);
  const int workers = std::min<int>(worker_count(), static_cast<int>(n));
#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      Tape tape;
      const Forward f = forward(tape, store, *batch[i], cfg, stage);
      if (!f.loss.valid()) throw ArgumentError("training sample has no ground truth");
      losses[i] = tape.value(f.loss)[0];
      tape.backward(f.loss);
      tape.accumulate(per_sample[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  out = Gradients(store);
  for (const auto& g : per_sample) out.add(g);
  out.scale(1.0 / static_cast<double>(n));
  return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(n);
}

EvalResult evaluate(const ParamStore& store, std::span<const PreparedImage> data, const ParserConfig& cfg,
                    Stage stage) {
  EvalResult r;
  r.confusion = ConfusionMatrix(cfg.labels);
  std::vector<double> losses(data.size(), 0.0);
  std::vector<ConfusionMatrix> cms(data.size());
  std::vector<std::exception_ptr> errors(data.size());
  const int workers = std::max(1, std::min<int>(worker_count(), static_cast<int>(data.size())));
#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (std::size_t i = 0; i < data.size(); ++i) {
    try {
      Tape tape;
      const Forward f = forward(tape, store, data[i], cfg, stage);
      if (f.loss.valid()) losses[i] = tape.value(f.loss)[0];
      const std::vector<int> pred = broadcast_labels(tape.value(f.logits), data[i].sp);
      cms[i] = confusion(pred, data[i].gt, cfg.labels, Backend::serial);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    r.loss += losses[i];
    r.confusion += cms[i];
  }
  if (!data.empty()) r.loss /= static_cast<double>(data.size());
  return r;
}

std::string history_csv(std::span<const HistoryRow> rows) {
  std::string out = "epoch,stage,train_loss,val_loss,val_miou\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{:.9g},{:.9g},{:.9g}\n", r.epoch, r.stage, r.train_loss, r.val_loss, r.val_miou);
  }
  return out;
}

std::vector<HistoryRow> train_stage(ParamStore& store, std::span<const PreparedImage> train,
                                    std::span<const PreparedImage> val, const ParserConfig& cfg,
                                    const SgdConfig& sgd, Stage stage, int epochs, int first_epoch,
                                    std::uint64_t seed, const EpochCallback& on_epoch) {
  sgd.validate();
  if (train.empty()) throw ArgumentError("training set is empty");
  const bool head_only = stage == Stage::head || cfg.layers == 0;
  std::vector<double> lr(store.size());
  std::vector<char> active(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    const bool pretrained_part = is_stage_a_param(store[i].name);
    if (stage == Stage::head) {
      active[i] = pretrained_part;
      lr[i] = sgd.lr_new;
    } else {
      active[i] = head_only ? pretrained_part : 1;
      lr[i] = pretrained_part ? sgd.lr_pretrained : sgd.lr_new;
    }
    store[i].group = (stage == Stage::full && pretrained_part) ? ParamGroup::pretrained : ParamGroup::fresh;
  }

  SgdOptimizer opt(store);
  std::vector<std::size_t> order(train.size());
  std::vector<HistoryRow> rows;
  const char stage_tag = stage == Stage::head ? 'A' : 'B';
  for (int e = 0; e < epochs; ++e) {
    const int epoch = first_epoch + e;
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stage_tag), static_cast<std::uint32_t>(epoch)};
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t steps = 0;
    Gradients grads;
    std::vector<const PreparedImage*> batch;
    for (std::size_t start = 0; start < order.size(); start += sgd.batch) {
      batch.clear();
      for (std::size_t k = start; k < std::min(order.size(), start + sgd.batch); ++k) batch.push_back(&train[order[k]]);
      const double loss = batch_gradients(store, batch, cfg, stage, grads);
      const std::string where = fmt::format("epoch {} step {}", epoch, steps + 1);
      if (!std::isfinite(loss) || !all_finite(grads)) report_non_finite(store, grads, where);
      opt.step(store, grads, lr, active, sgd.momentum, sgd.weight_decay);
      for (std::size_t i = 0; i < store.size(); ++i) {
        if (!store[i].value.all_finite()) report_non_finite(store, grads, where);
      }
      loss_sum += loss;
      ++steps;
    }
    HistoryRow row;
    row.epoch = epoch;
    row.stage = stage_tag;
    row.train_loss = loss_sum / static_cast<double>(steps);
    if (!val.empty()) {
      const EvalResult ev = evaluate(store, val, cfg, stage);
      row.val_loss = ev.loss;
      row.val_miou = ev.miou();
    }
    rows.push_back(row);
    if (on_epoch) on_epoch(row);
  }
  return rows;
}

TrainResult train_two_stage(std::span<const PreparedImage> train, std::span<const PreparedImage> val,
                            const ParserConfig& cfg, const SgdConfig& sgd, std::uint64_t seed,
                            const EpochCallback& on_epoch) {
  cfg.validate();
  sgd.validate();
  TrainResult r;
  r.params = make_parser_params(cfg, seed);
  r.history = train_stage(r.params, train, val, cfg, sgd, Stage::head, sgd.epochs_a, 1, seed, on_epoch);
  auto b = train_stage(r.params, train, val, cfg, sgd, Stage::full, sgd.epochs_b, sgd.epochs_a + 1, seed, on_epoch);
  r.history.insert(r.history.end(), b.begin(), b.end());
  return r;
}

}  // namespace glstm
