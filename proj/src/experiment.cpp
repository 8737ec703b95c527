#include "glstm/experiment.hpp"

#include <chrono>

#include <fmt/format.h>

#include "glstm/errors.hpp"
#include "glstm/io.hpp"
#include "glstm/parallel.hpp"

namespace glstm {
namespace {

std::string toy_text(const RunConfig& cfg) {
  return fmt::format("width = {}\nheight = {}\nparts = {}\nnoise = {}\nbrightness_jitter = {}\ntrain = {}\ntest = {}\n",
                     cfg.toy.width, cfg.toy.height, cfg.toy.parts, cfg.toy.noise, cfg.toy.brightness_jitter,
                     cfg.train_samples, cfg.test_samples);
}

}  // namespace

ToyDataset make_toy_dataset(const RunConfig& cfg) {
  std::vector<ToySample> all = gen_toy(cfg.seed, cfg.train_samples + cfg.test_samples, cfg.toy);
  ToyDataset d;
  d.test.assign(std::make_move_iterator(all.begin() + static_cast<std::ptrdiff_t>(cfg.train_samples)),
                std::make_move_iterator(all.end()));
  all.resize(cfg.train_samples);
  d.train = std::move(all);
  return d;
}

ToyDataset cached_toy_dataset(const RunConfig& cfg, const std::filesystem::path& root) {
  const auto dir = root / fmt::format("seed-{}", cfg.seed);
  const auto stamp = dir / "toy.txt";
  const std::string want = toy_text(cfg);
  if (std::filesystem::exists(stamp) && read_file(stamp) == want) {
    ToyDataset d;
    d.train = read_dataset(dir / "train");
    if (cfg.test_samples > 0) d.test = read_dataset(dir / "test");
    for (auto* split : {&d.train, &d.test}) {
      for (auto& s : *split) s.seed = cfg.seed;
    }
    return d;
  }
  ToyDataset d = make_toy_dataset(cfg);
  write_dataset(dir / "train", d.train);
  if (!d.test.empty()) write_dataset(dir / "test", d.test);
  write_file_atomic(stamp, want);
  return d;
}

std::vector<PreparedImage> prepare_all(std::span<const ToySample> samples, const ParserConfig& cfg,
                                       std::uint64_t seed) {
  std::vector<PreparedImage> out(samples.size());
  std::vector<std::exception_ptr> errors(samples.size());
  const int workers = std::max(1, std::min<int>(worker_count(), static_cast<int>(samples.size())));
#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (std::size_t i = 0; i < samples.size(); ++i) {
    try {
      out[i] = prepare_image(samples[i].image, cfg, samples[i].gt, seed);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

ExperimentResult run_experiment(const RunConfig& cfg, std::span<const PreparedImage> train,
                                std::span<const PreparedImage> test, const EpochCallback& on_epoch) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentResult r;
  r.trained = train_two_stage(train, test, cfg.parser, cfg.sgd, cfg.seed, on_epoch);
  if (!test.empty()) r.test = evaluate(r.trained.params, test, cfg.parser, Stage::full);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

ExperimentResult run_experiment(const RunConfig& cfg, const ToyDataset& data, const EpochCallback& on_epoch) {
  const auto train = prepare_all(data.train, cfg.parser, cfg.seed);
  const auto test = prepare_all(data.test, cfg.parser, cfg.seed);
  return run_experiment(cfg, train, test, on_epoch);
}

}  // namespace glstm
