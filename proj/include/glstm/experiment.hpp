#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "glstm/config.hpp"
#include "glstm/train.hpp"

namespace glstm {

struct ToyDataset {
  std::vector<ToySample> train;
  std::vector<ToySample> test;
};

/// train_samples + test_samples figures from the run seed; the first
/// train_samples form the training split.
ToyDataset make_toy_dataset(const RunConfig& cfg);

/// Reads `<root>/seed-<seed>/{train,test}` when present with a matching
/// toy.txt, otherwise generates the data and writes it there.
ToyDataset cached_toy_dataset(const RunConfig& cfg, const std::filesystem::path& root);

std::vector<PreparedImage> prepare_all(std::span<const ToySample> samples, const ParserConfig& cfg,
                                       std::uint64_t seed);

struct ExperimentResult {
  TrainResult trained;
  EvalResult test;
  double seconds = 0.0;
};

/// Trains on the training split and evaluates on the test split.
ExperimentResult run_experiment(const RunConfig& cfg, std::span<const PreparedImage> train,
                                std::span<const PreparedImage> test, const EpochCallback& on_epoch = {});
ExperimentResult run_experiment(const RunConfig& cfg, const ToyDataset& data, const EpochCallback& on_epoch = {});

}  // namespace glstm
