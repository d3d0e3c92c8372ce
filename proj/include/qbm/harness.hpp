#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "qbm/adam.hpp"
#include "qbm/baseline_fnn.hpp"
#include "qbm/metrics.hpp"
#include "qbm/pipeline.hpp"
#include "qbm/qbm_classifier.hpp"
#include "qbm/rng.hpp"
#include "qbm/samplers.hpp"

namespace qbm {

enum class Approach { kQbm, kFnn };

std::string_view to_string(Approach approach);
Approach parse_approach(std::string_view name);

struct IntRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
};

struct RealRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Hyperparameter ranges for one approach. The annealing-only fields
/// (beta_eff, sample_count, sampler settings) exist only for the QBM.
/// learning_rate and adam_epsilon are drawn log-uniformly when lo > 0.
struct SearchSpace {
  Approach approach = Approach::kQbm;
  IntRange batch_size{8, 128};
  IntRange epochs{1, 20};
  IntRange hidden_layers{1, 4};
  IntRange hidden_units{12, 500};
  RealRange learning_rate{1e-3, 1e-1};
  RealRange adam_beta1{0.5, 0.95};
  RealRange adam_beta2{0.8, 0.999};
  RealRange adam_epsilon{1e-8, 1.0};
  std::optional<RealRange> beta_eff;
  std::optional<IntRange> sample_count;
  SamplerBackend sampler = SamplerBackend::kAnnealing;
  std::size_t gibbs_sweeps = 100;
  std::size_t anneal_sweeps = 1000;

  /// QBM ranges: h in [1,4], n in [12,500], epochs in [1,20], sample count
  /// in [5,100].
  static SearchSpace default_qbm();
  /// FNN ranges; one hidden layer.
  static SearchSpace default_fnn();

  void validate() const;

  /// Strict: unknown keys and QBM-only keys on an FNN space are errors.
  static SearchSpace from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

/// One concrete hyperparameter assignment plus its seeds.
struct TrialConfig {
  std::string name = "trial";
  Approach approach = Approach::kQbm;
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::size_t hidden_layers = 1;
  std::size_t hidden_units = 16;
  AdamHyper adam{};
  std::optional<double> beta_eff;
  std::optional<std::size_t> sample_count;
  SamplerBackend sampler = SamplerBackend::kAnnealing;
  std::size_t gibbs_sweeps = 100;
  std::size_t anneal_sweeps = 1000;
  std::vector<std::uint64_t> train_seeds{0};
  std::vector<std::uint64_t> test_seeds{0};

  void validate() const;
  SamplerConfig sampler_config() const;

  static TrialConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

struct SeedOutcome {
  std::uint64_t train_seed = 0;
  TrainHistory history;
  double final_train_accuracy = 0.0;
  double final_train_auc = 0.0;
  std::vector<double> test_accuracy;  ///< one per test seed
  std::vector<double> test_auc;
  double mean_test_accuracy = 0.0;
  double mean_test_auc = 0.0;
};

struct TrialResult {
  TrialConfig config;
  std::size_t parameter_count = 0;
  std::vector<SeedOutcome> seeds;
  std::vector<MeanStd> epoch_accuracy;  ///< across training seeds, per epoch
  std::vector<MeanStd> epoch_auc;
  MeanStd train_accuracy;  ///< final epoch, across training seeds
  MeanStd train_auc;
  MeanStd test_accuracy;  ///< test-seed means, across training seeds
  MeanStd test_auc;
  /// (mean final train accuracy + mean final train AUC) / 2
  double objective = 0.0;
  double wall_seconds = 0.0;  ///< not persisted

  static TrialResult from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

using TrainedModel = std::variant<QbmClassifier, FnnModel>;

struct RunOptions {
  std::size_t input_units = kCompressedDim;
  std::size_t label_units = 3;
  unsigned workers = 1;
};

/// Trains one model per training seed on split.train and tests each on
/// split.test once per test seed. Per-seed work is independent, so the
/// result does not depend on `workers`. Trained models are appended to
/// `models` (in training-seed order) when given.
TrialResult run_trial(const TrialConfig& config, const DatasetSplit& split,
                      const RunOptions& options = {},
                      std::vector<TrainedModel>* models = nullptr);

enum class SearchStrategy { kRandom, kCoordinate };
SearchStrategy parse_search_strategy(std::string_view name);

struct SearchOptions {
  std::size_t budget = 55;
  std::size_t train_seed_count = 10;
  std::size_t test_seed_count = 10;
  SearchStrategy strategy = SearchStrategy::kRandom;
  std::uint64_t master_seed = 0;
  /// Index of the first trial. Trial names and search draws use the global
  /// index, so several searches under one master seed stay distinct.
  std::size_t first_trial = 0;
  RunOptions run{};
};

/// Draws one configuration from the space.
TrialConfig sample_config(const SearchSpace& space, Rng& rng);

/// Runs `budget` trials and returns them sorted by objective, best first
/// (ties keep trial order).
std::vector<TrialResult> run_search(const SearchSpace& space, const DatasetSplit& split,
                                    const SearchOptions& options);

/// Stable sort, best objective first; NaN objectives rank last.
void sort_by_objective(std::vector<TrialResult>& results);

/// Writes leaderboard.csv, scores.csv, test_summary.csv, test_per_seed.csv,
/// train_accuracy.svg, train_auc.svg, results.json and per-trial
/// history/config files under out_dir. Output bytes depend only on
/// `results`.
void emit_report(const std::vector<TrialResult>& results,
                 const std::filesystem::path& out_dir);

/// Reads the results.json written by emit_report.
std::vector<TrialResult> load_results(const std::filesystem::path& path);

/// Column names of leaderboard.csv, in order.
const std::vector<std::string>& leaderboard_columns();

}  // namespace qbm
