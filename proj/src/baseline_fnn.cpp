#include "qbm/baseline_fnn.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "qbm/errors.hpp"
#include "qbm/metrics.hpp"
#include "qbm/model_file.hpp"
#include "qbm/parallel.hpp"
#include "qbm/rng.hpp"

namespace qbm {

FnnModel make_fnn(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                  std::size_t output_dim, std::uint64_t seed) {
  if (hidden.empty()) throw InvalidInput("FNN needs at least one hidden layer");
  return FnnModel{DenseNetwork(input_dim, hidden, output_dim, Activation::kSigmoid, seed)};
}

std::vector<double> fnn_forward(const FnnModel& model, std::span<const double> features) {
  return model.network.forward(features);
}

std::size_t parameter_count(const FnnModel& model) {
  return model.network.parameter_count();
}

Evaluation evaluate_fnn(const FnnModel& model, std::span<const Example> data) {
  if (data.empty()) throw InvalidInput("evaluation set is empty");
  Evaluation out;
  std::vector<std::size_t> labels;
  for (const auto& ex : data) {
    out.scores.push_back(model.network.forward(ex.features));
    out.predictions.push_back(argmax_class(out.scores.back()));
    labels.push_back(ex.label);
  }
  out.accuracy = accuracy(out.predictions, labels);
  try {
    out.auc = auc_roc_macro(out.scores, labels);
  } catch (const UndefinedMetric&) {
    out.auc = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

TrainHistory fnn_train(FnnModel& model, std::span<const Example> data,
                       const FnnTrainConfig& config) {
  if (data.empty()) throw InvalidInput("training set is empty");
  if (config.batch_size == 0) throw InvalidInput("batch size must be positive");
  config.adam.validate();
  for (const auto& ex : data) {
    if (ex.features.size() != model.network.input_dim()) {
      throw InvalidInput("example dimension does not match FNN input");
    }
    if (ex.label >= model.network.output_dim()) {
      throw InvalidInput("example label out of range");
    }
  }

  const std::size_t p = model.network.parameter_count();
  AdamState adam(p, config.adam);
  TrainHistory history;
  std::vector<std::size_t> order(data.size());

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.seed, epoch));
    rng.shuffle(order.begin(), order.end());

    double grad_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t first = 0; first < order.size(); first += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, order.size() - first);
      std::vector<std::vector<double>> per_item(count);
      parallel_for(count, config.workers, [&](std::size_t k) {
        per_item[k].assign(p, 0.0);
        const auto& ex = data[order[first + k]];
        model.network.accumulate_gradient(ex.features, ex.label, per_item[k]);
      });
      std::vector<double> grad(p, 0.0);
      for (const auto& g : per_item) {
        for (std::size_t j = 0; j < p; ++j) grad[j] += g[j];
      }
      double abs_sum = 0.0;
      for (auto& g : grad) {
        g /= static_cast<double>(count);
        abs_sum += std::abs(g);
      }
      auto params = model.network.get_parameters();
      adam_update(params, grad, adam);
      model.network.set_parameters(params);
      grad_sum += abs_sum / static_cast<double>(p);
      ++steps;
    }

    const auto eval = evaluate_fnn(model, data);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    history.epochs.push_back(
        {eval.accuracy, eval.auc, grad_sum / static_cast<double>(steps), elapsed.count()});
  }
  return history;
}

void save_fnn(const FnnModel& model, const std::filesystem::path& path) {
  write_model_file(path, "fnn", {{"layers", model.network.to_json()}});
}

FnnModel load_fnn(const std::filesystem::path& path) {
  const auto doc = read_model_file(path, "fnn");
  try {
    return FnnModel{DenseNetwork::from_json(doc.at("layers"))};
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(LoadError::Kind::kCorruptFile,
                    "model file " + path.string() + ": " + e.what());
  } catch (const InvalidInput& e) {
    throw LoadError(LoadError::Kind::kCorruptFile,
                    "model file " + path.string() + ": " + e.what());
  }
}

}  // namespace qbm
