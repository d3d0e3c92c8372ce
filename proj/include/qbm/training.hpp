#pragma once

#include <cstddef>
#include <vector>

namespace qbm {

/// One labeled input. Classifiers over binarized features expect every
/// entry to be 0.0 or 1.0.
struct Example {
  std::vector<double> features;
  std::size_t label = 0;
};

struct EpochRecord {
  double train_accuracy = 0.0;
  double train_auc = 0.0;
  double mean_abs_gradient = 0.0;
  double seconds = 0.0;  ///< wall clock; not part of any persisted output
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
};

/// Per-item class scores and the metrics they produce.
struct Evaluation {
  std::vector<std::vector<double>> scores;
  std::vector<std::size_t> predictions;
  double accuracy = 0.0;
  double auc = 0.0;  ///< NaN when the labels hold fewer than two classes
};

}  // namespace qbm
