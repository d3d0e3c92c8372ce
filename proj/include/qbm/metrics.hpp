#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace qbm {

/// Fraction of predictions equal to their label.
double accuracy(std::span<const std::size_t> predictions,
                std::span<const std::size_t> labels);

/// Mann-Whitney estimate of P(score of a positive > score of a negative),
/// ties counted one half. Needs at least one positive and one negative.
double auc_binary(std::span<const double> scores, std::span<const std::uint8_t> positive);

/// One-vs-rest AUC per class present in `labels`, averaged. `scores[k]` is the
/// score vector of item k. Throws UndefinedMetric when fewer than two classes
/// are present.
double auc_roc_macro(const std::vector<std::vector<double>>& scores,
                     std::span<const std::size_t> labels);

/// Index of the largest score; ties go to the lowest index.
std::size_t argmax_class(std::span<const double> scores);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  ///< population standard deviation
};

MeanStd mean_std(std::span<const double> values);

}  // namespace qbm
