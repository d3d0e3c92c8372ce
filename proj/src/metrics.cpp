#include "qbm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qbm/errors.hpp"

namespace qbm {

double accuracy(std::span<const std::size_t> predictions,
                std::span<const std::size_t> labels) {
  if (predictions.size() != labels.size()) {
    throw InvalidInput("accuracy: predictions and labels differ in length");
  }
  if (labels.empty()) throw InvalidInput("accuracy: no items");
  std::size_t correct = 0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (predictions[k] == labels[k]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double auc_binary(std::span<const double> scores,
                  std::span<const std::uint8_t> positive) {
  if (scores.size() != positive.size()) {
    throw InvalidInput("auc: scores and labels differ in length");
  }
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of mid-ranks (1-based) of the positives.
  double positive_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t start = 0; start < n;) {
    std::size_t stop = start + 1;
    while (stop < n && scores[order[stop]] == scores[order[start]]) ++stop;
    const double mid_rank = 0.5 * static_cast<double>(start + 1 + stop);
    for (std::size_t k = start; k < stop; ++k) {
      if (positive[order[k]]) {
        positive_rank_sum += mid_rank;
        ++n_pos;
      }
    }
    start = stop;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw UndefinedMetric("auc: need both positive and negative items");
  }
  const double p = static_cast<double>(n_pos);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(n_neg));
}

double auc_roc_macro(const std::vector<std::vector<double>>& scores,
                     std::span<const std::size_t> labels) {
  if (scores.size() != labels.size()) {
    throw InvalidInput("auc: scores and labels differ in length");
  }
  if (labels.empty()) throw InvalidInput("auc: no items");
  const std::size_t classes = scores.front().size();
  for (const auto& row : scores) {
    if (row.size() != classes) throw InvalidInput("auc: ragged score rows");
  }
  std::vector<std::size_t> count(classes, 0);
  for (auto label : labels) {
    if (label >= classes) throw InvalidInput("auc: label outside score columns");
    ++count[label];
  }
  const auto present =
      std::count_if(count.begin(), count.end(), [](std::size_t c) { return c > 0; });
  if (present < 2) {
    throw UndefinedMetric("auc: fewer than two classes present in labels");
  }

  std::vector<double> column(labels.size());
  std::vector<std::uint8_t> positive(labels.size());
  double sum = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (count[c] == 0) continue;
    for (std::size_t k = 0; k < labels.size(); ++k) {
      column[k] = scores[k][c];
      positive[k] = labels[k] == c ? 1 : 0;
    }
    sum += auc_binary(column, positive);
  }
  return sum / static_cast<double>(present);
}

std::size_t argmax_class(std::span<const double> scores) {
  if (scores.empty()) throw InvalidInput("argmax of empty score vector");
  std::size_t best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return best;
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) return {};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return {mean, std::sqrt(var)};
}

}  // namespace qbm
