#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "format_util.hpp"
#include "qbm/errors.hpp"
#include "qbm/harness.hpp"

namespace qbm {

namespace {

using detail::fixed;

constexpr int kTableDecimals = 5;
constexpr int kMetricDecimals = 6;
constexpr std::size_t kPlottedTrials = 3;

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string metric(double v) { return std::isnan(v) ? "nan" : fixed(v, kMetricDecimals); }

std::string approach_label(const TrialConfig& c) {
  if (c.approach == Approach::kFnn) return "classical";
  switch (c.sampler) {
    case SamplerBackend::kAnnealing: return "SA";
    case SamplerBackend::kGibbs: return "Gibbs";
    case SamplerBackend::kExact: return "exact";
    case SamplerBackend::kEnumeration: return "enumeration";
  }
  return "unknown";
}

/// Linear-interpolated quantile of sorted values.
double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::nan("");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::string leaderboard_csv(const std::vector<TrialResult>& results) {
  std::ostringstream out;
  const auto& columns = leaderboard_columns();
  for (std::size_t k = 0; k < columns.size(); ++k) out << (k ? "," : "") << columns[k];
  out << '\n';
  for (const auto& r : results) {
    const auto& c = r.config;
    out << approach_label(c) << ',' << c.name << ',' << c.batch_size << ',' << c.epochs << ','
        << c.hidden_layers << ',' << c.hidden_units << ','
        << fixed(c.adam.learning_rate, kTableDecimals) << ','
        << fixed(c.adam.beta1, kTableDecimals) << ',' << fixed(c.adam.beta2, kTableDecimals)
        << ',' << fixed(c.adam.epsilon, kTableDecimals) << ',';
    if (c.approach == Approach::kQbm) {
      out << fixed(*c.beta_eff, kTableDecimals) << ',' << *c.sample_count;
    } else {
      out << "-,-";
    }
    out << '\n';
  }
  return out.str();
}

std::string scores_csv(const std::vector<TrialResult>& results) {
  std::ostringstream out;
  out << "name,objective,train_accuracy_mean,train_accuracy_std,train_auc_mean,"
         "train_auc_std,test_accuracy_mean,test_accuracy_std,test_auc_mean,test_auc_std,"
         "parameter_count\n";
  for (const auto& r : results) {
    out << r.config.name << ',' << metric(r.objective) << ',' << metric(r.train_accuracy.mean)
        << ',' << metric(r.train_accuracy.std) << ',' << metric(r.train_auc.mean) << ','
        << metric(r.train_auc.std) << ',' << metric(r.test_accuracy.mean) << ','
        << metric(r.test_accuracy.std) << ',' << metric(r.test_auc.mean) << ','
        << metric(r.test_auc.std) << ',' << r.parameter_count << '\n';
  }
  return out.str();
}

std::string history_csv(const TrialResult& r) {
  std::ostringstream out;
  out << "epoch,train_accuracy_mean,train_accuracy_std,train_auc_mean,train_auc_std\n";
  for (std::size_t e = 0; e < r.epoch_accuracy.size(); ++e) {
    out << e + 1 << ',' << metric(r.epoch_accuracy[e].mean) << ','
        << metric(r.epoch_accuracy[e].std) << ',' << metric(r.epoch_auc[e].mean) << ','
        << metric(r.epoch_auc[e].std) << '\n';
  }
  return out.str();
}

std::string seed_history_csv(const TrialResult& r) {
  std::ostringstream out;
  out << "train_seed,epoch,train_accuracy,train_auc,mean_abs_gradient\n";
  for (const auto& s : r.seeds) {
    for (std::size_t e = 0; e < s.history.epochs.size(); ++e) {
      const auto& rec = s.history.epochs[e];
      out << s.train_seed << ',' << e + 1 << ',' << metric(rec.train_accuracy) << ','
          << metric(rec.train_auc) << ',' << detail::shortest(rec.mean_abs_gradient) << '\n';
    }
  }
  return out.str();
}

std::string test_summary_csv(const std::vector<TrialResult>& results) {
  std::ostringstream out;
  out << "name,metric,min,q1,median,q3,max,mean,std\n";
  for (const auto& r : results) {
    for (int which = 0; which < 2; ++which) {
      std::vector<double> values;
      for (const auto& s : r.seeds) {
        values.push_back(which == 0 ? s.mean_test_accuracy : s.mean_test_auc);
      }
      std::sort(values.begin(), values.end());
      const auto& ms = which == 0 ? r.test_accuracy : r.test_auc;
      out << r.config.name << ',' << (which == 0 ? "test_accuracy" : "test_auc") << ','
          << metric(values.front()) << ',' << metric(quantile(values, 0.25)) << ','
          << metric(quantile(values, 0.5)) << ',' << metric(quantile(values, 0.75)) << ','
          << metric(values.back()) << ',' << metric(ms.mean) << ',' << metric(ms.std) << '\n';
    }
  }
  return out.str();
}

std::string test_per_seed_csv(const std::vector<TrialResult>& results) {
  std::ostringstream out;
  out << "name,train_seed,test_accuracy,test_auc\n";
  for (const auto& r : results) {
    for (const auto& s : r.seeds) {
      out << r.config.name << ',' << s.train_seed << ',' << metric(s.mean_test_accuracy)
          << ',' << metric(s.mean_test_auc) << '\n';
    }
  }
  return out.str();
}

/// Mean line plus a +-1 std band per trial over training epochs.
std::string curve_svg(const std::vector<TrialResult>& results, bool auc) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                  "#9467bd", "#ff7f0e", "#8c564b"};
  constexpr double kWidth = 640, kHeight = 400;
  constexpr double kLeft = 60, kRight = 160, kTop = 30, kBottom = 50;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  const std::size_t shown = std::min(kPlottedTrials, results.size());
  std::size_t max_epochs = 1;
  for (std::size_t t = 0; t < shown; ++t) {
    max_epochs = std::max(max_epochs, results[t].epoch_accuracy.size());
  }
  auto x_of = [&](std::size_t epoch) {
    const double span = max_epochs > 1 ? static_cast<double>(max_epochs - 1) : 1.0;
    return kLeft + plot_w * static_cast<double>(epoch) / span;
  };
  auto y_of = [&](double v) {
    if (std::isnan(v)) v = 0.0;
    return kTop + plot_h * (1.0 - std::clamp(v, 0.0, 1.0));
  };
  auto pt = [](double x, double y) { return fixed(x, 2) + "," + fixed(y, 2); };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">"
      << (auc ? "Training AUC-ROC" : "Training accuracy")
      << " (mean and std over training seeds)</text>\n";
  // Axes and gridlines.
  out << "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w
      << "\" y2=\"" << kTop + plot_h << "\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kTop + plot_h << "\"/>\n";
  out << "</g>\n";
  for (int tick = 0; tick <= 5; ++tick) {
    const double v = tick / 5.0;
    out << "<text x=\"" << kLeft - 8 << "\" y=\"" << fixed(y_of(v) + 4, 2)
        << "\" text-anchor=\"end\" font-size=\"11\">" << fixed(v, 1) << "</text>\n";
  }
  for (std::size_t e = 0; e < max_epochs; ++e) {
    out << "<text x=\"" << fixed(x_of(e), 2) << "\" y=\"" << kTop + plot_h + 16
        << "\" text-anchor=\"middle\" font-size=\"11\">" << e + 1 << "</text>\n";
  }
  out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 10
      << "\" text-anchor=\"middle\" font-size=\"12\">epoch</text>\n";

  for (std::size_t t = 0; t < shown; ++t) {
    const auto& r = results[t];
    const auto& series = auc ? r.epoch_auc : r.epoch_accuracy;
    const char* color = kColors[t % std::size(kColors)];
    std::string upper, lower, line;
    for (std::size_t e = 0; e < series.size(); ++e) {
      const auto p = pt(x_of(e), y_of(series[e].mean + series[e].std));
      upper += (upper.empty() ? "" : " ") + p;
      line += (line.empty() ? "M" : " L") + pt(x_of(e), y_of(series[e].mean));
    }
    for (std::size_t e = series.size(); e-- > 0;) {
      lower += " " + pt(x_of(e), y_of(series[e].mean - series[e].std));
    }
    out << "<polygon class=\"band\" data-trial=\"" << r.config.name << "\" points=\"" << upper
        << lower << "\" fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    out << "<path class=\"mean\" data-trial=\"" << r.config.name << "\" d=\"" << line
        << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    const double ly = kTop + 20.0 * static_cast<double>(t) + 10.0;
    out << "<line x1=\"" << kLeft + plot_w + 15 << "\" y1=\"" << ly << "\" x2=\""
        << kLeft + plot_w + 35 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << kLeft + plot_w + 40 << "\" y=\"" << ly + 4
        << "\" font-size=\"11\">" << approach_label(r.config) << ' ' << r.config.name
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace

const std::vector<std::string>& leaderboard_columns() {
  static const std::vector<std::string> columns{
      "approach",      "name",       "batch_size", "epochs",       "h",        "n",
      "learning_rate", "adam_beta1", "adam_beta2", "adam_epsilon", "beta_eff", "sample_count"};
  return columns;
}

void emit_report(const std::vector<TrialResult>& results,
                 const std::filesystem::path& out_dir) {
  if (results.empty()) throw InvalidInput("no trial results to report");
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "trials", ec);
  if (ec) {
    throw std::runtime_error("cannot create report directory " + out_dir.string() + ": " +
                             ec.message());
  }

  write_file(out_dir / "leaderboard.csv", leaderboard_csv(results));
  write_file(out_dir / "scores.csv", scores_csv(results));
  write_file(out_dir / "test_summary.csv", test_summary_csv(results));
  write_file(out_dir / "test_per_seed.csv", test_per_seed_csv(results));
  write_file(out_dir / "train_accuracy.svg", curve_svg(results, false));
  write_file(out_dir / "train_auc.svg", curve_svg(results, true));

  nlohmann::json all = nlohmann::json::array();
  for (const auto& r : results) {
    const auto dir = out_dir / "trials" / r.config.name;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir.string());
    write_file(dir / "history.csv", history_csv(r));
    write_file(dir / "seed_history.csv", seed_history_csv(r));
    write_file(dir / "config.json", r.config.to_json().dump(1) + "\n");
    all.push_back(r.to_json());
  }
  write_file(out_dir / "results.json", all.dump(1) + "\n");
}

std::vector<TrialResult> load_results(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(LoadError::Kind::kMissingFile, "cannot open " + path.string());
  const auto doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_array()) {
    throw LoadError(LoadError::Kind::kCorruptFile, path.string() + " is not a results array");
  }
  std::vector<TrialResult> results;
  for (const auto& item : doc) results.push_back(TrialResult::from_json(item));
  return results;
}

}  // namespace qbm
