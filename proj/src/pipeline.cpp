#include "qbm/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "format_util.hpp"
#include "qbm/dense_network.hpp"
#include "qbm/errors.hpp"
#include "qbm/metrics.hpp"
#include "qbm/model_file.hpp"
#include "qbm/parallel.hpp"
#include "qbm/rng.hpp"

namespace qbm {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::size_t expected_dim(FeatureStage stage) {
  return stage == FeatureStage::kRaw512 ? kRawFeatureDim : kCompressedDim;
}

void check_record(const FeatureRecord& r) {
  if (r.features.size() != expected_dim(r.stage)) {
    throw InvalidInput("record of stage " + std::string(to_string(r.stage)) + " has " +
                       std::to_string(r.features.size()) + " features");
  }
}

}  // namespace

std::string_view to_string(FeatureStage stage) {
  switch (stage) {
    case FeatureStage::kRaw512: return "raw512";
    case FeatureStage::kComp64: return "comp64";
    case FeatureStage::kBin64: return "bin64";
  }
  return "unknown";
}

FeatureStage parse_feature_stage(std::string_view name) {
  if (name == "raw512") return FeatureStage::kRaw512;
  if (name == "comp64") return FeatureStage::kComp64;
  if (name == "bin64") return FeatureStage::kBin64;
  throw InvalidInput("unknown feature stage '" + std::string(name) + "'");
}

LabelMap default_label_map() { return {{0, "Covid"}, {1, "Cap"}, {2, "Normal"}}; }

LabelMap load_label_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(LoadError::Kind::kMissingFile, "cannot open " + path.string());
  const auto doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw LoadError(LoadError::Kind::kCorruptFile,
                    path.string() + " is not a JSON object of labels");
  }
  LabelMap labels;
  for (const auto& [key, value] : doc.items()) {
    std::size_t index = 0;
    const auto res = std::from_chars(key.data(), key.data() + key.size(), index);
    if (res.ec != std::errc{} || res.ptr != key.data() + key.size() || !value.is_string()) {
      throw LoadError(LoadError::Kind::kCorruptFile,
                      path.string() + ": label keys must be integers mapping to names");
    }
    labels[index] = value.get<std::string>();
  }
  return labels;
}

void save_label_map(const std::filesystem::path& path, const LabelMap& labels) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [index, name] : labels) doc[std::to_string(index)] = name;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(1) << '\n';
}

std::vector<FeatureRecord> load_features(const std::filesystem::path& path,
                                         const LabelMap& labels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw LoadError(LoadError::Kind::kMissingFile, "cannot open feature file " + path.string());
  }
  const std::string name = path.filename().string();
  auto fail = [&](std::size_t line, const std::string& why) {
    return FormatError(line, name + ":" + std::to_string(line) + ": " + why);
  };

  std::string line;
  if (!std::getline(in, line)) throw fail(1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);
  if (header.size() < 3 || header[0] != "group_id" || header[1] != "label") {
    throw fail(1, "header must start with group_id,label");
  }
  const bool has_stage = header[2] == "stage";
  const std::size_t first_feature = has_stage ? 3 : 2;
  const std::size_t dim = header.size() - first_feature;
  if (dim != kRawFeatureDim && dim != kCompressedDim) {
    throw fail(1, "expected 512 or 64 feature columns, found " + std::to_string(dim));
  }
  for (std::size_t k = 0; k < dim; ++k) {
    if (header[first_feature + k] != "f" + std::to_string(k)) {
      throw fail(1, "feature column " + std::to_string(k) + " must be named f" +
                        std::to_string(k));
    }
  }
  const FeatureStage default_stage =
      dim == kRawFeatureDim ? FeatureStage::kRaw512 : FeatureStage::kComp64;

  std::vector<FeatureRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw fail(line_no, "expected " + std::to_string(header.size()) + " fields, found " +
                              std::to_string(fields.size()));
    }
    FeatureRecord r;
    r.group_id = std::string(fields[0]);
    if (r.group_id.empty()) throw fail(line_no, "empty group_id");

    const auto label_field = fields[1];
    const auto res =
        std::from_chars(label_field.data(), label_field.data() + label_field.size(), r.label);
    if (res.ec != std::errc{} || res.ptr != label_field.data() + label_field.size()) {
      throw fail(line_no, "label '" + std::string(label_field) + "' is not an integer");
    }
    if (!labels.contains(r.label)) {
      throw fail(line_no, "unknown label " + std::to_string(r.label));
    }

    r.stage = default_stage;
    if (has_stage) {
      try {
        r.stage = parse_feature_stage(fields[2]);
      } catch (const InvalidInput& e) {
        throw fail(line_no, e.what());
      }
      if (expected_dim(r.stage) != dim) {
        throw fail(line_no, "stage " + std::string(fields[2]) + " does not match " +
                                std::to_string(dim) + " feature columns");
      }
    }

    r.features.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      const auto f = fields[first_feature + k];
      double v = 0.0;
      const auto fr = std::from_chars(f.data(), f.data() + f.size(), v);
      if (fr.ec != std::errc{} || fr.ptr != f.data() + f.size()) {
        throw fail(line_no, "f" + std::to_string(k) + " is not a number");
      }
      if (!std::isfinite(v)) throw fail(line_no, "f" + std::to_string(k) + " is not finite");
      if (r.stage == FeatureStage::kBin64 && v != 0.0 && v != 1.0) {
        throw fail(line_no, "bin64 features must be 0 or 1");
      }
      r.features[k] = v;
    }
    records.push_back(std::move(r));
  }
  return records;
}

void save_features(const std::filesystem::path& path, std::span<const FeatureRecord> records) {
  const FeatureStage stage = records.empty() ? FeatureStage::kBin64 : records.front().stage;
  for (const auto& r : records) {
    if (r.stage != stage) throw InvalidInput("feature file records must share one stage");
    check_record(r);
    if (r.group_id.empty() || r.group_id.find_first_of(",\r\n") != std::string::npos) {
      throw InvalidInput("group_id '" + r.group_id + "' cannot be written to CSV");
    }
  }
  const bool raw = stage == FeatureStage::kRaw512;
  std::ostringstream out;
  out << "group_id,label";
  if (!raw) out << ",stage";
  for (std::size_t k = 0; k < expected_dim(stage); ++k) out << ",f" << k;
  out << '\n';
  for (const auto& r : records) {
    out << r.group_id << ',' << r.label;
    if (!raw) out << ',' << to_string(stage);
    for (double v : r.features) out << ',' << detail::shortest(v);
    out << '\n';
  }
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot write feature file " + path.string());
  file << out.str();
}

CompressionLayer train_compression(std::span<const FeatureRecord> records,
                                   const CompressionTrainConfig& config,
                                   TrainHistory* surrogate_history) {
  std::size_t classes = 0;
  for (const auto& r : records) {
    if (r.stage != FeatureStage::kRaw512 || r.features.size() != kRawFeatureDim) {
      throw InvalidInput("compression training needs 512-dim raw records only");
    }
    classes = std::max(classes, r.label + 1);
  }
  classes = std::max<std::size_t>(classes, 2);
  if (config.batch_size == 0) throw InvalidInput("batch size must be positive");
  config.adam.validate();

  DenseNetwork net(kRawFeatureDim, {kCompressedDim}, classes, Activation::kIdentity,
                   config.seed);
  const std::size_t p = net.parameter_count();
  AdamState adam(p, config.adam);
  std::vector<std::size_t> order(records.size());
  if (config.epochs > 0 && records.empty()) throw InvalidInput("no records to train on");

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.seed, {1, epoch}));
    rng.shuffle(order.begin(), order.end());
    double grad_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t first = 0; first < order.size(); first += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, order.size() - first);
      std::vector<std::vector<double>> per_item(count);
      parallel_for(count, config.workers, [&](std::size_t k) {
        per_item[k].assign(p, 0.0);
        const auto& r = records[order[first + k]];
        net.accumulate_gradient(r.features, r.label, per_item[k]);
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
      auto params = net.get_parameters();
      adam_update(params, grad, adam);
      net.set_parameters(params);
      grad_sum += abs_sum / static_cast<double>(p);
      ++steps;
    }

    if (surrogate_history) {
      std::vector<std::vector<double>> scores;
      std::vector<std::size_t> predictions, labels;
      for (const auto& r : records) {
        scores.push_back(net.forward(r.features));
        predictions.push_back(argmax_class(scores.back()));
        labels.push_back(r.label);
      }
      double auc = std::nan("");
      try {
        auc = auc_roc_macro(scores, labels);
      } catch (const UndefinedMetric&) {
      }
      surrogate_history->epochs.push_back(
          {accuracy(predictions, labels), auc, grad_sum / static_cast<double>(steps), 0.0});
    }
  }

  const auto& first = net.layers().front();
  return CompressionLayer{first.weight, first.bias, config.epochs};
}

FeatureRecord compress(const CompressionLayer& layer, const FeatureRecord& record) {
  if (record.features.size() != kRawFeatureDim) {
    throw InvalidInput("compress expects a 512-dim record, got " +
                       std::to_string(record.features.size()));
  }
  if (layer.weight.size() != kCompressedDim * kRawFeatureDim ||
      layer.bias.size() != kCompressedDim) {
    throw InvalidInput("compression layer has the wrong shape");
  }
  FeatureRecord out{record.group_id, record.label, FeatureStage::kComp64,
                    std::vector<double>(kCompressedDim)};
  for (std::size_t o = 0; o < kCompressedDim; ++o) {
    const double* row = layer.weight.data() + o * kRawFeatureDim;
    double s = layer.bias[o];
    for (std::size_t i = 0; i < kRawFeatureDim; ++i) s += row[i] * record.features[i];
    out.features[o] = s;
  }
  return out;
}

FeatureRecord binarize(const FeatureRecord& record) {
  if (record.features.size() != kCompressedDim) {
    throw InvalidInput("binarize expects a 64-dim record, got " +
                       std::to_string(record.features.size()));
  }
  FeatureRecord out{record.group_id, record.label, FeatureStage::kBin64,
                    std::vector<double>(kCompressedDim)};
  for (std::size_t k = 0; k < kCompressedDim; ++k) {
    out.features[k] = record.features[k] > 0.0 ? 1.0 : 0.0;
  }
  return out;
}

void save_compression(const CompressionLayer& layer, const std::filesystem::path& path) {
  write_model_file(path, "compression",
                   {{"input_dim", kRawFeatureDim},
                    {"output_dim", kCompressedDim},
                    {"weight", layer.weight},
                    {"bias", layer.bias},
                    {"trained_epochs", layer.trained_epochs}});
}

CompressionLayer load_compression(const std::filesystem::path& path) {
  const auto doc = read_model_file(path, "compression");
  try {
    CompressionLayer layer{doc.at("weight").get<std::vector<double>>(),
                           doc.at("bias").get<std::vector<double>>(),
                           doc.at("trained_epochs").get<std::size_t>()};
    if (doc.at("input_dim").get<std::size_t>() != kRawFeatureDim ||
        doc.at("output_dim").get<std::size_t>() != kCompressedDim ||
        layer.weight.size() != kRawFeatureDim * kCompressedDim ||
        layer.bias.size() != kCompressedDim) {
      throw LoadError(LoadError::Kind::kCorruptFile,
                      "model file " + path.string() + ": compression layer must be 512->64");
    }
    return layer;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(LoadError::Kind::kCorruptFile,
                    "model file " + path.string() + ": " + e.what());
  }
}

DatasetSplit split_balanced(std::span<const FeatureRecord> records,
                            std::size_t train_groups_per_class,
                            std::size_t test_groups_per_class, std::uint64_t seed) {
  // label -> group id -> record indices (input order)
  std::map<std::size_t, std::map<std::string, std::vector<std::size_t>>> by_class;
  std::map<std::string, std::size_t> group_label;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& r = records[k];
    const auto [it, inserted] = group_label.emplace(r.group_id, r.label);
    if (!inserted && it->second != r.label) {
      throw InvalidInput("group '" + r.group_id + "' appears with more than one label");
    }
    by_class[r.label][r.group_id].push_back(k);
  }
  if (by_class.empty()) throw InvalidInput("no records to split");

  DatasetSplit split;
  // Selected groups per class and split, in sorted id order.
  std::map<std::size_t, std::vector<std::string>> chosen[2];
  for (const auto& [label, groups] : by_class) {
    const std::size_t need = train_groups_per_class + test_groups_per_class;
    if (groups.size() < need) {
      throw CapabilityError("class " + std::to_string(label) + " has " +
                            std::to_string(groups.size()) + " groups, split needs " +
                            std::to_string(need));
    }
    std::vector<std::string> ids;
    for (const auto& g : groups) ids.push_back(g.first);
    Rng rng(derive_seed(seed, label));
    rng.shuffle(ids.begin(), ids.end());
    auto& info = split.manifest[label];
    info.train_groups.assign(ids.begin(),
                             ids.begin() + static_cast<std::ptrdiff_t>(train_groups_per_class));
    info.test_groups.assign(ids.begin() + static_cast<std::ptrdiff_t>(train_groups_per_class),
                            ids.begin() + static_cast<std::ptrdiff_t>(need));
    std::sort(info.train_groups.begin(), info.train_groups.end());
    std::sort(info.test_groups.begin(), info.test_groups.end());
    chosen[0][label] = info.train_groups;
    chosen[1][label] = info.test_groups;
  }

  for (int part = 0; part < 2; ++part) {
    // Kept record indices per (class, group), same order as chosen groups.
    std::map<std::size_t, std::vector<std::vector<std::size_t>>> kept;
    std::size_t min_count = SIZE_MAX;
    for (const auto& [label, ids] : chosen[part]) {
      auto& groups = kept[label];
      std::size_t total = 0;
      for (const auto& id : ids) {
        groups.push_back(by_class[label][id]);
        total += groups.back().size();
      }
      min_count = std::min(min_count, total);
    }
    auto& out = part == 0 ? split.train : split.test;
    for (auto& [label, groups] : kept) {
      std::size_t total = 0;
      for (const auto& g : groups) total += g.size();
      const std::size_t surplus = total - min_count;
      for (std::size_t d = 0; d < surplus; ++d) {
        std::size_t largest = 0;
        for (std::size_t g = 1; g < groups.size(); ++g) {
          if (groups[g].size() > groups[largest].size()) largest = g;
        }
        groups[largest].pop_back();
      }
      auto& info = split.manifest[label];
      (part == 0 ? info.train_images : info.test_images) = min_count;
      (part == 0 ? info.train_deleted : info.test_deleted) = surplus;
      for (const auto& g : groups) {
        for (auto k : g) out.push_back(records[k]);
      }
    }
  }
  return split;
}

nlohmann::json manifest_to_json(const DatasetSplit& split, const LabelMap& labels) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& [label, info] : split.manifest) {
    const auto name = labels.find(label);
    classes.push_back({{"label", label},
                       {"name", name == labels.end() ? std::to_string(label) : name->second},
                       {"train_groups", info.train_groups},
                       {"test_groups", info.test_groups},
                       {"train_images", info.train_images},
                       {"test_images", info.test_images},
                       {"train_deleted", info.train_deleted},
                       {"test_deleted", info.test_deleted}});
  }
  return {{"classes", classes},
          {"train_records", split.train.size()},
          {"test_records", split.test.size()}};
}

std::vector<Example> to_examples(std::span<const FeatureRecord> records) {
  std::vector<Example> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({r.features, r.label});
  return out;
}

}  // namespace qbm
