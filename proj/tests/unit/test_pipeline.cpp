#include <algorithm>
#include <cmath>
#include <set>

#include <doctest.h>

#include "qbm/errors.hpp"
#include "qbm/pipeline.hpp"
#include "qbm/synthetic.hpp"
#include "test_util.hpp"

using namespace qbm;

namespace {

std::string header(std::size_t dim, bool stage) {
  std::string h = "group_id,label";
  if (stage) h += ",stage";
  for (std::size_t k = 0; k < dim; ++k) h += ",f" + std::to_string(k);
  return h + "\n";
}

std::string row(const std::string& group, int label, std::size_t dim, double value,
                const char* stage = nullptr) {
  std::string r = group + "," + std::to_string(label);
  if (stage) r += std::string(",") + stage;
  for (std::size_t k = 0; k < dim; ++k) r += "," + std::to_string(value);
  return r + "\n";
}

std::size_t error_line(const std::filesystem::path& path) {
  try {
    load_features(path);
  } catch (const FormatError& e) {
    return e.line();
  }
  return 0;
}

/// Records with `sizes[c][g]` images in group g of class c.
std::vector<FeatureRecord> grouped(const std::vector<std::vector<std::size_t>>& sizes) {
  std::vector<FeatureRecord> out;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    for (std::size_t g = 0; g < sizes[c].size(); ++g) {
      for (std::size_t i = 0; i < sizes[c][g]; ++i) {
        out.push_back({"p" + std::to_string(c) + "_" + std::to_string(g), c,
                       FeatureStage::kBin64, std::vector<double>(kCompressedDim, 0.0)});
      }
    }
  }
  return out;
}

std::map<std::size_t, std::size_t> class_counts(const std::vector<FeatureRecord>& rs) {
  std::map<std::size_t, std::size_t> counts;
  for (const auto& r : rs) ++counts[r.label];
  return counts;
}

void check_split_properties(const std::vector<FeatureRecord>& records, const DatasetSplit& s) {
  std::set<std::string> train_groups, test_groups;
  for (const auto& r : s.train) train_groups.insert(r.group_id);
  for (const auto& r : s.test) test_groups.insert(r.group_id);
  for (const auto& g : train_groups) CHECK(!test_groups.contains(g));

  for (const auto* part : {&s.train, &s.test}) {
    const auto counts = class_counts(*part);
    for (const auto& [label, count] : counts) CHECK(count == counts.begin()->second);
  }

  // Deletion minimality and largest-first removal, per class and split.
  std::map<std::string, std::size_t> original;
  for (const auto& r : records) ++original[r.group_id];
  for (int part = 0; part < 2; ++part) {
    const auto& kept_records = part == 0 ? s.train : s.test;
    std::map<std::string, std::size_t> kept;
    for (const auto& r : kept_records) ++kept[r.group_id];
    std::size_t min_total = SIZE_MAX;
    std::map<std::size_t, std::size_t> before;
    for (const auto& [label, info] : s.manifest) {
      const auto& ids = part == 0 ? info.train_groups : info.test_groups;
      std::size_t total = 0;
      for (const auto& id : ids) total += original[id];
      before[label] = total;
      min_total = std::min(min_total, total);
    }
    for (const auto& [label, info] : s.manifest) {
      const auto& ids = part == 0 ? info.train_groups : info.test_groups;
      const std::size_t deleted = part == 0 ? info.train_deleted : info.test_deleted;
      CHECK(deleted == before[label] - min_total);
      for (const auto& a : ids) {
        if (kept[a] == original[a]) continue;
        for (const auto& b : ids) CHECK(kept[a] + 1 >= kept[b]);
      }
    }
  }
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("feature CSV loading") {
  test::TempDir dir("features");
  const auto good = dir / "good.csv";
  test::spit(good, header(512, false) + row("a", 0, 512, 0.5) + row("b", 1, 512, -1.25) +
                       row("c", 2, 512, 3.0));
  const auto records = load_features(good);
  REQUIRE(records.size() == 3);
  CHECK(records[1].group_id == "b");
  CHECK(records[1].label == 1);
  CHECK(records[1].stage == FeatureStage::kRaw512);
  CHECK(records[1].features[511] == -1.25);

  test::spit(dir / "empty.csv", header(512, false));
  CHECK(load_features(dir / "empty.csv").empty());

  std::string short_row = "x,0";
  for (int k = 0; k < 511; ++k) short_row += ",1";
  test::spit(dir / "short.csv", header(512, false) + row("a", 0, 512, 0.5) + short_row + "\n");
  CHECK(error_line(dir / "short.csv") == 3);

  std::string nan_row = "b,1,comp64,nan";
  for (int k = 0; k < 63; ++k) nan_row += ",1";
  test::spit(dir / "nan.csv", header(64, true) + row("a", 0, 64, 0.5, "comp64") + nan_row + "\n");
  CHECK(error_line(dir / "nan.csv") == 3);

  test::spit(dir / "label.csv", header(64, false) + row("a", 7, 64, 0.0));
  CHECK(error_line(dir / "label.csv") == 2);

  test::spit(dir / "header.csv", "id,label,f0\n");
  CHECK(error_line(dir / "header.csv") == 1);

  test::spit(dir / "bits.csv", header(64, true) + row("a", 0, 64, 0.5, "bin64"));
  CHECK(error_line(dir / "bits.csv") == 2);

  try {
    load_features(dir / "missing.csv");
    FAIL("expected a load error");
  } catch (const LoadError& e) {
    CHECK(e.kind() == LoadError::Kind::kMissingFile);
  }
}

TEST_CASE("feature CSV round trip keeps every bit") {
  test::TempDir dir("roundtrip");
  SyntheticCorpusSpec spec;
  spec.groups_per_class = 2;
  spec.seed = 4;
  const auto raw = synthetic_corpus(spec);
  save_features(dir / "raw.csv", raw);
  CHECK(load_features(dir / "raw.csv") == raw);
  CHECK(test::slurp(dir / "raw.csv").rfind(header(512, false), 0) == 0);

  std::vector<FeatureRecord> bits;
  CompressionLayer layer{std::vector<double>(kCompressedDim * kRawFeatureDim, 0.01),
                         std::vector<double>(kCompressedDim, -0.05), 0};
  for (const auto& r : raw) bits.push_back(binarize(compress(layer, r)));
  save_features(dir / "bin.csv", bits);
  CHECK(load_features(dir / "bin.csv") == bits);
}

TEST_CASE("label map sidecar") {
  test::TempDir dir("labels");
  const auto labels = default_label_map();
  CHECK(labels.at(0) == "Covid");
  CHECK(labels.at(1) == "Cap");
  CHECK(labels.at(2) == "Normal");
  save_label_map(dir / "labels.json", labels);
  CHECK(test::slurp(dir / "labels.json").find("\"0\": \"Covid\"") != std::string::npos);
  CHECK(load_label_map(dir / "labels.json") == labels);
}

TEST_CASE("compression training") {
  SyntheticCorpusSpec spec;
  spec.groups_per_class = 6;
  spec.seed = 8;
  const auto raw = synthetic_corpus(spec);

  CompressionTrainConfig config;
  CHECK(config.epochs == 10);
  config.epochs = 0;
  config.seed = 5;
  const auto untrained = train_compression(raw, config);
  CHECK(untrained.trained_epochs == 0);
  CHECK(untrained == train_compression(raw, config));
  const double bound = 1.0 / std::sqrt(512.0);
  for (double w : untrained.weight) CHECK(std::abs(w) <= bound);

  config.epochs = 10;
  TrainHistory history;
  const auto trained = train_compression(raw, config, &history);
  REQUIRE(history.epochs.size() == 10);
  CHECK(history.epochs.back().train_accuracy >= 0.9);
  CHECK(trained == train_compression(raw, config));
  config.workers = 3;
  CHECK(trained == train_compression(raw, config));

  auto mixed = raw;
  mixed[0].features.resize(64);
  mixed[0].stage = FeatureStage::kComp64;
  CHECK_THROWS_AS(train_compression(mixed, config), InvalidInput);
}

TEST_CASE("compress examples") {
  FeatureRecord r{"g7", 2, FeatureStage::kRaw512, std::vector<double>(512)};
  for (std::size_t k = 0; k < 512; ++k) r.features[k] = static_cast<double>(k) - 100.0;

  CompressionLayer zero{std::vector<double>(64 * 512, 0.0), std::vector<double>(64, 0.0), 0};
  const auto z = compress(zero, r);
  CHECK(z.features == std::vector<double>(64, 0.0));
  CHECK(z.group_id == "g7");
  CHECK(z.label == 2);
  CHECK(z.stage == FeatureStage::kComp64);

  CompressionLayer pick = zero;
  for (std::size_t k = 0; k < 64; ++k) pick.weight[k * 512 + k] = 1.0;
  const auto first = compress(pick, r);
  for (std::size_t k = 0; k < 64; ++k) CHECK(first.features[k] == r.features[k]);

  FeatureRecord bad = r;
  bad.features.resize(64);
  CHECK_THROWS_AS(compress(zero, bad), InvalidInput);
}

TEST_CASE("binarize examples") {
  FeatureRecord r{"g", 0, FeatureStage::kComp64, std::vector<double>(64, 3.0)};
  r.features[0] = -1.0;
  r.features[1] = 0.0;
  r.features[2] = 2.0;
  const auto b = binarize(r);
  CHECK(b.stage == FeatureStage::kBin64);
  CHECK(b.features[0] == 0.0);
  CHECK(b.features[1] == 0.0);
  CHECK(b.features[2] == 1.0);
  CHECK(binarize(FeatureRecord{"g", 0, FeatureStage::kComp64, std::vector<double>(64, 0.1)})
            .features == std::vector<double>(64, 1.0));
  CHECK(binarize(b).features == b.features);

  Rng rng(3);
  FeatureRecord x{"g", 0, FeatureStage::kComp64, std::vector<double>(64)};
  for (int trial = 0; trial < 50; ++trial) {
    for (auto& v : x.features) v = rng.uniform(-5, 5);
    const auto bits = binarize(x);
    for (std::size_t k = 0; k < 64; ++k) {
      const bool sig = 1.0 / (1.0 + std::exp(-x.features[k])) > 0.5;
      CHECK((bits.features[k] == 1.0) == sig);
    }
  }
}

TEST_CASE("balanced split of equal groups deletes nothing") {
  const std::vector<std::vector<std::size_t>> sizes(3, std::vector<std::size_t>(25, 4));
  const auto records = grouped(sizes);
  const auto s = split_balanced(records, 20, 5, 1);
  CHECK(s.train.size() == 3 * 80);
  CHECK(s.test.size() == 3 * 20);
  for (const auto& [label, info] : s.manifest) {
    CHECK(info.train_deleted == 0);
    CHECK(info.test_deleted == 0);
    CHECK(info.train_groups.size() == 20);
    CHECK(info.test_groups.size() == 5);
  }
  check_split_properties(records, s);
}

TEST_CASE("reference-sized split gives 905 train and 275 test images per class") {
  // Group selection depends only on group ids and the seed, so learn it
  // first and then size the selected groups to the reference totals.
  std::vector<std::vector<std::size_t>> sizes(3, std::vector<std::size_t>(40, 1));
  const std::uint64_t seed = 2023;
  const auto probe = split_balanced(grouped(sizes), 20, 5, seed);
  const std::size_t extra_train[3] = {0, 37, 120};
  const std::size_t extra_test[3] = {12, 0, 40};
  for (std::size_t c = 0; c < 3; ++c) {
    const auto& info = probe.manifest.at(c);
    auto fill = [&](const std::vector<std::string>& ids, std::size_t total) {
      for (std::size_t k = 0; k < ids.size(); ++k) {
        const auto g = std::stoul(ids[k].substr(ids[k].find('_') + 1));
        sizes[c][g] = total / ids.size() + (k < total % ids.size() ? 1 : 0);
      }
    };
    fill(info.train_groups, 905 + extra_train[c]);
    fill(info.test_groups, 275 + extra_test[c]);
  }
  const auto records = grouped(sizes);
  const auto s = split_balanced(records, 20, 5, seed);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(s.manifest.at(c).train_groups == probe.manifest.at(c).train_groups);
    CHECK(s.manifest.at(c).train_images == 905);
    CHECK(s.manifest.at(c).test_images == 275);
    CHECK(s.manifest.at(c).train_deleted == extra_train[c]);
    CHECK(s.manifest.at(c).test_deleted == extra_test[c]);
  }
  CHECK(s.train.size() == 3 * 905);
  CHECK(s.test.size() == 3 * 275);
  check_split_properties(records, s);
}

TEST_CASE("split properties hold for random corpora and seeds") {
  Rng rng(99);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::vector<std::vector<std::size_t>> sizes(3);
    for (auto& cls : sizes) {
      cls.resize(8 + rng.below(5));
      for (auto& g : cls) g = 1 + rng.below(9);
    }
    const auto records = grouped(sizes);
    const auto s = split_balanced(records, 5, 2, seed);
    check_split_properties(records, s);
    if (seed < 3) CHECK(split_balanced(records, 5, 2, seed).train == s.train);
  }
}

TEST_CASE("split errors") {
  auto records = grouped({{3, 3, 3}, {3, 3}, {3, 3, 3}});
  try {
    split_balanced(records, 2, 1, 0);
    FAIL("expected a capability error");
  } catch (const CapabilityError& e) {
    CHECK(std::string(e.what()).find("class 1") != std::string::npos);
  }
  records.push_back({"p0_0", 2, FeatureStage::kBin64, std::vector<double>(64, 0.0)});
  CHECK_THROWS_AS(split_balanced(records, 1, 1, 0), InvalidInput);
}

TEST_CASE("manifest JSON names classes") {
  const auto s = split_balanced(grouped({{2, 2}, {2, 2}, {2, 3}}), 1, 1, 0);
  const auto doc = manifest_to_json(s, default_label_map());
  CHECK(doc.at("classes").size() == 3);
  CHECK(doc.at("classes")[0].at("name") == "Covid");
  CHECK(doc.at("train_records").get<std::size_t>() == s.train.size());
}

TEST_CASE("synthetic corpus shape") {
  SyntheticCorpusSpec spec;
  spec.groups_per_class = 50;
  const auto raw = synthetic_corpus(spec);
  std::set<std::string> groups;
  for (const auto& r : raw) {
    CHECK(r.features.size() == 512);
    groups.insert(r.group_id);
  }
  CHECK(groups.size() == 150);
  CHECK(raw == synthetic_corpus(spec));
  spec.min_images_per_group = 0;
  CHECK_THROWS_AS(synthetic_corpus(spec), InvalidInput);
}

}  // TEST_SUITE
