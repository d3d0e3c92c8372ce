#include "qbm/model_file.hpp"

#include <fstream>
#include <sstream>

#include "qbm/errors.hpp"

namespace qbm {

namespace {

nlohmann::json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw LoadError(LoadError::Kind::kMissingFile,
                    "cannot open model file " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  nlohmann::json doc = nlohmann::json::parse(buffer.str(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw LoadError(LoadError::Kind::kCorruptFile,
                    "model file " + path.string() + " is not a valid model document");
  }
  return doc;
}

}  // namespace

void write_model_file(const std::filesystem::path& path, std::string_view kind,
                      const nlohmann::json& body) {
  nlohmann::json doc = body;
  doc["format_version"] = kModelFormatVersion;
  doc["kind"] = std::string(kind);
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write model file " + path.string());
  out << doc.dump(1) << '\n';
  if (!out) throw std::runtime_error("failed writing model file " + path.string());
}

nlohmann::json read_model_file(const std::filesystem::path& path,
                               std::string_view expected_kind) {
  nlohmann::json doc = parse_file(path);
  const auto version = doc.find("format_version");
  if (version == doc.end() || !version->is_number_integer()) {
    throw LoadError(LoadError::Kind::kCorruptFile,
                    "model file " + path.string() + " has no format_version");
  }
  const int found = version->get<int>();
  if (found != kModelFormatVersion) {
    throw LoadError(LoadError::Kind::kVersionMismatch,
                    "model file " + path.string() + " has format version " +
                        std::to_string(found) + ", this build reads version " +
                        std::to_string(kModelFormatVersion));
  }
  const auto kind = doc.find("kind");
  if (kind == doc.end() || !kind->is_string()) {
    throw LoadError(LoadError::Kind::kCorruptFile,
                    "model file " + path.string() + " has no kind tag");
  }
  if (kind->get<std::string>() != expected_kind) {
    throw LoadError(LoadError::Kind::kWrongKind,
                    "model file " + path.string() + " holds a '" +
                        kind->get<std::string>() + "' model, expected '" +
                        std::string(expected_kind) + "'");
  }
  return doc;
}

std::string peek_model_kind(const std::filesystem::path& path) {
  const nlohmann::json doc = parse_file(path);
  const auto kind = doc.find("kind");
  if (kind == doc.end() || !kind->is_string()) {
    throw LoadError(LoadError::Kind::kCorruptFile,
                    "model file " + path.string() + " has no kind tag");
  }
  return kind->get<std::string>();
}

}  // namespace qbm
