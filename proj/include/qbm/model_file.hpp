#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

namespace qbm {

/// Current version of the text model container shared by all model kinds.
inline constexpr int kModelFormatVersion = 1;

/// Writes {format_version, kind, ...body} as JSON. Doubles are emitted in a
/// round-trip-exact decimal form.
void write_model_file(const std::filesystem::path& path, std::string_view kind,
                      const nlohmann::json& body);

/// Reads and checks the container header. Throws LoadError (missing file,
/// corrupt file, version mismatch, wrong kind).
nlohmann::json read_model_file(const std::filesystem::path& path,
                               std::string_view expected_kind);

/// The `kind` tag of a model file without validating its body.
std::string peek_model_kind(const std::filesystem::path& path);

}  // namespace qbm
