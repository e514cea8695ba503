#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "lpvmor/common.hpp"

namespace lpvmor {

using json = nlohmann::json;

/// Row-major nested array.
json matrix_to_json(const Mat& m);

/// Parses a row-major nested array and checks its shape. `where` prefixes error messages.
Mat matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols, const std::string& where);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const json& j, const std::filesystem::path& path);
void write_text_file(const std::string& text, const std::filesystem::path& path);

} // namespace lpvmor
