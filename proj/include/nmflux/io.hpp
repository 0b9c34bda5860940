#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "nmflux/params.hpp"

namespace nmflux {

nlohmann::ordered_json params_json(const ModelParams& p);

/// Writes `content` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace nmflux
