#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace gff2d {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& p);

}  // namespace gff2d
