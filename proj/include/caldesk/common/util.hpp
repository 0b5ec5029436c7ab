#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace caldesk::util {

/// Lower-case hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// `bytes` bytes from the system CSPRNG, hex encoded.
std::string random_hex(std::size_t bytes);

/// Constant-time string comparison.
bool secure_equals(std::string_view a, std::string_view b);

std::optional<std::string> read_file(const std::filesystem::path& p);

/// Writes to a temporary sibling and renames over `p`.
void write_file_atomic(const std::filesystem::path& p, std::string_view data);

std::vector<std::string> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

}  // namespace caldesk::util
