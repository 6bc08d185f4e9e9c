#ifndef POPMINE_IO_HPP
#define POPMINE_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace popmine {

// FNV-1a 64-bit content hash, used for audit manifests and the vocabulary /
// taxonomy reference hashes in persisted files. Not cryptographic.
std::uint64_t fnv1a(std::string_view bytes);
std::uint64_t fnv1a_append(std::uint64_t state, std::string_view bytes);
std::string hash_hex(std::uint64_t hash);

std::string read_file(const std::filesystem::path& path);
std::uint64_t hash_file(const std::filesystem::path& path);

// Writes content to a temporary file in the target directory, then renames it
// over the destination so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content);

// Backslash escaping for tab-separated fields: \t, \n, \r, \\.
std::string escape_field(std::string_view field);
std::string unescape_field(std::string_view field);

// Fixed-precision decimal formatting, locale-independent.
std::string format_double(double value, int precision);

}  // namespace popmine

#endif  // POPMINE_IO_HPP
