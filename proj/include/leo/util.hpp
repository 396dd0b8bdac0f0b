#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace leo {

// Canonical decimal form of a double: 17 significant digits, round-trip
// exact. All spec'd file formats use this so identical values serialize to
// identical bytes.
std::string format_double(double v);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

// FNV-1a64 of a file's bytes as a hex string; used in run manifests.
std::string file_hash_hex(const std::filesystem::path& path);
std::string hash_hex(std::uint64_t h);

// Minimal CSV assembly: fields are joined with commas, no quoting (field
// values here never contain commas).
std::string csv_row(const std::vector<std::string>& fields);

// key=value lines; '#' starts a comment, blank lines ignored.
std::map<std::string, std::string> parse_kv(const std::string& text);

}  // namespace leo
