#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace sladoa {

// Container file layout used by datasets, checkpoints, and capture files:
// a single-line JSON manifest terminated by '\n', followed by the raw
// payload as little-endian IEEE-754 float64 values. The manifest carries a
// "format" name and integer "version"; payload interpretation is defined by
// the owning module.

using json = nlohmann::ordered_json;

struct Container {
    json manifest;
    std::vector<double> payload;
};

/// Writes manifest + payload; overwrites an existing file.
void write_container(const std::filesystem::path& path, const json& manifest,
                     const std::vector<double>& payload);

/// Reads and splits a container; validates payload alignment, not content.
Container read_container(const std::filesystem::path& path);

/// Checks manifest "format"/"version" fields, throwing io_error on mismatch.
void expect_format(const json& manifest, const std::string& format, int version);

/// Shortest round-trip decimal text for a double (to_chars), for CSV output.
std::string format_double(double value);

/// Writes a whole text file (CSV reports and similar).
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Reads a whole text file.
std::string read_text_file(const std::filesystem::path& path);

} // namespace sladoa
