#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace tailstab::csv {

/// Shortest round-trip decimal ('.' separator, locale independent).
std::string format(double v);
std::string format(std::size_t v);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// ',' separated, LF line endings; throws Io naming the path.
void write(const std::filesystem::path& path, const Table& table);
std::string to_string(const Table& table);

/// Single-column numeric file; a non-numeric first line is treated as a header.
std::vector<double> read_column(const std::filesystem::path& path);

}  // namespace tailstab::csv
