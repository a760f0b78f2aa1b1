#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace agbmap {

/// Small RFC 4180 table: quoted fields may hold commas, quotes and newlines.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a header column; throws Format when absent.
    std::size_t column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
std::string format_csv(const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

}  // namespace agbmap
