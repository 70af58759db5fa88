#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace roml {

struct CsvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Comma-separated, header row, LF line ends. Fields holding a comma, quote or
/// newline are quoted with doubled inner quotes.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a header column; throws CsvError naming the column if absent.
    std::size_t column(std::string_view name) const;
    bool has_column(std::string_view name) const;
    double number(std::size_t row, std::string_view name) const;

    friend bool operator==(const CsvTable&, const CsvTable&) = default;
};

std::string to_csv(const CsvTable& table);
CsvTable parse_csv(std::string_view text);

/// Shortest text that parses back to the same double.
std::string format_number(double v);
double parse_number(std::string_view s);

std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace roml
