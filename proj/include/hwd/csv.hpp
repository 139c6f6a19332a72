#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hwd::csv {

struct Row {
    std::size_t line = 0; // 1-based line number in the source
    std::vector<std::string> fields;
};

/// Comma-separated table with a header row. Fields may be double-quoted.
struct Table {
    std::vector<std::string> header;
    std::vector<Row> rows;

    std::optional<std::size_t> column(std::string_view name) const;
    /// Throws DataError naming the missing column.
    std::size_t require_column(std::string_view name, std::string_view source) const;
};

Table read(std::istream& in);
Table read_file(const std::string& path);

std::vector<std::string> split_line(std::string_view line);

/// Parses a real number with '.' as decimal separator; nullopt on failure.
std::optional<double> parse_double(std::string_view text);

/// Quotes a field if it contains a comma, quote or newline.
std::string escape(std::string_view field);

} // namespace hwd::csv
