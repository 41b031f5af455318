#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ecgmon {

// Minimal RFC-4180-style CSV support: comma separator, double-quote quoting
// with "" escapes, tolerant of \r\n line endings. Good enough for the flat
// numeric/categorical tables this project exchanges; not a general parser.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// Splits one CSV line into fields (handles quoting). Throws Error
// ("malformed-frame" is reserved for telemetry; CSV issues raise "io-error")
// on an unterminated quote.
std::vector<std::string> split_csv_line(const std::string& line);

// Reads a whole CSV file. `has_header` controls whether the first row is
// peeled off into `header`. Raises "io-error" if the file cannot be read.
CsvTable read_csv(const std::filesystem::path& path, bool has_header);

// Quotes a field if it contains a comma, quote, or newline.
std::string csv_escape(const std::string& field);

// Serializes and writes a table; raises "io-error" on failure.
void write_csv(const std::filesystem::path& path, const CsvTable& table);

// Formats a double with enough digits to round-trip exactly (%.17g trimmed).
std::string format_double(double value);

// Strict double parse of a whole trimmed field; std::nullopt if not numeric.
std::optional<double> parse_double(const std::string& field);

// Trims ASCII whitespace from both ends.
std::string trim(const std::string& s);

}  // namespace ecgmon
