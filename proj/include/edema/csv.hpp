#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace edema::csv {

/// One parsed row plus the 1-based line number it came from.
struct Row {
    std::vector<std::string> fields;
    std::size_t line = 0;
};

/// Reads a whole CSV file. Supports double-quoted fields with "" escapes and
/// CRLF line endings; embedded newlines inside quotes are not supported.
/// Throws ValidationError naming the offending line.
std::vector<Row> read_file(const std::filesystem::path& path);

/// Splits a single CSV line (same quoting rules as read_file).
std::vector<std::string> split_line(const std::string& line, std::size_t line_no = 0);

/// Quotes a field if it contains a comma, quote, or newline.
std::string escape(const std::string& field);

std::string join_row(const std::vector<std::string>& fields);

/// Shortest-round-trip decimal rendering of a double ("nan" for NaN).
std::string format_double(double v);

class Writer {
  public:
    explicit Writer(const std::filesystem::path& path);
    void row(const std::vector<std::string>& fields);
    void close();

  private:
    std::ofstream out_;
    std::filesystem::path path_;
};

}  // namespace edema::csv
