#include "edema/csv.hpp"

#include <charconv>
#include <cmath>

#include "edema/common.hpp"

namespace edema::csv {

std::vector<std::string> split_line(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool in_quotes = false;
    std::size_t i = 0;
    bool field_was_quoted = false;
    while (i < line.size()) {
        char c = line[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    i += 2;
                    continue;
                }
                in_quotes = false;
                i += 1;
            } else {
                cur.push_back(c);
                i += 1;
            }
        } else if (c == '"' && cur.empty() && !field_was_quoted) {
            in_quotes = true;
            field_was_quoted = true;
            i += 1;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
            field_was_quoted = false;
            i += 1;
        } else {
            cur.push_back(c);
            i += 1;
        }
    }
    if (in_quotes) {
        throw ValidationError("line " + std::to_string(line_no) + ": unterminated quoted field");
    }
    fields.push_back(std::move(cur));
    return fields;
}

std::vector<Row> read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open file: " + path.string());
    }
    std::vector<Row> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        line_no += 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
        rows.push_back(Row{split_line(line, line_no), line_no});
    }
    return rows;
}

std::string escape(const std::string& field) {
    bool needs = field.find_first_of(",\"\n") != std::string::npos;
    if (!needs) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

std::string join_row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += escape(fields[i]);
    }
    return out;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

Writer::Writer(const std::filesystem::path& path) : out_(path), path_(path) {
    if (!out_) {
        throw ValidationError("cannot open file for writing: " + path.string());
    }
}

void Writer::row(const std::vector<std::string>& fields) {
    out_ << join_row(fields) << '\n';
    if (!out_) {
        throw ValidationError("write failed: " + path_.string());
    }
}

void Writer::close() { out_.close(); }

}  // namespace edema::csv
