#include "roml/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

namespace roml {

std::size_t CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw CsvError("missing column '" + std::string(name) + "'");
}

bool CsvTable::has_column(std::string_view name) const {
    for (const auto& h : header)
        if (h == name) return true;
    return false;
}

double CsvTable::number(std::size_t row, std::string_view name) const {
    return parse_number(rows.at(row).at(column(name)));
}

namespace {

void append_field(std::string& out, const std::string& f) {
    if (f.find_first_of(",\"\n\r") == std::string::npos) {
        out += f;
        return;
    }
    out += '"';
    for (char c : f) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
}

void append_row(std::string& out, const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        append_field(out, row[i]);
    }
    out += '\n';
}

}  // namespace

std::string to_csv(const CsvTable& table) {
    std::string out;
    append_row(out, table.header);
    for (const auto& r : table.rows) {
        if (r.size() != table.header.size()) throw CsvError("row width does not match the header");
        append_row(out, r);
    }
    return out;
}

CsvTable parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    std::size_t line = 1;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty()) throw CsvError("line " + std::to_string(line) + ": stray quote");
                quoted = true;
                any = true;
                break;
            case ',':
                row.push_back(std::move(field));
                field.clear();
                any = true;
                break;
            case '\r': break;
            case '\n':
                row.push_back(std::move(field));
                field.clear();
                records.push_back(std::move(row));
                row.clear();
                any = false;
                ++line;
                break;
            default:
                field += c;
                any = true;
        }
    }
    if (quoted) throw CsvError("unterminated quoted field");
    if (any) {
        row.push_back(std::move(field));
        records.push_back(std::move(row));
    }
    if (records.empty()) throw CsvError("empty csv: no header row");
    CsvTable t;
    t.header = std::move(records.front());
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != t.header.size())
            throw CsvError("row " + std::to_string(r + 1) + " has " + std::to_string(records[r].size()) +
                           " fields, header has " + std::to_string(t.header.size()));
        t.rows.push_back(std::move(records[r]));
    }
    return t;
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_number(std::string_view s) {
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw CsvError("not a number: '" + std::string(s) + "'");
    return v;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace roml
