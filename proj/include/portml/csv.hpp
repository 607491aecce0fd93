#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace portml::csv {

// Minimal RFC-4180-ish CSV. Fields containing the delimiter, quotes or
// newlines are quoted on write; quoted fields are unescaped on read.

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int col(const std::string& name) const {
        for (size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw std::runtime_error("csv: no such column: " + name);
    }
};

inline std::vector<std::string> split_line(const std::string& line, char delim = ',') {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') { field += '"'; ++i; }
                else quoted = false;
            } else field += c;
        } else {
            if (c == '"') quoted = true;
            else if (c == delim) { out.push_back(std::move(field)); field.clear(); }
            else field += c;
        }
    }
    out.push_back(std::move(field));
    return out;
}

inline std::string escape(const std::string& s, char delim = ',') {
    bool need = false;
    for (char c : s)
        if (c == delim || c == '"' || c == '\n' || c == '\r') { need = true; break; }
    if (!need) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

// Reads one logical record, joining physical lines while inside a quoted
// field. Returns false at end of input.
inline bool read_record(std::istream& in, std::string& out) {
    out.clear();
    std::string line;
    bool got = false;
    while (std::getline(in, line)) {
        got = true;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!out.empty()) out += '\n';
        out += line;
        size_t quotes = 0;
        for (char c : out)
            if (c == '"') ++quotes;
        if (quotes % 2 == 0) return true;
    }
    return got;
}

inline Table read_file(const std::string& path, char delim = ',') {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("csv: cannot open " + path);
    Table t;
    std::string rec;
    if (!read_record(in, rec)) throw std::runtime_error("csv: empty file (no header): " + path);
    t.header = split_line(rec, delim);
    while (read_record(in, rec)) {
        if (rec.empty()) continue;
        t.rows.push_back(split_line(rec, delim));
    }
    return t;
}

inline void write_file(const std::string& path, const Table& t, char delim = ',') {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("csv: cannot write " + path);
    for (size_t i = 0; i < t.header.size(); ++i) {
        if (i) out << delim;
        out << escape(t.header[i], delim);
    }
    out << '\n';
    for (const auto& r : t.rows) {
        for (size_t i = 0; i < r.size(); ++i) {
            if (i) out << delim;
            out << escape(r[i], delim);
        }
        out << '\n';
    }
}

}  // namespace portml::csv
