#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace steindiff {

/// 17 significant digits: doubles round-trip exactly through this format.
inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Flat key-value report, one "key = value" line per entry.
class KeyValueReport {
public:
    void add(const std::string& key, double v) { lines_.push_back(key + " = " + format_g17(v)); }
    void add(const std::string& key, long long v) { lines_.push_back(key + " = " + std::to_string(v)); }
    void add(const std::string& key, unsigned long long v) { lines_.push_back(key + " = " + std::to_string(v)); }
    void add(const std::string& key, int v) { lines_.push_back(key + " = " + std::to_string(v)); }
    void add(const std::string& key, bool v) { lines_.push_back(key + " = " + (v ? "true" : "false")); }
    void add(const std::string& key, const std::string& v) { lines_.push_back(key + " = " + v); }

    std::string str() const {
        std::string out;
        for (const auto& l : lines_) {
            out += l;
            out += '\n';
        }
        return out;
    }

    void write(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw std::runtime_error("cannot open output file: " + path);
        os << str();
    }

private:
    std::vector<std::string> lines_;
};

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(const std::vector<double>& row) {
        std::string line;
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) line += ',';
            line += format_g17(row[i]);
        }
        rows_.push_back(std::move(line));
    }

    void add_row_raw(const std::string& line) { rows_.push_back(line); }

    std::string str() const {
        std::string out;
        for (std::size_t i = 0; i < header_.size(); ++i) {
            if (i) out += ',';
            out += header_[i];
        }
        out += '\n';
        for (const auto& r : rows_) {
            out += r;
            out += '\n';
        }
        return out;
    }

    void write(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw std::runtime_error("cannot open output file: " + path);
        os << str();
    }

private:
    std::vector<std::string> header_;
    std::vector<std::string> rows_;
};

}  // namespace steindiff
