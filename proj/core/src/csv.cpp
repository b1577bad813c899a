#include "vaxsim/csv.hpp"

#include "vaxsim/errors.hpp"

#include <charconv>
#include <cstdio>
#include <cstring>

namespace vaxsim::csv {

std::string format_double(double v) {
    // Shortest representation that still round-trips to the same double.
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(buf, "%lf", &back);
        if (back == v)
            return buf;
    }
    return buf;
}

std::string join_row(const std::vector<std::string> &fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i)
            out += ',';
        out += fields[i];
    }
    return out;
}

std::vector<std::string> split_line(const std::string &line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

Reader::Reader(const std::filesystem::path &path, const std::vector<std::string> &expected_header)
    : path_(path), in_(path) {
    if (!in_)
        throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in_, line))
        throw ValidationError(path.string() + ": empty file, expected header row");
    line_ = 1;
    auto header = split_line(line);
    if (header != expected_header) {
        throw ValidationError(path.string() + ": unexpected header '" + join_row(header) + "', expected '" +
                              join_row(expected_header) + "'");
    }
    columns_ = expected_header.size();
}

std::optional<std::vector<std::string>> Reader::next() {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_;
        if (line.empty() || line == "\r")
            continue;
        auto fields = split_line(line);
        if (fields.size() != columns_) {
            throw ValidationError(path_.string() + ":" + std::to_string(line_) + ": expected " +
                                  std::to_string(columns_) + " columns, got " + std::to_string(fields.size()));
        }
        return fields;
    }
    return std::nullopt;
}

void Reader::fail(const std::string &message) const {
    throw ValidationError(path_.string() + ":" + std::to_string(line_) + ": " + message);
}

double Reader::number(const std::vector<std::string> &row, std::size_t col) const {
    const std::string &s = row[col];
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        fail("column " + std::to_string(col + 1) + ": not a number: '" + s + "'");
    return v;
}

std::optional<double> Reader::opt_number(const std::vector<std::string> &row, std::size_t col) const {
    if (row[col].empty())
        return std::nullopt;
    return number(row, col);
}

long Reader::integer(const std::vector<std::string> &row, std::size_t col) const {
    const std::string &s = row[col];
    long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        fail("column " + std::to_string(col + 1) + ": not an integer: '" + s + "'");
    return v;
}

bool Reader::boolean(const std::vector<std::string> &row, std::size_t col) const {
    const std::string &s = row[col];
    if (s == "0")
        return false;
    if (s == "1")
        return true;
    fail("column " + std::to_string(col + 1) + ": expected 0 or 1, got '" + s + "'");
    return false;
}

Writer::Writer(const std::filesystem::path &path, const std::vector<std::string> &header)
    : path_(path), out_(path, std::ios::binary), columns_(header.size()) {
    if (!out_)
        throw IoError("cannot write " + path.string());
    out_ << join_row(header) << '\n';
}

void Writer::row(const std::vector<std::string> &fields) {
    if (fields.size() != columns_)
        throw InternalError("csv row width mismatch writing " + path_.string());
    out_ << join_row(fields) << '\n';
}

void Writer::close() {
    out_.flush();
    if (!out_)
        throw IoError("write failed for " + path_.string());
    out_.close();
}

} // namespace vaxsim::csv
