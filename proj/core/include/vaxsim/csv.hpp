#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace vaxsim::csv {

/// Format a double so that it round-trips exactly (shortest %.17g form).
std::string format_double(double v);

std::string join_row(const std::vector<std::string> &fields);

/// Strict reader for the fixed-schema files this project uses: exact header
/// match, exact column count, no quoting (none of the schemas need it).
class Reader {
  public:
    Reader(const std::filesystem::path &path, const std::vector<std::string> &expected_header);

    /// Next data row, or nullopt at EOF. Throws ValidationError with the
    /// 1-based line number on column-count mismatch.
    std::optional<std::vector<std::string>> next();

    std::size_t line_number() const { return line_; }
    const std::filesystem::path &path() const { return path_; }

    [[noreturn]] void fail(const std::string &message) const;

    // Field parsers; empty string means missing for the optional forms.
    double number(const std::vector<std::string> &row, std::size_t col) const;
    std::optional<double> opt_number(const std::vector<std::string> &row, std::size_t col) const;
    long integer(const std::vector<std::string> &row, std::size_t col) const;
    bool boolean(const std::vector<std::string> &row, std::size_t col) const;

  private:
    std::filesystem::path path_;
    std::ifstream in_;
    std::size_t line_ = 0;
    std::size_t columns_ = 0;
};

class Writer {
  public:
    Writer(const std::filesystem::path &path, const std::vector<std::string> &header);

    void row(const std::vector<std::string> &fields);
    void close();

  private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t columns_;
};

std::vector<std::string> split_line(const std::string &line);

} // namespace vaxsim::csv
