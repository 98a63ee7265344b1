#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace crowdtrack {

/// Splits one comma-separated line. No quoting: none of the formats here need it.
[[nodiscard]] std::vector<std::string_view> split_csv_line(std::string_view line);

[[nodiscard]] bool parse_double(std::string_view text, double& out) noexcept;
[[nodiscard]] bool parse_int(std::string_view text, long long& out) noexcept;

/// Line-oriented CSV reader that requires a header row and reports row numbers.
class CsvReader {
public:
    CsvReader(const std::filesystem::path& path, std::vector<std::string> expected_header);

    /// Returns false at end of file. Throws MalformedInput on a bad field count.
    bool next(std::vector<std::string_view>& fields);

    [[nodiscard]] std::size_t line_number() const noexcept { return line_no_; }
    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

    /// Throws MalformedInput naming the file and current line.
    [[noreturn]] void fail(std::string_view message) const;

    double field_double(const std::vector<std::string_view>& fields, std::size_t i) const;
    long long field_int(const std::vector<std::string_view>& fields, std::size_t i) const;

private:
    std::filesystem::path path_;
    std::ifstream in_;
    std::string line_;
    std::size_t columns_;
    std::size_t line_no_ = 0;
};

/// Writes to `<path>.tmp` and renames on close(), so readers never see partial files.
class CsvWriter {
public:
    CsvWriter(std::filesystem::path path, std::string_view header);
    ~CsvWriter();
    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

    void row(std::string_view line);
    void close();

private:
    std::filesystem::path path_;
    std::filesystem::path tmp_;
    std::ofstream out_;
    bool closed_ = false;
};

}  // namespace crowdtrack
