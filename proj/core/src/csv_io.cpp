#include "crowdtrack/csv_io.hpp"

#include "crowdtrack/error.hpp"

#include <fmt/format.h>

#include <charconv>
#include <system_error>

namespace crowdtrack {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

}  // namespace

std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    if (!line.empty() && line.back() == '\r') {
        line.remove_suffix(1);
    }
    if (trim(line).empty()) {
        return out;
    }
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

bool parse_double(std::string_view text, double& out) noexcept {
    text = trim(text);
    if (text.empty()) {
        return false;
    }
    if (text.front() == '+') {
        text.remove_prefix(1);
    }
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc() && ptr == end;
}

bool parse_int(std::string_view text, long long& out) noexcept {
    text = trim(text);
    if (text.empty()) {
        return false;
    }
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc() && ptr == end;
}

CsvReader::CsvReader(const std::filesystem::path& path, std::vector<std::string> expected_header)
    : path_(path), in_(path), columns_(expected_header.size()) {
    if (!in_) {
        throw Error(ErrorKind::Io, fmt::format("cannot open '{}'", path.string()));
    }
    if (!std::getline(in_, line_)) {
        throw Error(ErrorKind::MalformedInput, fmt::format("{}: missing header row", path.string()));
    }
    ++line_no_;
    const auto header = split_csv_line(line_);
    bool ok = header.size() == expected_header.size();
    for (std::size_t i = 0; ok && i < header.size(); ++i) {
        ok = header[i] == expected_header[i];
    }
    if (!ok) {
        fail(fmt::format("expected header '{}'", fmt::join(expected_header, ",")));
    }
}

bool CsvReader::next(std::vector<std::string_view>& fields) {
    while (std::getline(in_, line_)) {
        ++line_no_;
        fields = split_csv_line(line_);
        if (fields.empty()) {
            continue;
        }
        if (fields.size() != columns_) {
            fail(fmt::format("expected {} fields, got {}", columns_, fields.size()));
        }
        return true;
    }
    return false;
}

void CsvReader::fail(std::string_view message) const {
    throw Error(ErrorKind::MalformedInput,
                fmt::format("{}: row {}: {}", path_.string(), line_no_, message));
}

double CsvReader::field_double(const std::vector<std::string_view>& fields, std::size_t i) const {
    double v = 0.0;
    if (!parse_double(fields[i], v)) {
        fail(fmt::format("field {} ('{}') is not a number", i + 1, fields[i]));
    }
    return v;
}

long long CsvReader::field_int(const std::vector<std::string_view>& fields, std::size_t i) const {
    long long v = 0;
    if (!parse_int(fields[i], v)) {
        fail(fmt::format("field {} ('{}') is not an integer", i + 1, fields[i]));
    }
    return v;
}

CsvWriter::CsvWriter(std::filesystem::path path, std::string_view header)
    : path_(std::move(path)), tmp_(path_.string() + ".tmp"), out_(tmp_, std::ios::binary) {
    if (!out_) {
        throw Error(ErrorKind::Io, fmt::format("cannot write '{}'", tmp_.string()));
    }
    out_ << header << '\n';
}

CsvWriter::~CsvWriter() {
    if (!closed_) {
        out_.close();
        std::error_code ec;
        std::filesystem::remove(tmp_, ec);
    }
}

void CsvWriter::row(std::string_view line) { out_ << line << '\n'; }

void CsvWriter::close() {
    if (closed_) {
        return;
    }
    out_.close();
    if (!out_) {
        throw Error(ErrorKind::Io, fmt::format("failed writing '{}'", tmp_.string()));
    }
    std::filesystem::rename(tmp_, path_);
    closed_ = true;
}

}  // namespace crowdtrack
