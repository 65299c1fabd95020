#include "tonelab/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace tonelab {

namespace {

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

}  // namespace

CsvReader::CsvReader(const std::string& path, const std::vector<std::string>& expected_header)
    : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path + ": cannot open file");
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines_.push_back(line);
    }
    if (lines_.empty()) throw ParseError(path + ":1: missing header row");
    const auto header = split_commas(lines_[0]);
    if (header != expected_header) {
        std::ostringstream msg;
        msg << path_ << ":1: bad header, expected \"";
        for (std::size_t i = 0; i < expected_header.size(); ++i)
            msg << (i ? "," : "") << expected_header[i];
        msg << "\" got \"" << lines_[0] << "\"";
        throw ParseError(msg.str());
    }
    n_fields_ = expected_header.size();
    line_ = 1;
}

bool CsvReader::next_row(std::vector<std::string>& fields) {
    // Skip blank lines (commonly a trailing newline).
    while (line_ < lines_.size() && lines_[line_].empty()) ++line_;
    if (line_ >= lines_.size()) return false;
    ++line_;
    fields = split_commas(lines_[line_ - 1]);
    if (fields.size() != n_fields_) {
        std::ostringstream msg;
        msg << path_ << ":" << line_ << ":" << fields.size()
            << ": expected " << n_fields_ << " fields, got " << fields.size();
        throw ParseError(msg.str());
    }
    return true;
}

double CsvReader::as_double(const std::string& field, std::size_t column1) const {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (field.empty() || end != field.c_str() + field.size() || errno == ERANGE)
        fail(column1, "not a number: \"" + field + "\"");
    return v;
}

std::int64_t CsvReader::as_int(const std::string& field, std::size_t column1) const {
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(field.c_str(), &end, 10);
    if (field.empty() || end != field.c_str() + field.size() || errno == ERANGE)
        fail(column1, "not an integer: \"" + field + "\"");
    return static_cast<std::int64_t>(v);
}

void CsvReader::fail(std::size_t column1, const std::string& what) const {
    std::ostringstream msg;
    msg << path_ << ":" << line_ << ":" << column1 << ": " << what;
    throw ParseError(msg.str());
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError(path + ": cannot open for writing");
    out << content;
    if (!out) throw ConfigError(path + ": write failed");
}

}  // namespace tonelab
