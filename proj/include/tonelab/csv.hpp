#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tonelab/errors.hpp"

namespace tonelab {

// Minimal delimited-text reader: comma split, no quoting (labels are plain
// identifiers), UTF-8 passthrough. Errors carry file, 1-based line, and
// 1-based column (field index).
class CsvReader {
public:
    CsvReader(const std::string& path, const std::vector<std::string>& expected_header);

    // Returns false at EOF; otherwise fills fields (size = header size).
    bool next_row(std::vector<std::string>& fields);

    double as_double(const std::string& field, std::size_t column1) const;
    std::int64_t as_int(const std::string& field, std::size_t column1) const;

    [[noreturn]] void fail(std::size_t column1, const std::string& what) const;
    std::size_t line() const { return line_; }

private:
    std::string path_;
    std::vector<std::string> lines_;
    std::size_t line_ = 0;  // 1-based index of the row just returned
    std::size_t n_fields_ = 0;
};

// %.17g so round-tripping through text is value-exact for doubles.
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace tonelab
