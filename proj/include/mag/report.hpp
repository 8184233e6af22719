#pragma once

#include <string>
#include <vector>

namespace mag {

/// CSV writer with fixed numeric formatting: '.' decimal separator, 17
/// significant digits, RFC-style quoting for non-numeric cells.
class CsvWriter {
public:
    explicit CsvWriter(std::string path);
    ~CsvWriter();
    void header(const std::vector<std::string>& names);
    void row(const std::vector<double>& values);
    void raw_row(const std::vector<std::string>& cells);
    const std::string& path() const { return path_; }

private:
    std::string path_;
    void* out_;  // FILE*
};

std::string format_number(double v);  // 17 significant digits

}  // namespace mag
