#include "mag/report.hpp"

#include <cstdio>
#include <cstring>

#include "mag/errors.hpp"

namespace mag {

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(std::string path) : path_(std::move(path)) {
    FILE* f = std::fopen(path_.c_str(), "wb");
    if (!f) throw config_error("CsvWriter: cannot open " + path_);
    out_ = f;
}

CsvWriter::~CsvWriter() {
    if (out_) std::fclose(static_cast<FILE*>(out_));
}

void CsvWriter::header(const std::vector<std::string>& names) { raw_row(names); }

void CsvWriter::row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_number(v));
    raw_row(cells);
}

void CsvWriter::raw_row(const std::vector<std::string>& cells) {
    FILE* f = static_cast<FILE*>(out_);
    for (size_t i = 0; i < cells.size(); ++i) {
        const std::string& c = cells[i];
        bool quote = c.find_first_of(",\"\n") != std::string::npos;
        if (quote) {
            std::fputc('"', f);
            for (char ch : c) {
                if (ch == '"') std::fputc('"', f);
                std::fputc(ch, f);
            }
            std::fputc('"', f);
        } else {
            std::fwrite(c.data(), 1, c.size(), f);
        }
        if (i + 1 < cells.size()) std::fputc(',', f);
    }
    std::fputc('\n', f);
}

}  // namespace mag
