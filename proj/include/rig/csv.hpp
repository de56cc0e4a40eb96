#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rig {

// Column-oriented table with deterministic %.12g formatting.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    void write(std::ostream& os) const {
        for (std::size_t c = 0; c < header.size(); ++c)
            os << (c ? "," : "") << header[c];
        os << "\n";
        if (columns.empty()) return;
        const std::size_t rows = columns.front().size();
        for (const auto& col : columns)
            if (col.size() != rows) throw std::invalid_argument("CsvTable: ragged columns");
        char buf[32];
        for (std::size_t rr = 0; rr < rows; ++rr) {
            for (std::size_t c = 0; c < columns.size(); ++c) {
                std::snprintf(buf, sizeof buf, "%.12g", columns[c][rr]);
                os << (c ? "," : "") << buf;
            }
            os << "\n";
        }
    }

    void write_file(const std::string& path) const {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw std::runtime_error("cannot open " + path);
        write(os);
    }
};

}  // namespace rig
