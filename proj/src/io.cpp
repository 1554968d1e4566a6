#include "nudgeda/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "nudgeda/error.hpp"

namespace fs = std::filesystem;

namespace nudgeda {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text_atomic(const std::string& path, const std::string& content) {
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        require(out.good(), "io-error: cannot open " + tmp.string());
        out << content;
        require(out.good(), "io-error: write failed for " + tmp.string());
    }
    fs::rename(tmp, target);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        out += header[i];
    }
    out += '\n';
    for (const auto& row : rows) {
        require(row.size() == header.size(), "io-error: CSV row width does not match header");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += fmt17(row[i]);
        }
        out += '\n';
    }
    write_text_atomic(path, out);
}

void write_columns(const std::string& path, const std::vector<std::string>& names,
                   const std::vector<std::vector<double>>& columns) {
    require(names.size() == columns.size(), "io-error: column count does not match names");
    std::vector<std::vector<double>> rows;
    if (!columns.empty()) {
        const std::size_t n = columns[0].size();
        for (const auto& c : columns)
            require(c.size() == n, "io-error: columns have unequal lengths");
        rows.resize(n, std::vector<double>(columns.size()));
        for (std::size_t j = 0; j < columns.size(); ++j)
            for (std::size_t i = 0; i < n; ++i) rows[i][j] = columns[j][i];
    }
    write_csv(path, names, rows);
}

void ensure_dir(const std::string& path) { fs::create_directories(path); }

bool file_exists(const std::string& path) { return fs::exists(path); }

}  // namespace nudgeda
