#pragma once

#include <string>
#include <vector>

namespace nudgeda {

// 17 significant digits; round-trips doubles exactly and keeps CSV output
// byte-reproducible.
std::string fmt17(double v);

// Write-temp-then-rename so partial files never appear under the final name.
void write_text_atomic(const std::string& path, const std::string& content);

// Comma-separated, one header row, LF line endings, 17 significant digits.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

// Columnar text: named columns of equal length.
void write_columns(const std::string& path, const std::vector<std::string>& names,
                   const std::vector<std::vector<double>>& columns);

void ensure_dir(const std::string& path);
bool file_exists(const std::string& path);

}  // namespace nudgeda
