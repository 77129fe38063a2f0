#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <variant>
#include <vector>

#include "spr/study.hpp"

namespace spr::io {

enum class StudyRole { A, B };

/// Study A: columns exactly {group, s, y}. Study B: exactly {group, s}; a y
/// column is rejected. Column order is free; lines starting with '#' are
/// skipped. Throws SchemaError (row and column named) or EmptyArm.
StudyAData parse_study_a(std::istream& in, const std::string& source);
StudyBData parse_study_b(std::istream& in, const std::string& source);

StudyAData load_study_a(const std::filesystem::path& path);
StudyBData load_study_b(const std::filesystem::path& path);
std::variant<StudyAData, StudyBData> load_study(const std::filesystem::path& path, StudyRole role);

/// Fixed 17 significant digits, so every double round-trips.
std::string format_number(double value);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Comma-separated table written with a leading "# manifest_sha256=..." line.
class CsvTable {
public:
    CsvTable(std::string manifest_digest, std::vector<std::string> header);

    void add_row(std::vector<std::string> cells);
    CsvTable& row();
    CsvTable& cell(double value);
    CsvTable& cell(long long value);
    CsvTable& cell(std::size_t value) { return cell(static_cast<long long>(value)); }
    CsvTable& cell(int value) { return cell(static_cast<long long>(value)); }
    CsvTable& cell(const std::string& text);

    std::string str() const;
    void write(const std::filesystem::path& path) const;

private:
    std::string digest_;
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

} // namespace spr::io
