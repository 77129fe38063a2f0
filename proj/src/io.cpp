#include "spr/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include <openssl/evp.h>

#include "spr/error.hpp"

namespace spr::io {
namespace {

std::string trim(std::string_view text) {
    auto begin = text.find_first_not_of(" \t\r\"");
    if (begin == std::string_view::npos) return {};
    auto end = text.find_last_not_of(" \t\r\"");
    return std::string(text.substr(begin, end - begin + 1));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
};

Table read_table(std::istream& in, const std::string& source) {
    Table table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
        if (line.empty() || line.front() == '#') continue;
        if (!have_header) {
            table.header = split(line);
            have_header = true;
            continue;
        }
        auto cells = split(line);
        if (cells.size() != table.header.size())
            throw SchemaError(source + ": row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                              " cells, header has " + std::to_string(table.header.size()));
        table.rows.push_back(std::move(cells));
        table.line_numbers.push_back(line_no);
    }
    if (!have_header) throw SchemaError(source + ": missing header");
    return table;
}

double parse_cell(const std::string& text, const std::string& source, std::size_t line, const std::string& column) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (text.empty() || ec != std::errc() || ptr != last || !std::isfinite(value))
        throw SchemaError(source + ": row " + std::to_string(line) + ", column '" + column + "': '" + text +
                          "' is not a finite number");
    return value;
}

/// Maps required column names to indices; rejects missing, duplicate or extra columns.
std::map<std::string, std::size_t> resolve_columns(const std::vector<std::string>& header,
                                                   const std::vector<std::string>& required,
                                                   const std::string& source, const std::string& study) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (index.contains(header[i])) throw SchemaError(source + ": duplicate column '" + header[i] + "'");
        index[header[i]] = i;
    }
    if (study == "B" && index.contains("y"))
        throw SchemaError(source + ": Study B must not contain an outcome column 'y'");
    for (const auto& name : required)
        if (!index.contains(name)) throw SchemaError(source + ": missing required column '" + name + "'");
    for (const auto& [name, i] : index)
        if (std::find(required.begin(), required.end(), name) == required.end())
            throw SchemaError(source + ": unexpected column '" + name + "' in Study " + study);
    return index;
}

int parse_group(const std::string& text, const std::string& source, std::size_t line) {
    const double g = parse_cell(text, source, line, "group");
    if (g != 0.0 && g != 1.0)
        throw SchemaError(source + ": row " + std::to_string(line) + ", column 'group': '" + text +
                          "' is not 0 or 1");
    return static_cast<int>(g);
}

void require_arms(const std::array<std::size_t, 2>& counts, const std::string& source) {
    for (int g : kArms)
        if (counts[g] == 0) throw EmptyArm(source + ": arm " + std::to_string(g) + " has no observations");
}

std::ifstream open(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open " + path.string());
    return in;
}

} // namespace

StudyAData parse_study_a(std::istream& in, const std::string& source) {
    const auto table = read_table(in, source);
    const auto col = resolve_columns(table.header, {"group", "s", "y"}, source, "A");
    StudyAData data;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const auto line = table.line_numbers[r];
        const int g = parse_group(row[col.at("group")], source, line);
        data.arms[g].surrogates.push_back(parse_cell(row[col.at("s")], source, line, "s"));
        data.arms[g].outcomes.push_back(parse_cell(row[col.at("y")], source, line, "y"));
    }
    require_arms({data.arms[0].surrogates.size(), data.arms[1].surrogates.size()}, source);
    return data;
}

StudyBData parse_study_b(std::istream& in, const std::string& source) {
    const auto table = read_table(in, source);
    const auto col = resolve_columns(table.header, {"group", "s"}, source, "B");
    StudyBData data;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const auto line = table.line_numbers[r];
        const int g = parse_group(row[col.at("group")], source, line);
        data.surrogates[g].push_back(parse_cell(row[col.at("s")], source, line, "s"));
    }
    require_arms({data.surrogates[0].size(), data.surrogates[1].size()}, source);
    return data;
}

StudyAData load_study_a(const std::filesystem::path& path) {
    auto in = open(path);
    return parse_study_a(in, path.filename().string());
}

StudyBData load_study_b(const std::filesystem::path& path) {
    auto in = open(path);
    return parse_study_b(in, path.filename().string());
}

std::variant<StudyAData, StudyBData> load_study(const std::filesystem::path& path, StudyRole role) {
    if (role == StudyRole::A) return load_study_a(path);
    return load_study_b(path);
}

std::string format_number(double value) {
    if (value == 0.0) return "0";  // also folds -0
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::string sha256_hex(const std::string& bytes) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &length) != 1)
        throw Error("SHA-256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < length; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string sha256_file(const std::filesystem::path& path) {
    return sha256_hex(read_text(path));
}

CsvTable::CsvTable(std::string manifest_digest, std::vector<std::string> header)
    : digest_(std::move(manifest_digest)), header_(std::move(header)) {}

void CsvTable::add_row(std::vector<std::string> cells) {
    rows_.push_back(std::move(cells));
}

CsvTable& CsvTable::row() {
    rows_.emplace_back();
    return *this;
}

CsvTable& CsvTable::cell(double value) {
    rows_.back().push_back(format_number(value));
    return *this;
}

CsvTable& CsvTable::cell(long long value) {
    rows_.back().push_back(std::to_string(value));
    return *this;
}

CsvTable& CsvTable::cell(const std::string& text) {
    if (text.find_first_of(",\"\n") != std::string::npos) {
        std::string quoted = "\"";
        for (char c : text) {
            if (c == '"') quoted.push_back('"');
            quoted.push_back(c);
        }
        rows_.back().push_back(quoted + "\"");
    } else {
        rows_.back().push_back(text);
    }
    return *this;
}

std::string CsvTable::str() const {
    std::ostringstream out;
    out << "# manifest_sha256=" << digest_ << '\n';
    auto emit = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
        out << '\n';
    };
    emit(header_);
    for (const auto& r : rows_) emit(r);
    return out.str();
}

void CsvTable::write(const std::filesystem::path& path) const {
    write_text(path, str());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace spr::io
