#include "latgm/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "latgm/error.hpp"

namespace latgm::io {

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";  // folds -0
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
    text = trim(text);
    if (text == "inf" || text == "+inf" || text == "Inf" || text == "infinity") {
        return std::numeric_limits<double>::infinity();
    }
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw ConfigError("not a number: '" + std::string(text) + "'");
    }
    return v;
}

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        out.emplace_back(trim(text.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

std::string matrix_to_csv(const DenseMatrix& m) {
    std::string s;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) s += ',';
            s += format_double(m(i, j));
        }
        s += '\n';
    }
    return s;
}

DenseMatrix matrix_from_csv(std::string_view text) {
    std::vector<double> entries;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const auto line = trim(text.substr(start, end - start));
        start = end + 1;
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (rows == 0) {
            cols = fields.size();
        } else if (fields.size() != cols) {
            throw DimensionError("CSV row " + std::to_string(rows + 1) + " has " + std::to_string(fields.size()) +
                                 " fields, expected " + std::to_string(cols));
        }
        for (const auto& f : fields) {
            double v = 0.0;
            try {
                v = parse_double(f);
            } catch (const ConfigError&) {
                throw DimensionError("CSV row " + std::to_string(rows + 1) + ": bad field '" + f + "'");
            }
            if (!std::isfinite(v)) throw DimensionError("CSV row " + std::to_string(rows + 1) + ": non-finite entry");
            entries.push_back(v);
        }
        ++rows;
    }
    if (rows == 0) throw DimensionError("CSV contains no rows");
    return DenseMatrix(rows, cols, std::move(entries));
}

DenseMatrix read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DimensionError("cannot open matrix file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return matrix_from_csv(ss.str());
}

void write_matrix_csv(const std::filesystem::path& path, const DenseMatrix& m) { write_text(path, matrix_to_csv(m)); }

std::vector<std::size_t> read_index_list(const std::filesystem::path& path) {
    std::vector<std::size_t> idx;
    std::istringstream in(read_text(path));
    std::string line;
    while (std::getline(in, line)) {
        const auto t = trim(line);
        if (t.empty()) continue;
        std::size_t v = 0;
        const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
        if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
            throw ConfigError("bad index '" + std::string(t) + "' in " + path.string());
        }
        idx.push_back(v);
    }
    return idx;
}

void write_index_list(const std::filesystem::path& path, const std::vector<std::size_t>& idx) {
    std::string s;
    for (auto i : idx) s += std::to_string(i) + '\n';
    write_text(path, s);
}

KeyValues parse_key_values(std::string_view text) {
    KeyValues kv;
    std::size_t start = 0;
    std::size_t lineno = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const auto line = trim(text.substr(start, end - start));
        start = end + 1;
        ++lineno;
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos || eq == 0) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
        }
        kv[std::string(trim(line.substr(0, eq)))] = std::string(trim(line.substr(eq + 1)));
    }
    return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) { return parse_key_values(read_text(path)); }

void write_key_values(const std::filesystem::path& path, const std::vector<std::pair<std::string, std::string>>& kv) {
    std::string s;
    for (const auto& [k, v] : kv) s += k + '=' + v + '\n';
    write_text(path, s);
}

}  // namespace latgm::io
