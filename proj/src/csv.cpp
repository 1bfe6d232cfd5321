#include "bovi/csv.hpp"

#include "bovi/errors.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace bovi::csv {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(trim(cur));
    return fields;
}

double parse_double(const std::string& s, const char* context) {
    if (s.empty()) throw MalformedCsv(std::string(context) + ": empty numeric field");
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE)
        throw MalformedCsv(std::string(context) + ": not a number: '" + s + "'");
    return v;
}

long parse_long(const std::string& s, const char* context) {
    if (s.empty()) throw MalformedCsv(std::string(context) + ": empty integer field");
    errno = 0;
    char* end = nullptr;
    long v = std::strtol(s.c_str(), &end, 10);
    if (end != s.c_str() + s.size() || errno == ERANGE)
        throw MalformedCsv(std::string(context) + ": not an integer: '" + s + "'");
    return v;
}

Grid<double> read_numeric_grid(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());

    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto fields = split_row(line);
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) row.push_back(parse_double(f, path.c_str()));
        if (!rows.empty() && row.size() != rows.front().size())
            throw MalformedCsv(path.string() + ": ragged row " + std::to_string(rows.size() + 1));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw MalformedCsv(path.string() + ": empty grid");

    Grid<double> grid(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index y = 0; y < grid.rows(); ++y)
        for (Eigen::Index x = 0; x < grid.cols(); ++x)
            grid(y, x) = rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)];
    return grid;
}

void write_numeric_grid(const std::filesystem::path& path, const Grid<double>& grid) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (Eigen::Index y = 0; y < grid.rows(); ++y) {
        for (Eigen::Index x = 0; x < grid.cols(); ++x) {
            if (x) out << ',';
            out << format_double(grid(y, x));
        }
        out << '\n';
    }
}

std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        rows.push_back(split_row(line));
    }
    return rows;
}

std::string format_double(double v) {
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

} // namespace bovi::csv
