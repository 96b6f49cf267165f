#include "tailstab/csv.hpp"

#include "tailstab/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tailstab::csv {

std::string format(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string format(std::size_t v) { return std::to_string(v); }

std::string to_string(const Table& table) {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    line(table.header);
    for (const auto& r : table.rows) line(r);
    return out;
}

void write(const std::filesystem::path& path, const Table& table) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    const auto text = to_string(table);
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) fail(ErrorKind::Io, "write failed: " + path.string());
}

std::vector<double> read_column(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) fail(ErrorKind::Io, "cannot open " + path.string());
    std::vector<double> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t");
        const std::string cell = line.substr(first, last - first + 1);
        double v = 0.0;
        const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
            if (lineno == 1 && out.empty()) continue;  // header
            fail(ErrorKind::Io, path.string() + ":" + std::to_string(lineno) + ": not a number: '" + cell + "'");
        }
        out.push_back(v);
    }
    return out;
}

}  // namespace tailstab::csv
