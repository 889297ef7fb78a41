#include "lvstab/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include <fmt/format.h>

#include "lvstab/errors.hpp"

namespace lvstab {
namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument(fmt::format("cannot open {} for writing", path.string()));
    return out;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
}

double parse_real(const std::string& text, const std::filesystem::path& path, std::size_t line) {
    try {
        std::size_t used = 0;
        const double x = std::stod(text, &used);
        if (used != text.size() && text.find_first_not_of(" \r", used) != std::string::npos) throw std::invalid_argument(text);
        return x;
    } catch (const std::exception&) {
        throw InvalidArgument(fmt::format("{}:{}: cannot parse number '{}'", path.string(), line, text));
    }
}

}  // namespace

std::string format_real(double x) { return fmt::format("{:.16e}", x); }

void write_field_csv(std::ostream& out, const Field& f) {
    const Grid& grid = f.grid();
    out << (grid.dimension() == 1 ? "index,coord1,value\n" : "index,coord1,coord2,value\n");
    for (std::size_t k = 0; k < f.size(); ++k) {
        out << k << ',' << format_real(grid.coordinate(k, 0));
        if (grid.dimension() == 2) out << ',' << format_real(grid.coordinate(k, 1));
        out << ',' << format_real(f[k]) << '\n';
    }
}

void write_field_csv(const std::filesystem::path& path, const Field& f) {
    auto out = open_for_write(path);
    write_field_csv(out, f);
}

Field read_field_csv(const std::filesystem::path& path, const Grid& grid) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument(fmt::format("cannot open field file {}", path.string()));
    const std::size_t columns = grid.dimension() == 1 ? 3 : 4;
    std::string line;
    std::getline(in, line);
    Vector values(static_cast<Eigen::Index>(grid.size()));
    std::size_t row = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split(line);
        if (cells.size() != columns) {
            throw InvalidArgument(fmt::format("{}:{}: expected {} columns", path.string(), line_no, columns));
        }
        if (row >= grid.size()) throw InvalidArgument(fmt::format("{}: more rows than grid nodes", path.string()));
        for (int axis = 0; axis < grid.dimension(); ++axis) {
            const double x = parse_real(cells[1 + static_cast<std::size_t>(axis)], path, line_no);
            const double want = grid.coordinate(row, axis);
            if (std::abs(x - want) > 1e-9 * std::max(1.0, std::abs(want))) {
                throw InvalidArgument(fmt::format("{}:{}: coordinate {} does not match grid node {}", path.string(),
                                                  line_no, x, want));
            }
        }
        values[static_cast<Eigen::Index>(row)] = parse_real(cells.back(), path, line_no);
        ++row;
    }
    if (row != grid.size()) {
        throw InvalidArgument(fmt::format("{}: {} rows but the grid has {} nodes", path.string(), row, grid.size()));
    }
    return Field(grid, std::move(values));
}

void write_spectrum_csv(const std::filesystem::path& path, const Spectrum& spectrum) {
    auto out = open_for_write(path);
    out << "index,lambda,residual\n";
    for (std::size_t i = 0; i < spectrum.pairs.size(); ++i) {
        out << i + 1 << ',' << format_real(spectrum.pairs[i].lambda) << ','
            << format_real(spectrum.pairs[i].residual) << '\n';
    }
}

}  // namespace lvstab
