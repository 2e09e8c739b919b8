#pragma once

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "pks/fields.hpp"

namespace pks {

inline constexpr int csv_digits = 17;

inline void write_snapshot(std::ostream& os, const RadialField& f, double t) {
    os << std::setprecision(csv_digits);
    os << "# dim=" << f.dim() << " kind=radial t=" << t << "\n";
    for (std::size_t i = 0; i < f.size(); ++i) os << f.grid().node(i) << "," << f[i] << "\n";
}

inline void write_snapshot(std::ostream& os, const CartesianField2D& f, double t) {
    os << std::setprecision(csv_digits);
    os << "# dim=2 kind=cart2d t=" << t << "\n";
    const auto& g = f.grid();
    for (std::size_t iy = 0; iy < g.n(); ++iy)
        for (std::size_t ix = 0; ix < g.n(); ++ix)
            os << g.coord(ix) << "," << g.coord(iy) << "," << f.at(ix, iy) << "\n";
}

template <DensityField Field>
void write_snapshot(const std::string& path, const Field& f, double t) {
    std::ofstream os(path);
    require(static_cast<bool>(os), ErrorCode::InvalidParameter, "cannot write " + path);
    write_snapshot(os, f, t);
}

struct Snapshot {
    int dim = 2;
    std::string kind;
    double t = 0.0;
    std::vector<std::vector<double>> rows;
};

/// Parses the snapshot header and rows; the caller resamples onto its grid.
inline Snapshot read_snapshot(const std::string& path) {
    std::ifstream is(path);
    require(static_cast<bool>(is), ErrorCode::InvalidData, "cannot read snapshot " + path);
    Snapshot s;
    std::string line;
    require(static_cast<bool>(std::getline(is, line)) && line.rfind("#", 0) == 0, ErrorCode::InvalidData,
            "snapshot " + path + " lacks the '# dim=' header");
    std::istringstream head(line.substr(1));
    std::string tok;
    while (head >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const auto key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "dim") s.dim = std::stoi(val);
        else if (key == "kind") s.kind = val;
        else if (key == "t") s.t = std::stod(val);
    }
    require(s.kind == "radial" || s.kind == "cart2d", ErrorCode::InvalidData, "unknown snapshot kind '" + s.kind + "'");
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        require(row.size() == (s.kind == "radial" ? 2u : 3u), ErrorCode::InvalidData, "bad snapshot row: " + line);
        s.rows.push_back(std::move(row));
    }
    return s;
}

/// Radial snapshot resampled onto a grid by piecewise-linear interpolation.
inline RadialField snapshot_to_radial(const Snapshot& s, const RadialGridPtr& grid) {
    require(s.kind == "radial" && s.dim == grid->dim(), ErrorCode::InvalidData, "snapshot does not match the grid");
    require(s.rows.size() >= 2, ErrorCode::InvalidData, "snapshot has fewer than two rows");
    return sample_radial(grid, [&](double r) {
        if (r <= s.rows.front()[0]) return s.rows.front()[1];
        if (r > s.rows.back()[0]) return 0.0;
        if (r == s.rows.back()[0]) return s.rows.back()[1];
        std::size_t lo = 0, hi = s.rows.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            (s.rows[mid][0] <= r ? lo : hi) = mid;
        }
        const double a = (r - s.rows[lo][0]) / (s.rows[hi][0] - s.rows[lo][0]);
        return (1 - a) * s.rows[lo][1] + a * s.rows[hi][1];
    });
}

/// Planar snapshot on a matching grid; rows must follow the grid's storage order.
inline CartesianField2D snapshot_to_cartesian(const Snapshot& s, const CartesianGridPtr& grid) {
    require(s.kind == "cart2d", ErrorCode::InvalidData, "snapshot is not planar");
    require(s.rows.size() == grid->size(), ErrorCode::InvalidData, "snapshot size does not match the grid");
    std::vector<double> v(grid->size());
    for (std::size_t e = 0; e < v.size(); ++e) {
        const auto& row = s.rows[e];
        require(std::fabs(row[0] - grid->coord(e % grid->n())) < 1e-9 * grid->half_width() &&
                    std::fabs(row[1] - grid->coord(e / grid->n())) < 1e-9 * grid->half_width(),
                ErrorCode::InvalidData, "snapshot coordinates do not match the grid");
        v[e] = row[2];
    }
    return CartesianField2D(grid, std::move(v));
}

}  // namespace pks
