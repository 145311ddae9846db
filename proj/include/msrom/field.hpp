#pragma once

#include "msrom/error.hpp"
#include "msrom/grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace msrom {

/// Piecewise-constant coefficient, one positive value per fine cell.
class PermeabilityField {
public:
    PermeabilityField() = default;

    PermeabilityField(int nx, int ny, std::vector<double> values) : nx_(nx), ny_(ny), values_(std::move(values)) {
        if (static_cast<long long>(values_.size()) != static_cast<long long>(nx) * ny) {
            throw ConfigError("field", "expected " + std::to_string(nx * ny) + " values, got " +
                                           std::to_string(values_.size()));
        }
        for (double v : values_) {
            if (!(v > 0.0)) throw ConfigError("field", "non-positive permeability");
        }
        const auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
        contrast_ = *hi / *lo;
    }

    static PermeabilityField constant(int nx, int ny, double value = 1.0) {
        return PermeabilityField(nx, ny, std::vector<double>(static_cast<std::size_t>(nx) * ny, value));
    }

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double contrast() const { return contrast_; }
    double operator[](int cell) const { return values_[cell]; }
    double at(int i, int j) const { return values_[j * nx_ + i]; }
    const std::vector<double>& values() const { return values_; }
    double min() const { return *std::min_element(values_.begin(), values_.end()); }
    double max() const { return *std::max_element(values_.begin(), values_.end()); }

    bool matches(const FineMesh& m) const { return nx_ == m.nx && ny_ == m.ny; }

    PermeabilityField scaled(double c) const {
        std::vector<double> v(values_);
        for (double& x : v) x *= c;
        return PermeabilityField(nx_, ny_, std::move(v));
    }

    friend bool operator==(const PermeabilityField&, const PermeabilityField&) = default;

private:
    int nx_ = 0;
    int ny_ = 0;
    std::vector<double> values_;
    double contrast_ = 1.0;
};

namespace detail {

// Portable integer draws; std distributions are implementation-defined.
class FieldRng {
public:
    explicit FieldRng(std::uint64_t seed) : eng_(seed) {}
    double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    int below(int n) { return static_cast<int>(eng_() % static_cast<std::uint64_t>(n)); }

private:
    std::mt19937_64 eng_;
};

} // namespace detail

/// Background 1 with high-conductivity channels and blocky inclusions at
/// value `contrast`. One or two horizontal channels cross the whole domain.
///
/// Geometry lives on a lattice of spacing 1/64 in physical coordinates, so the
/// same seed gives the same layout at every resolution that is a multiple of
/// 64. Every feature keeps at least 1/64 clear of the lines x, y = k/16: a
/// high-contrast feature running along a coarse edge or through a coarse node
/// makes the linear-boundary partition of unity lock, so layouts avoid the
/// coarse grids H = 1/2, ..., 1/16. Channels still cross coarse edges
/// transversally.
inline PermeabilityField generate_channelized(const FineMesh& fine, double contrast, std::uint64_t layout_seed) {
    if (!(contrast >= 1.0)) throw ConfigError("field", "contrast must be >= 1");
    const int nx = fine.nx, ny = fine.ny;
    std::vector<double> v(static_cast<std::size_t>(nx) * ny, 1.0);
    if (contrast == 1.0) return PermeabilityField(nx, ny, std::move(v));

    detail::FieldRng rng(layout_seed);
    // Rectangle [x0, x1) x [y0, y1) in lattice units of 1/64.
    auto paint = [&](int x0, int x1, int y0, int y1) {
        auto lo = [](int s, int n) { return std::clamp(static_cast<int>(std::floor(s * n / 64.0)), 0, n - 1); };
        auto hi = [&](int s0, int s1, int n) {
            return std::clamp(std::max(lo(s0, n) + 1, static_cast<int>(std::ceil(s1 * n / 64.0))), 1, n);
        };
        const int i0 = lo(x0, nx), i1 = hi(x0, x1, nx), j0 = lo(y0, ny), j1 = hi(y0, y1, ny);
        for (int j = j0; j < j1; ++j)
            for (int i = i0; i < i1; ++i) v[static_cast<std::size_t>(j) * nx + i] = contrast;
    };
    // Macro cells of size 4/64 = 1/16; k in 1..14 keeps features off the outer ring.
    auto macro = [&] { return 1 + rng.below(14); };

    const int n_horizontal = 1 + rng.below(2);
    int used_row = -1;
    for (int c = 0; c < n_horizontal; ++c) {
        int k = macro();
        while (k == used_row || k == used_row + 1 || k == used_row - 1) k = macro();
        used_row = k;
        const int t = 1 + rng.below(2);
        const int y = 4 * k + 1;
        if (rng.below(2) == 0) {
            paint(0, 64, y, y + t);
            continue;
        }
        // Stepped channel: jumps one macro row at macro column m.
        const int m = 3 + rng.below(10);
        const int k2 = k == 14 ? 13 : (k == 1 ? 2 : k + (rng.below(2) ? 1 : -1));
        const int y2 = 4 * k2 + 1;
        const int x = 4 * m + 1;
        paint(0, x + t, y, y + t);
        paint(x, 64, y2, y2 + t);
        paint(x, x + t, std::min(y, y2), std::max(y, y2) + t);
    }

    const int n_vertical = 1 + rng.below(2);
    for (int c = 0; c < n_vertical; ++c) {
        const int m = macro();
        const int a = 1 + rng.below(6);
        const int b = std::min(14, a + 4 + rng.below(5));
        paint(4 * m + 1, 4 * m + 2, 4 * a + 1, 4 * b + 3);
    }

    const int n_blocks = 6 + rng.below(5);
    for (int c = 0; c < n_blocks; ++c) {
        const int I = macro(), J = macro();
        const int w = 1 + rng.below(2), h = 1 + rng.below(2);
        paint(4 * I + 1, 4 * I + 1 + w, 4 * J + 1, 4 * J + 1 + h);
    }
    return PermeabilityField(nx, ny, std::move(v));
}

/// Text format: first line "nx ny", then nx*ny values, x fastest. Shared by
/// permeability fields (per cell) and solution snapshots (per node).
struct GridValues {
    int nx = 0;
    int ny = 0;
    std::vector<double> values;
};

inline GridValues read_grid_values(std::istream& is, bool require_positive) {
    std::string line;
    int lineno = 0;
    GridValues g;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream hs(line);
        std::string extra;
        if (!(hs >> g.nx >> g.ny) || (hs >> extra) || g.nx < 1 || g.ny < 1) {
            throw ConfigError("field", "line " + std::to_string(lineno) + ": malformed header, expected 'nx ny'");
        }
        break;
    }
    if (g.nx == 0) throw ConfigError("field", "missing header");

    const std::size_t expected = static_cast<std::size_t>(g.nx) * g.ny;
    g.values.reserve(expected);
    while (std::getline(is, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) {
            double x = 0.0;
            const auto* first = tok.data();
            const auto* last = tok.data() + tok.size();
            auto [ptr, ec] = std::from_chars(first, last, x);
            if (ec != std::errc() || ptr != last) {
                throw ConfigError("field", "line " + std::to_string(lineno) + ": cannot parse value '" + tok + "'");
            }
            if (require_positive && !(x > 0.0)) {
                throw ConfigError("field", "line " + std::to_string(lineno) + ": non-positive permeability " + tok);
            }
            if (g.values.size() == expected) {
                throw ConfigError("field", "line " + std::to_string(lineno) + ": more than " +
                                               std::to_string(expected) + " values");
            }
            g.values.push_back(x);
        }
    }
    if (g.values.size() != expected) {
        throw ConfigError("field", "line " + std::to_string(lineno) + ": expected " + std::to_string(expected) +
                                       " values, found " + std::to_string(g.values.size()));
    }
    return g;
}

inline void write_grid_values(std::ostream& os, int nx, int ny, const std::vector<double>& values) {
    os << nx << ' ' << ny << '\n';
    os << std::setprecision(17);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            if (i) os << ' ';
            os << values[static_cast<std::size_t>(j) * nx + i];
        }
        os << '\n';
    }
}

inline void save_field(const PermeabilityField& f, std::ostream& os) {
    write_grid_values(os, f.nx(), f.ny(), f.values());
}

inline void save_field(const PermeabilityField& f, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("field", "cannot open " + path + " for writing");
    save_field(f, os);
}

inline PermeabilityField load_field(std::istream& is) {
    GridValues g = read_grid_values(is, true);
    return PermeabilityField(g.nx, g.ny, std::move(g.values));
}

inline PermeabilityField load_field(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("field", "cannot open " + path);
    return load_field(is);
}

} // namespace msrom
