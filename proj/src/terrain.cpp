#include "demboost/terrain.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace demboost {

namespace {

constexpr double kRadToDeg = 57.295779513082320876798154814105;

inline int clamp_index(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

// Gathers the clamped 3x3 neighbourhood around (r, c), row-major.
// Returns false when any sampled cell is nodata.
inline bool window3x3(const Grid& g, int r, int c, std::array<double, 9>& z) {
    bool ok = true;
    int k = 0;
    for (int dr = -1; dr <= 1; ++dr) {
        const int rr = clamp_index(r + dr, g.nrows());
        for (int dc = -1; dc <= 1; ++dc) {
            const int cc = clamp_index(c + dc, g.ncols());
            if (!g.is_valid(rr, cc)) ok = false;
            z[k++] = g.at(rr, cc);
        }
    }
    return ok;
}

// Horn (1981) weighted finite differences. dzdy is the northward derivative.
inline void horn_gradient(const std::array<double, 9>& z, double cellsize, double& dzdx, double& dzdy) {
    const double denom = 8.0 * cellsize;
    dzdx = ((z[2] + 2.0 * z[5] + z[8]) - (z[0] + 2.0 * z[3] + z[6])) / denom;
    dzdy = ((z[0] + 2.0 * z[1] + z[2]) - (z[6] + 2.0 * z[7] + z[8])) / denom;
}

}  // namespace

Grid slope(const Grid& dem) {
    Grid out(dem.header(), dem.nodata());
    std::array<double, 9> z;
    for (int r = 0; r < dem.nrows(); ++r) {
        for (int c = 0; c < dem.ncols(); ++c) {
            if (!window3x3(dem, r, c, z)) continue;
            double dzdx, dzdy;
            horn_gradient(z, dem.header().cellsize, dzdx, dzdy);
            out.at(r, c) = std::atan(std::hypot(dzdx, dzdy)) * kRadToDeg;
        }
    }
    return out;
}

Grid aspect(const Grid& dem) {
    Grid out(dem.header(), dem.nodata());
    std::array<double, 9> z;
    for (int r = 0; r < dem.nrows(); ++r) {
        for (int c = 0; c < dem.ncols(); ++c) {
            if (!window3x3(dem, r, c, z)) continue;
            double dzdx, dzdy;
            horn_gradient(z, dem.header().cellsize, dzdx, dzdy);
            if (dzdx == 0.0 && dzdy == 0.0) {
                out.at(r, c) = kFlatAspect;
                continue;
            }
            // Azimuth of the downslope vector (-dzdx, -dzdy) in (east, north).
            double deg = std::atan2(-dzdx, -dzdy) * kRadToDeg;
            if (deg < 0.0) deg += 360.0;
            if (deg >= 360.0) deg = 0.0;
            out.at(r, c) = deg;
        }
    }
    return out;
}

Grid roughness(const Grid& dem) {
    Grid out(dem.header(), dem.nodata());
    std::array<double, 9> z;
    for (int r = 0; r < dem.nrows(); ++r) {
        for (int c = 0; c < dem.ncols(); ++c) {
            if (!window3x3(dem, r, c, z)) continue;
            const auto [lo, hi] = std::minmax_element(z.begin(), z.end());
            out.at(r, c) = *hi - *lo;
        }
    }
    return out;
}

Grid tpi(const Grid& dem, WindowSpec w) {
    if (w.radius < 1) throw std::invalid_argument("window radius must be >= 1");
    Grid out(dem.header(), dem.nodata());
    for (int r = 0; r < dem.nrows(); ++r) {
        for (int c = 0; c < dem.ncols(); ++c) {
            bool ok = dem.is_valid(r, c);
            double sum = 0.0;
            int count = 0;
            for (int dr = -w.radius; dr <= w.radius && ok; ++dr) {
                const int rr = clamp_index(r + dr, dem.nrows());
                for (int dc = -w.radius; dc <= w.radius; ++dc) {
                    if (dr == 0 && dc == 0) continue;
                    const int cc = clamp_index(c + dc, dem.ncols());
                    if (!dem.is_valid(rr, cc)) {
                        ok = false;
                        break;
                    }
                    sum += dem.at(rr, cc);
                    ++count;
                }
            }
            if (ok) out.at(r, c) = dem.at(r, c) - sum / count;
        }
    }
    return out;
}

Grid tri(const Grid& dem) {
    Grid out(dem.header(), dem.nodata());
    std::array<double, 9> z;
    for (int r = 0; r < dem.nrows(); ++r) {
        for (int c = 0; c < dem.ncols(); ++c) {
            if (!window3x3(dem, r, c, z)) continue;
            const double center = z[4];
            double sum = 0.0;
            for (int k = 0; k < 9; ++k) {
                if (k != 4) sum += std::abs(z[k] - center);
            }
            out.at(r, c) = sum / 8.0;
        }
    }
    return out;
}

Grid tst(const Grid& dem, WindowSpec w, double flag_threshold) {
    if (w.radius < 1) throw std::invalid_argument("window radius must be >= 1");
    if (flag_threshold <= 0.0) throw std::invalid_argument("tst flag_threshold must be > 0");

    // Pass 1: flag cells that deviate from the median of their 8 neighbours
    // (even-count median = mean of the two middle values). NaN marks windows
    // poisoned by nodata.
    const int nrows = dem.nrows(), ncols = dem.ncols();
    std::vector<double> flags(static_cast<std::size_t>(nrows) * ncols, std::nan(""));
    std::array<double, 9> z;
    for (int r = 0; r < nrows; ++r) {
        for (int c = 0; c < ncols; ++c) {
            if (!window3x3(dem, r, c, z)) continue;
            std::array<double, 8> nb;
            for (int k = 0, i = 0; k < 9; ++k) {
                if (k != 4) nb[i++] = z[k];
            }
            std::sort(nb.begin(), nb.end());
            const double median = 0.5 * (nb[3] + nb[4]);
            flags[static_cast<std::size_t>(r) * ncols + c] =
                std::abs(z[4] - median) >= flag_threshold ? 1.0 : 0.0;
        }
    }

    // Pass 2: flagged fraction over the requested window.
    Grid out(dem.header(), dem.nodata());
    const int n = (2 * w.radius + 1) * (2 * w.radius + 1);
    for (int r = 0; r < nrows; ++r) {
        for (int c = 0; c < ncols; ++c) {
            bool ok = true;
            int flagged = 0;
            for (int dr = -w.radius; dr <= w.radius && ok; ++dr) {
                const int rr = clamp_index(r + dr, nrows);
                for (int dc = -w.radius; dc <= w.radius; ++dc) {
                    const int cc = clamp_index(c + dc, ncols);
                    const double f = flags[static_cast<std::size_t>(rr) * ncols + cc];
                    if (std::isnan(f)) {
                        ok = false;
                        break;
                    }
                    if (f == 1.0) ++flagged;
                }
            }
            if (ok) out.at(r, c) = static_cast<double>(flagged) / n;
        }
    }
    return out;
}

Grid vrm(const Grid& dem, WindowSpec w) {
    if (w.radius < 1) throw std::invalid_argument("window radius must be >= 1");

    // Pass 1: unit surface normal per cell from the Horn gradient. The three
    // components travel in separate planes; nx doubles as the nodata flag.
    const int nrows = dem.nrows(), ncols = dem.ncols();
    std::vector<double> nx(static_cast<std::size_t>(nrows) * ncols, std::nan(""));
    std::vector<double> ny(nx.size(), 0.0), nz(nx.size(), 0.0);
    std::array<double, 9> z;
    for (int r = 0; r < nrows; ++r) {
        for (int c = 0; c < ncols; ++c) {
            if (!window3x3(dem, r, c, z)) continue;
            double dzdx, dzdy;
            horn_gradient(z, dem.header().cellsize, dzdx, dzdy);
            const double s = std::atan(std::hypot(dzdx, dzdy));
            const double a = (dzdx == 0.0 && dzdy == 0.0) ? 0.0 : std::atan2(-dzdx, -dzdy);
            const std::size_t k = static_cast<std::size_t>(r) * ncols + c;
            nx[k] = std::sin(s) * std::sin(a);
            ny[k] = std::sin(s) * std::cos(a);
            nz[k] = std::cos(s);
        }
    }

    // Pass 2: resultant vector magnitude over the window.
    Grid out(dem.header(), dem.nodata());
    const int n = (2 * w.radius + 1) * (2 * w.radius + 1);
    for (int r = 0; r < nrows; ++r) {
        for (int c = 0; c < ncols; ++c) {
            bool ok = true;
            double sx = 0.0, sy = 0.0, sz = 0.0;
            for (int dr = -w.radius; dr <= w.radius && ok; ++dr) {
                const int rr = clamp_index(r + dr, nrows);
                for (int dc = -w.radius; dc <= w.radius; ++dc) {
                    const int cc = clamp_index(c + dc, ncols);
                    const std::size_t k = static_cast<std::size_t>(rr) * ncols + cc;
                    if (std::isnan(nx[k])) {
                        ok = false;
                        break;
                    }
                    sx += nx[k];
                    sy += ny[k];
                    sz += nz[k];
                }
            }
            if (ok) out.at(r, c) = std::max(0.0, 1.0 - std::sqrt(sx * sx + sy * sy + sz * sz) / n);
        }
    }
    return out;
}

}  // namespace demboost
