#include "demboost/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "demboost/rng.hpp"
#include "demboost/terrain.hpp"

namespace demboost {

namespace {

constexpr int kTerrainBumps = 40;

// Smooth random field as a sum of Gaussian bumps, rescaled so the largest
// deviation from the mean equals `amplitude`.
std::vector<double> bump_field(int size, double amplitude, std::mt19937_64& rng) {
    struct Bump {
        double cx, cy, sigma, height;
    };
    std::vector<Bump> bumps(kTerrainBumps);
    for (Bump& b : bumps) {
        b.cx = uniform_range(rng, 0.0, size - 1.0);
        b.cy = uniform_range(rng, 0.0, size - 1.0);
        b.sigma = uniform_range(rng, size / 16.0, size / 4.0);
        b.height = uniform_range(rng, -1.0, 1.0);
    }
    std::vector<double> field(static_cast<std::size_t>(size) * size, 0.0);
    for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
            double z = 0.0;
            for (const Bump& b : bumps) {
                const double dx = c - b.cx;
                const double dy = r - b.cy;
                z += b.height * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
            }
            field[static_cast<std::size_t>(r) * size + c] = z;
        }
    }
    double mean = 0.0;
    for (double z : field) mean += z;
    mean /= static_cast<double>(field.size());
    double peak = 0.0;
    for (double z : field) peak = std::max(peak, std::abs(z - mean));
    const double scale = peak > 0.0 ? amplitude / peak : 0.0;
    for (double& z : field) z = (z - mean) * scale;
    return field;
}

}  // namespace

Scene generate_scene(const SceneConfig& config) {
    if (config.size < 1) throw std::invalid_argument("scene size must be >= 1");
    if (config.cellsize <= 0.0) throw std::invalid_argument("cellsize must be > 0");
    if (config.building_density < 0.0 || config.building_density > 1.0 ||
        config.forest_density < 0.0 || config.forest_density > 1.0) {
        throw std::invalid_argument("densities must lie in [0, 1]");
    }
    if (config.building_height_sd < 0.0 || config.white_noise_sd < 0.0) {
        throw std::invalid_argument("standard deviations must be >= 0");
    }

    const int size = config.size;
    const std::size_t n_cells = static_cast<std::size_t>(size) * size;
    std::mt19937_64 rng(config.seed);

    GridHeader header;
    header.ncols = size;
    header.nrows = size;
    header.xllcorner = 0.0;
    header.yllcorner = 0.0;
    header.cellsize = config.cellsize;

    Scene scene{Grid(header, 0.0), Grid(header, 0.0), Grid(header, 0.0), Grid(header, 0.0),
                Grid(header, 0.0)};

    scene.truth.cells() = bump_field(size, config.base_terrain_amplitude, rng);

    // Rectangular building blocks with one height draw each, placed until the
    // requested area fraction is covered. Overlaps re-use the newer height.
    std::vector<double> building_height(n_cells, 0.0);
    std::size_t covered = 0;
    const auto target_cells = static_cast<std::size_t>(config.building_density *
                                                       static_cast<double>(n_cells));
    while (covered < target_cells) {
        const int w = 3 + static_cast<int>(uniform_below(rng, 8));
        const int h = 3 + static_cast<int>(uniform_below(rng, 8));
        const int c0 = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(std::max(1, size - w))));
        const int r0 = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(std::max(1, size - h))));
        const double height = std::max(
            0.5, config.building_height_mean + config.building_height_sd * normal01(rng));
        for (int r = r0; r < std::min(size, r0 + h); ++r) {
            for (int c = c0; c < std::min(size, c0 + w); ++c) {
                if (scene.urban.at(r, c) == 0.0) {
                    scene.urban.at(r, c) = 1.0;
                    ++covered;
                }
                building_height[static_cast<std::size_t>(r) * size + c] = height;
            }
        }
    }

    // Canopy percentage: a smooth field thresholded at the quantile that
    // leaves ~forest_density of the area forested, ramped to [0, 100].
    {
        std::vector<double> cover = bump_field(size, 1.0, rng);
        std::vector<double> sorted = cover;
        std::sort(sorted.begin(), sorted.end());
        const auto q_idx = static_cast<std::size_t>(
            std::clamp((1.0 - config.forest_density) * static_cast<double>(n_cells - 1), 0.0,
                       static_cast<double>(n_cells - 1)));
        const double q = sorted[q_idx];
        const double span = sorted.back() - q;
        for (std::size_t i = 0; i < n_cells; ++i) {
            const double v = span > 0.0 ? (cover[i] - q) / span : 0.0;
            scene.forest_pct.cells()[i] = 100.0 * std::clamp(v, 0.0, 1.0);
        }
    }

    // Bare ground: an independent smooth nuisance layer in [0, 100].
    {
        std::vector<double> bare = bump_field(size, 1.0, rng);
        const auto [lo_it, hi_it] = std::minmax_element(bare.begin(), bare.end());
        const double lo = *lo_it, span = *hi_it - *lo_it;
        for (std::size_t i = 0; i < n_cells; ++i) {
            scene.bare_pct.cells()[i] = span > 0.0 ? 100.0 * (bare[i] - lo) / span : 0.0;
        }
    }

    const Grid truth_slope = slope(scene.truth);
    for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * size + c;
            double err = 0.0;
            if (scene.urban.at(r, c) == 1.0) err += building_height[i];
            err += config.canopy_offset_per_pct * scene.forest_pct.at(r, c);
            err += config.slope_noise_coeff * truth_slope.at(r, c) * normal01(rng);
            err += config.white_noise_sd * normal01(rng);
            scene.corrupted.at(r, c) = scene.truth.at(r, c) + err;
        }
    }
    return scene;
}

}  // namespace demboost
