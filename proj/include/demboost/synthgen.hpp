#pragma once

#include <cstdint>

#include "demboost/raster.hpp"

namespace demboost {

// Knobs for the synthetic test scenes. The corruption injected into the
// truth surface is a function of the land-cover and terrain layers plus
// irreducible noise, which is exactly the structure the correction model is
// supposed to recover.
struct SceneConfig {
    int size = 512;
    double cellsize = 30.0;
    std::uint64_t seed = 42;
    double building_density = 0.15;        // fraction of area under buildings
    double building_height_mean = 8.0;     // metres, one draw per building
    double building_height_sd = 2.5;
    double forest_density = 0.25;          // fraction of area with canopy
    double canopy_offset_per_pct = 0.05;   // metres per canopy percentage point
    double slope_noise_coeff = 0.15;       // metres of noise sd per degree of slope
    double white_noise_sd = 0.5;           // metres
    double base_terrain_amplitude = 60.0;  // metres, peak-to-mean of the truth surface
};

struct Scene {
    Grid truth;
    Grid corrupted;
    Grid urban;       // 0/1 building mask
    Grid forest_pct;  // canopy cover percentage, [0, 100]
    Grid bare_pct;    // bare ground percentage, [0, 100]
};

// Fully seed-deterministic: the same config always yields bitwise-identical
// grids, including across platforms.
Scene generate_scene(const SceneConfig& config);

}  // namespace demboost
