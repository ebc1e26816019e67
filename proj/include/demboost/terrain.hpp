#pragma once

#include "demboost/raster.hpp"

namespace demboost {

// Square moving window; edge length is 2*radius + 1 cells.
struct WindowSpec {
    int radius = 1;
};

// Aspect value reported for cells with zero gradient.
inline constexpr double kFlatAspect = -1.0;

// All derivatives share the same frame rules: the output grid is aligned with
// the input, windows are clamped at the borders (edge replication), and a
// window that touches any nodata cell produces nodata.

// Horn 3x3 gradient magnitude, degrees in [0, 90].
Grid slope(const Grid& dem);

// Compass direction of the downslope vector, degrees clockwise from north in
// [0, 360); flat cells get kFlatAspect.
Grid aspect(const Grid& dem);

// max - min over the 3x3 window, metres.
Grid roughness(const Grid& dem);

// Center elevation minus the mean of every other cell in the window; signed
// metres, positive on ridges and negative in valleys.
Grid tpi(const Grid& dem, WindowSpec w = {});

// Mean absolute elevation difference between the center and its 8 neighbours.
Grid tri(const Grid& dem);

// Pit/peak density: the fraction of window cells whose deviation from their
// own center-excluded 3x3 median reaches flag_threshold. Range [0, 1].
Grid tst(const Grid& dem, WindowSpec w = {10}, double flag_threshold = 1.0);

// Vector ruggedness: 1 - |mean unit surface normal| over the window, in
// [0, 1]; 0 on uniform slopes, approaching 1 on chaotic terrain.
Grid vrm(const Grid& dem, WindowSpec w = {});

}  // namespace demboost
