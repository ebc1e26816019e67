#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace demboost {

// Spatial frame of a grid. Rows are stored north to south, so row 0 is the
// northernmost row while (xllcorner, yllcorner) names the south-west corner.
struct GridHeader {
    int ncols = 0;
    int nrows = 0;
    double xllcorner = 0.0;
    double yllcorner = 0.0;
    double cellsize = 1.0;
    double nodata_value = -9999.0;

    bool aligned_with(const GridHeader& other) const;

    // Map coordinates of a cell center.
    double x_center(int col) const { return xllcorner + (col + 0.5) * cellsize; }
    double y_center(int row) const { return yllcorner + (nrows - row - 0.5) * cellsize; }
};

class Grid {
public:
    Grid() = default;
    Grid(GridHeader header, double fill);

    const GridHeader& header() const { return header_; }
    int ncols() const { return header_.ncols; }
    int nrows() const { return header_.nrows; }
    double nodata() const { return header_.nodata_value; }
    std::size_t cell_count() const { return cells_.size(); }

    double at(int row, int col) const { return cells_[static_cast<std::size_t>(row) * header_.ncols + col]; }
    double& at(int row, int col) { return cells_[static_cast<std::size_t>(row) * header_.ncols + col]; }

    // A cell is usable when it is finite and not the nodata sentinel.
    bool is_valid(int row, int col) const {
        const double v = at(row, col);
        return std::isfinite(v) && v != header_.nodata_value;
    }

    const std::vector<double>& cells() const { return cells_; }
    std::vector<double>& cells() { return cells_; }

private:
    GridHeader header_;
    std::vector<double> cells_;
};

enum class ResampleMethod { nearest, bilinear };

Grid read_ascii_grid(const std::filesystem::path& path);
void write_ascii_grid(const Grid& grid, const std::filesystem::path& path);

// Re-grid `src` onto `target`. Bilinear blends the four surrounding cell
// centers and goes nodata as soon as any contributing cell is nodata or the
// sample point leaves the source extent.
Grid resample(const Grid& src, const GridHeader& target, ResampleMethod method);

Grid apply_vertical_offset(const Grid& grid, double offset);

// Per-cell difference global_dem - ref_dem; nodata wherever either side is.
Grid diff(const Grid& global_dem, const Grid& ref_dem);

}  // namespace demboost
