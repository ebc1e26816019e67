#include "demboost/raster.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "demboost/errors.hpp"
#include "demboost/textio.hpp"

namespace demboost {

namespace {

bool nearly_equal(double a, double b) {
    const double scale = std::max({1.0, std::abs(a), std::abs(b)});
    return std::abs(a - b) <= 1e-9 * scale;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

}  // namespace

bool GridHeader::aligned_with(const GridHeader& other) const {
    return ncols == other.ncols && nrows == other.nrows &&
           nearly_equal(xllcorner, other.xllcorner) && nearly_equal(yllcorner, other.yllcorner) &&
           nearly_equal(cellsize, other.cellsize) && nearly_equal(nodata_value, other.nodata_value);
}

Grid::Grid(GridHeader header, double fill) : header_(header) {
    if (header_.ncols < 1 || header_.nrows < 1 || header_.cellsize <= 0.0) {
        throw std::invalid_argument("grid header requires ncols >= 1, nrows >= 1, cellsize > 0");
    }
    cells_.assign(static_cast<std::size_t>(header_.ncols) * header_.nrows, fill);
}

Grid read_ascii_grid(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open raster file: " + path.string());
    }

    GridHeader header;
    std::map<std::string, double> seen;
    std::string line;
    long line_no = 0;
    std::string pending_data_line;
    long pending_data_line_no = 0;

    // Header section: KEY value pairs in any order, case-insensitive. The
    // first line whose leading token is numeric starts the data block.
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;  // blank line
        if (!std::isalpha(static_cast<unsigned char>(key[0])) && key[0] != '_') {
            pending_data_line = line;
            pending_data_line_no = line_no;
            break;
        }
        std::string value_token;
        if (!(ls >> value_token)) {
            throw ParseError("header key '" + key + "' has no value", line_no);
        }
        std::string extra;
        if (ls >> extra) {
            throw ParseError("trailing token '" + extra + "' after header value", line_no);
        }
        const std::string k = lower(key);
        if (k != "ncols" && k != "nrows" && k != "xllcorner" && k != "yllcorner" &&
            k != "cellsize" && k != "nodata_value") {
            throw ParseError("unknown header key '" + key + "'", line_no);
        }
        if (seen.count(k)) {
            throw ParseError("duplicate header key '" + key + "'", line_no);
        }
        seen[k] = parse_double(value_token, line_no);
    }

    for (const char* required : {"ncols", "nrows", "xllcorner", "yllcorner", "cellsize"}) {
        if (!seen.count(required)) {
            throw ParseError(std::string("missing required header key '") + required + "'", line_no);
        }
    }
    header.ncols = static_cast<int>(seen["ncols"]);
    header.nrows = static_cast<int>(seen["nrows"]);
    header.xllcorner = seen["xllcorner"];
    header.yllcorner = seen["yllcorner"];
    header.cellsize = seen["cellsize"];
    header.nodata_value = seen.count("nodata_value") ? seen["nodata_value"] : -9999.0;
    if (header.ncols < 1 || header.nrows < 1) {
        throw ParseError("ncols and nrows must be >= 1", line_no);
    }
    if (header.cellsize <= 0.0) {
        throw ParseError("cellsize must be > 0", line_no);
    }

    Grid grid(header, 0.0);
    int row = 0;
    auto consume_row = [&](const std::string& data_line, long no) {
        if (row >= header.nrows) {
            // Trailing non-empty lines after the declared rows are an error.
            std::istringstream ls(data_line);
            std::string tok;
            if (ls >> tok) throw ParseError("data after final declared row", no);
            return;
        }
        std::istringstream ls(data_line);
        std::string tok;
        int col = 0;
        while (ls >> tok) {
            if (col >= header.ncols) {
                throw ParseError("row has more cells than declared ncols", no);
            }
            grid.at(row, col) = parse_double(tok, no);
            ++col;
        }
        if (col == 0) return;  // blank line between rows
        if (col != header.ncols) {
            throw ParseError("row has " + std::to_string(col) + " cells, expected " +
                                 std::to_string(header.ncols),
                             no);
        }
        ++row;
    };

    if (pending_data_line_no != 0) consume_row(pending_data_line, pending_data_line_no);
    while (std::getline(in, line)) {
        ++line_no;
        consume_row(line, line_no);
    }
    if (row != header.nrows) {
        throw ParseError("file ended after " + std::to_string(row) + " data rows, expected " +
                             std::to_string(header.nrows),
                         line_no);
    }
    return grid;
}

void write_ascii_grid(const Grid& grid, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);  // LF endings everywhere
    if (!out) {
        throw IoError("cannot open raster file for writing: " + path.string());
    }
    const GridHeader& h = grid.header();
    out << "NCOLS " << h.ncols << "\n";
    out << "NROWS " << h.nrows << "\n";
    out << "XLLCORNER " << format_double(h.xllcorner) << "\n";
    out << "YLLCORNER " << format_double(h.yllcorner) << "\n";
    out << "CELLSIZE " << format_double(h.cellsize) << "\n";
    out << "NODATA_VALUE " << format_double(h.nodata_value) << "\n";
    for (int r = 0; r < h.nrows; ++r) {
        for (int c = 0; c < h.ncols; ++c) {
            if (c) out << ' ';
            out << format_double(grid.at(r, c));
        }
        out << '\n';
    }
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

namespace {

// Continuous cell-center coordinate of a sample point along one axis, with
// sub-nanocell snapping so co-registered grids hit centers exactly.
struct AxisSample {
    int i0;
    double frac;  // weight of i0+1; 0 means only i0 contributes
};

AxisSample axis_sample(double coord) {
    double i0 = std::floor(coord);
    double frac = coord - i0;
    if (frac < 1e-9) {
        frac = 0.0;
    } else if (frac > 1.0 - 1e-9) {
        i0 += 1.0;
        frac = 0.0;
    }
    return {static_cast<int>(i0), frac};
}

}  // namespace

Grid resample(const Grid& src, const GridHeader& target, ResampleMethod method) {
    const GridHeader& sh = src.header();
    const double sx0 = sh.xllcorner, sx1 = sh.xllcorner + sh.ncols * sh.cellsize;
    const double sy0 = sh.yllcorner, sy1 = sh.yllcorner + sh.nrows * sh.cellsize;
    const double tx0 = target.xllcorner, tx1 = target.xllcorner + target.ncols * target.cellsize;
    const double ty0 = target.yllcorner, ty1 = target.yllcorner + target.nrows * target.cellsize;
    if (tx0 >= sx1 || tx1 <= sx0 || ty0 >= sy1 || ty1 <= sy0) {
        throw AlignmentError("resample target does not overlap source extent");
    }

    Grid out(target, target.nodata_value);

    const double inv_cs = 1.0 / sh.cellsize;
    for (int r = 0; r < target.nrows; ++r) {
        const double y = target.yllcorner + (target.nrows - r - 0.5) * target.cellsize;
        if (y < sy0 || y > sy1) continue;
        // Row coordinate measured from the north edge, center-based.
        const double gy = ((sy1 - ty1) + (r + 0.5) * target.cellsize) * inv_cs - 0.5;
        for (int c = 0; c < target.ncols; ++c) {
            const double x = target.xllcorner + (c + 0.5) * target.cellsize;
            if (x < sx0 || x > sx1) continue;
            const double gx = ((tx0 - sx0) + (c + 0.5) * target.cellsize) * inv_cs - 0.5;

            if (method == ResampleMethod::nearest) {
                const int sc = std::clamp(static_cast<int>(std::floor((x - sx0) * inv_cs)), 0, sh.ncols - 1);
                const int sr = std::clamp(static_cast<int>(std::floor((sy1 - y) * inv_cs)), 0, sh.nrows - 1);
                if (src.is_valid(sr, sc)) out.at(r, c) = src.at(sr, sc);
                continue;
            }

            const AxisSample ax = axis_sample(gx);
            const AxisSample ay = axis_sample(gy);
            const int c1 = ax.frac > 0.0 ? ax.i0 + 1 : ax.i0;
            const int r1 = ay.frac > 0.0 ? ay.i0 + 1 : ay.i0;
            if (ax.i0 < 0 || c1 >= sh.ncols || ay.i0 < 0 || r1 >= sh.nrows) continue;

            bool any_nodata = false;
            auto sample = [&](int rr, int cc) {
                if (!src.is_valid(rr, cc)) any_nodata = true;
                return src.at(rr, cc);
            };
            const double v00 = sample(ay.i0, ax.i0);
            const double v01 = ax.frac > 0.0 ? sample(ay.i0, c1) : 0.0;
            const double v10 = ay.frac > 0.0 ? sample(r1, ax.i0) : 0.0;
            const double v11 = (ax.frac > 0.0 && ay.frac > 0.0) ? sample(r1, c1) : 0.0;
            if (any_nodata) continue;
            const double top = v00 * (1.0 - ax.frac) + v01 * ax.frac;
            const double bot = v10 * (1.0 - ax.frac) + v11 * ax.frac;
            out.at(r, c) = top * (1.0 - ay.frac) + bot * ay.frac;
        }
    }
    return out;
}

Grid apply_vertical_offset(const Grid& grid, double offset) {
    Grid out = grid;
    for (int r = 0; r < out.nrows(); ++r) {
        for (int c = 0; c < out.ncols(); ++c) {
            if (out.is_valid(r, c)) out.at(r, c) += offset;
        }
    }
    return out;
}

Grid diff(const Grid& global_dem, const Grid& ref_dem) {
    if (!global_dem.header().aligned_with(ref_dem.header())) {
        throw AlignmentError("diff requires aligned grids");
    }
    Grid out(global_dem.header(), global_dem.nodata());
    for (int r = 0; r < out.nrows(); ++r) {
        for (int c = 0; c < out.ncols(); ++c) {
            if (global_dem.is_valid(r, c) && ref_dem.is_valid(r, c)) {
                out.at(r, c) = global_dem.at(r, c) - ref_dem.at(r, c);
            }
        }
    }
    return out;
}

}  // namespace demboost
