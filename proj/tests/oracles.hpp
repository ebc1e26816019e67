#pragma once

// Naive reference implementations, kept deliberately separate from the
// library code paths they cross-check. Everything here is written as plain
// nested loops over cells or samples.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <vector>

#include "demboost/dataset.hpp"
#include "demboost/gbtree.hpp"
#include "demboost/raster.hpp"
#include "demboost/rng.hpp"

namespace oracles {

using demboost::Grid;
using demboost::GridHeader;

constexpr double kPi = 3.14159265358979323846264338327950288;

inline int clampi(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

inline double zat(const Grid& g, int r, int c) {
    return g.at(clampi(r, g.nrows()), clampi(c, g.ncols()));
}

inline bool window_ok(const Grid& g, int r, int c, int radius) {
    for (int dr = -radius; dr <= radius; ++dr) {
        for (int dc = -radius; dc <= radius; ++dc) {
            if (!g.is_valid(clampi(r + dr, g.nrows()), clampi(c + dc, g.ncols()))) return false;
        }
    }
    return true;
}

inline void horn(const Grid& g, int r, int c, double& dzdx, double& dzdy) {
    const double cs = g.header().cellsize;
    const double z0 = zat(g, r - 1, c - 1), z1 = zat(g, r - 1, c), z2 = zat(g, r - 1, c + 1);
    const double z3 = zat(g, r, c - 1), z5 = zat(g, r, c + 1);
    const double z6 = zat(g, r + 1, c - 1), z7 = zat(g, r + 1, c), z8 = zat(g, r + 1, c + 1);
    dzdx = ((z2 + 2.0 * z5 + z8) - (z0 + 2.0 * z3 + z6)) / (8.0 * cs);
    dzdy = ((z0 + 2.0 * z1 + z2) - (z6 + 2.0 * z7 + z8)) / (8.0 * cs);
}

inline Grid slope_naive(const Grid& g) {
    Grid out(g.header(), g.nodata());
    for (int r = 0; r < g.nrows(); ++r) {
        for (int c = 0; c < g.ncols(); ++c) {
            if (!window_ok(g, r, c, 1)) continue;
            double dzdx, dzdy;
            horn(g, r, c, dzdx, dzdy);
            out.at(r, c) = std::atan(std::hypot(dzdx, dzdy)) * 180.0 / kPi;
        }
    }
    return out;
}

inline Grid aspect_naive(const Grid& g) {
    Grid out(g.header(), g.nodata());
    for (int r = 0; r < g.nrows(); ++r) {
        for (int c = 0; c < g.ncols(); ++c) {
            if (!window_ok(g, r, c, 1)) continue;
            double dzdx, dzdy;
            horn(g, r, c, dzdx, dzdy);
            if (dzdx == 0.0 && dzdy == 0.0) {
                out.at(r, c) = -1.0;
                continue;
            }
            double deg = std::atan2(-dzdx, -dzdy) * 180.0 / kPi;
            if (deg < 0.0) deg += 360.0;
            if (deg >= 360.0) deg = 0.0;
            out.at(r, c) = deg;
        }
    }
    return out;
}

inline Grid roughness_naive(const Grid& g) {
    Grid out(g.header(), g.nodata());
    for (int r = 0; r < g.nrows(); ++r) {
        for (int c = 0; c < g.ncols(); ++c) {
            if (!window_ok(g, r, c, 1)) continue;
            double lo = zat(g, r, c), hi = lo;
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    lo = std::min(lo, zat(g, r + dr, c + dc));
                    hi = std::max(hi, zat(g, r + dr, c + dc));
                }
            }
            out.at(r, c) = hi - lo;
        }
    }
    return out;
}

inline Grid tpi_naive(const Grid& g, int radius) {
    Grid out(g.header(), g.nodata());
    for (int r = 0; r < g.nrows(); ++r) {
        for (int c = 0; c < g.ncols(); ++c) {
            if (!window_ok(g, r, c, radius)) continue;
            double sum = 0.0;
            int count = 0;
            for (int dr = -radius; dr <= radius; ++dr) {
                for (int dc = -radius; dc <= radius; ++dc) {
                    if (dr == 0 && dc == 0) continue;
                    sum += zat(g, r + dr, c + dc);
                    ++count;
                }
            }
            out.at(r, c) = g.at(r, c) - sum / count;
        }
    }
    return out;
}

inline Grid tri_naive(const Grid& g) {
    Grid out(g.header(), g.nodata());
    for (int r = 0; r < g.nrows(); ++r) {
        for (int c = 0; c < g.ncols(); ++c) {
            if (!window_ok(g, r, c, 1)) continue;
            double sum = 0.0;
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    if (dr == 0 && dc == 0) continue;
                    sum += std::abs(zat(g, r + dr, c + dc) - g.at(r, c));
                }
            }
            out.at(r, c) = sum / 8.0;
        }
    }
    return out;
}

// Two-pass texture: flag deviations from the center-excluded 3x3 median
// (mean of the two middle values), then count flags per window.
inline Grid tst_naive(const Grid& g, int radius, double threshold) {
    const int nrows = g.nrows(), ncols = g.ncols();
    std::vector<double> flag(static_cast<std::size_t>(nrows) * ncols, std::nan(""));
    for (int r = 0; r < nrows; ++r) {
        for (int c = 0; c < ncols; ++c) {
            if (!window_ok(g, r, c, 1)) continue;
            std::vector<double> nb;
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    if (dr == 0 && dc == 0) continue;
                    nb.push_back(zat(g, r + dr, c + dc));
                }
            }
            std::sort(nb.begin(), nb.end());
            const double median = 0.5 * (nb[3] + nb[4]);
            flag[static_cast<std::size_t>(r) * ncols + c] =
                std::abs(g.at(r, c) - median) >= threshold ? 1.0 : 0.0;
        }
    }
    Grid out(g.header(), g.nodata());
    const int n = (2 * radius + 1) * (2 * radius + 1);
    for (int r = 0; r < nrows; ++r) {
        for (int c = 0; c < ncols; ++c) {
            bool ok = true;
            int count = 0;
            for (int dr = -radius; dr <= radius && ok; ++dr) {
                for (int dc = -radius; dc <= radius; ++dc) {
                    const double f =
                        flag[static_cast<std::size_t>(clampi(r + dr, nrows)) * ncols +
                             clampi(c + dc, ncols)];
                    if (std::isnan(f)) {
                        ok = false;
                        break;
                    }
                    if (f == 1.0) ++count;
                }
            }
            if (ok) out.at(r, c) = static_cast<double>(count) / n;
        }
    }
    return out;
}

inline Grid vrm_naive(const Grid& g, int radius) {
    const int nrows = g.nrows(), ncols = g.ncols();
    std::vector<double> nx(static_cast<std::size_t>(nrows) * ncols, std::nan(""));
    std::vector<double> ny(nx.size()), nz(nx.size());
    for (int r = 0; r < nrows; ++r) {
        for (int c = 0; c < ncols; ++c) {
            if (!window_ok(g, r, c, 1)) continue;
            double dzdx, dzdy;
            horn(g, r, c, dzdx, dzdy);
            const double s = std::atan(std::hypot(dzdx, dzdy));
            const double a = (dzdx == 0.0 && dzdy == 0.0) ? 0.0 : std::atan2(-dzdx, -dzdy);
            const std::size_t k = static_cast<std::size_t>(r) * ncols + c;
            nx[k] = std::sin(s) * std::sin(a);
            ny[k] = std::sin(s) * std::cos(a);
            nz[k] = std::cos(s);
        }
    }
    Grid out(g.header(), g.nodata());
    const int n = (2 * radius + 1) * (2 * radius + 1);
    for (int r = 0; r < nrows; ++r) {
        for (int c = 0; c < ncols; ++c) {
            bool ok = true;
            double sx = 0.0, sy = 0.0, sz = 0.0;
            for (int dr = -radius; dr <= radius && ok; ++dr) {
                for (int dc = -radius; dc <= radius; ++dc) {
                    const std::size_t k =
                        static_cast<std::size_t>(clampi(r + dr, nrows)) * ncols + clampi(c + dc, ncols);
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

// ---------------------------------------------------------------------------
// Data generators

inline Grid random_grid(std::uint64_t seed, int size, double lo = 0.0, double hi = 100.0,
                        double nodata_fraction = 0.0) {
    GridHeader h;
    h.ncols = size;
    h.nrows = size;
    h.cellsize = 30.0;
    Grid g(h, 0.0);
    std::mt19937_64 rng(seed);
    for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
            if (nodata_fraction > 0.0 && demboost::uniform01(rng) < nodata_fraction) {
                g.at(r, c) = h.nodata_value;
            } else {
                g.at(r, c) = demboost::uniform_range(rng, lo, hi);
            }
        }
    }
    return g;
}

inline Grid plane_grid(int size, double a_col, double b_row, double base = 0.0,
                       double cellsize = 1.0) {
    GridHeader h;
    h.ncols = size;
    h.nrows = size;
    h.cellsize = cellsize;
    Grid g(h, 0.0);
    for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
            g.at(r, c) = base + a_col * c + b_row * r;
        }
    }
    return g;
}

inline double max_abs_difference(const Grid& a, const Grid& b) {
    double worst = 0.0;
    for (int r = 0; r < a.nrows(); ++r) {
        for (int c = 0; c < a.ncols(); ++c) {
            const bool va = a.is_valid(r, c), vb = b.is_valid(r, c);
            if (va != vb) return std::numeric_limits<double>::infinity();
            if (va) worst = std::max(worst, std::abs(a.at(r, c) - b.at(r, c)));
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Boosting oracles

// 1-D minimizer of G*w + 0.5*(H+lambda)*w^2 + alpha*|w| by repeated grid
// refinement; independent of the closed form it validates.
inline double refine_leaf_weight(double grad_sum, double hess_sum, double lambda, double alpha,
                                 double bound = 1000.0) {
    auto objective = [&](double w) {
        return grad_sum * w + 0.5 * (hess_sum + lambda) * w * w + alpha * std::abs(w);
    };
    double lo = -bound, hi = bound;
    for (int pass = 0; pass < 40; ++pass) {
        const int steps = 400;
        double best_w = lo, best_v = objective(lo);
        for (int i = 1; i <= steps; ++i) {
            const double w = lo + (hi - lo) * i / steps;
            const double v = objective(w);
            if (v < best_v) {
                best_v = v;
                best_w = w;
            }
        }
        const double width = (hi - lo) / steps;
        lo = best_w - width;
        hi = best_w + width;
    }
    return 0.5 * (lo + hi);
}

// Exhaustive best-split search with the same tie-break convention the
// trainer documents: max gain, then lowest feature, then lowest threshold.
struct BfTree {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
    double value = 0.0;
    std::unique_ptr<BfTree> left, right;
};

struct BfSamples {
    const std::vector<std::array<double, demboost::kNumFeatures>>* x = nullptr;
    std::vector<int> rows;             // indices into x/grad
    const std::vector<double>* grad = nullptr;
};

inline double bf_leaf_weight(double g, double h, double lambda, double alpha) {
    double mag = std::abs(g) - alpha;
    if (mag < 0.0) mag = 0.0;
    const double signed_mag = g < 0.0 ? -mag : mag;
    return -signed_mag / (h + lambda);
}

inline std::unique_ptr<BfTree> bf_build(const BfSamples& samples, double g_total, double h_total,
                                        const demboost::GbtParams& p, int depth) {
    auto node = std::make_unique<BfTree>();
    struct Best {
        double gain = 0.0;
        int feature = -1;
        double threshold = 0.0;
        double g_left = 0.0;
        double h_left = 0.0;
    } best;

    if (depth < p.max_depth) {
        for (int f = 0; f < static_cast<int>(demboost::kNumFeatures); ++f) {
            std::vector<std::pair<double, int>> vals;
            vals.reserve(samples.rows.size());
            for (int i : samples.rows) vals.emplace_back((*samples.x)[i][f], i);
            std::sort(vals.begin(), vals.end());
            double g_acc = 0.0, h_acc = 0.0;
            for (std::size_t k = 0; k < vals.size(); ++k) {
                if (k > 0 && vals[k].first > vals[k - 1].first) {
                    const double threshold =
                        vals[k - 1].first + 0.5 * (vals[k].first - vals[k - 1].first);
                    if (threshold > vals[k - 1].first) {
                        const double h_left = h_acc;
                        const double h_right = h_total - h_left;
                        if (h_left >= p.min_child_weight && h_right >= p.min_child_weight) {
                            const double g_left = g_acc;
                            const double g_right = g_total - g_left;
                            const double gain =
                                0.5 * (g_left * g_left / (h_left + p.reg_lambda) +
                                       g_right * g_right / (h_right + p.reg_lambda) -
                                       g_total * g_total / (h_total + p.reg_lambda)) -
                                p.gamma;
                            const bool beats =
                                gain > best.gain ||
                                (gain == best.gain &&
                                 (f < best.feature ||
                                  (f == best.feature && threshold < best.threshold)));
                            if (gain > 0.0 && (best.feature < 0 || beats)) {
                                best = {gain, f, threshold, g_left, h_left};
                            }
                        }
                    }
                }
                g_acc += (*samples.grad)[vals[k].second];
                h_acc += 1.0;
            }
        }
    }

    if (best.feature < 0) {
        node->value = bf_leaf_weight(g_total, h_total, p.reg_lambda, p.reg_alpha);
        return node;
    }
    node->feature = best.feature;
    node->threshold = best.threshold;
    node->gain = best.gain;
    BfSamples left{samples.x, {}, samples.grad};
    BfSamples right{samples.x, {}, samples.grad};
    for (int i : samples.rows) {
        if ((*samples.x)[i][best.feature] < best.threshold) {
            left.rows.push_back(i);
        } else {
            right.rows.push_back(i);
        }
    }
    node->left = bf_build(left, best.g_left, best.h_left, p, depth + 1);
    node->right = bf_build(right, g_total - best.g_left, h_total - best.h_left, p, depth + 1);
    return node;
}

inline bool bf_equals(const BfTree& ref, const demboost::Tree& tree, std::int32_t idx) {
    const demboost::TreeNode& node = tree.nodes[static_cast<std::size_t>(idx)];
    if (ref.feature < 0) {
        return node.is_leaf() && node.value == ref.value;
    }
    if (node.is_leaf()) return false;
    if (node.feature != ref.feature || node.threshold != ref.threshold) return false;
    return bf_equals(*ref.left, tree, node.left) && bf_equals(*ref.right, tree, node.right);
}

}  // namespace oracles
