#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "demboost/raster.hpp"

namespace demboost {

inline constexpr std::size_t kNumFeatures = 11;

// Canonical predictor order; every table, model, and CSV uses it.
const std::array<std::string, kNumFeatures>& feature_names();

struct FeatureRow {
    std::int32_t col = 0;
    std::int32_t row = 0;
    std::array<double, kNumFeatures> features{};
    double target = 0.0;
};

struct FeatureTable {
    std::vector<FeatureRow> rows;

    std::size_t size() const { return rows.size(); }
    bool empty() const { return rows.empty(); }
};

struct SplitSpec {
    double test_fraction = 0.2;
    double val_fraction_of_train = 0.125;
    std::uint64_t seed = 0;
};

struct SplitResult {
    FeatureTable train;
    FeatureTable val;
    FeatureTable test;
};

// One row per cell that is valid in all 12 layers, in row-major scan order.
// `feature_grids` follows feature_names() order.
FeatureTable assemble(const std::array<const Grid*, kNumFeatures>& feature_grids,
                      const Grid& error_grid);

// Seed-deterministic disjoint partition. Sizes are round(n * fraction) for
// test, then round(remaining * val_fraction_of_train) for validation; the
// remainder goes to train.
SplitResult split(const FeatureTable& table, const SplitSpec& spec);

void export_csv(const FeatureTable& table, const std::filesystem::path& path);
FeatureTable import_csv(const std::filesystem::path& path);

}  // namespace demboost
