#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "demboost/gbtree.hpp"
#include "demboost/raster.hpp"

namespace demboost {

double rmse(std::span<const double> residuals);

// Percentage RMSE reduction, 100 * (original - corrected) / original.
// Negative when the correction made things worse.
double improvement_factor(double original_rmse, double corrected_rmse);

// Same semantics as raster::diff; named for its reporting role.
Grid error_map(const Grid& dem, const Grid& ref);

// CSV of (iteration, train_rmse, val_rmse), iteration 1-based.
void export_learning_curve(const TrainingTrace& trace, const std::filesystem::path& path);

struct SiteRecord {
    std::string site;
    std::string dem;
    double original_rmse = 0.0;
    std::optional<double> corrected_rmse;
    std::optional<double> improvement_pct;
    std::size_t n_points = 0;
    // Supplementary diagnostics; RMSE is the accuracy metric.
    double original_mae = 0.0;
    double original_bias = 0.0;
};

struct AccuracyReport {
    std::vector<SiteRecord> records;
};

// Builds one record from aligned rasters; improvement is reported only when
// a corrected DEM is given and the original RMSE is positive.
SiteRecord evaluate_site(const std::string& site, const std::string& dem_name,
                         const Grid& original, const Grid* corrected, const Grid& ref);

void write_report_json(const AccuracyReport& report, const std::filesystem::path& path,
                       const std::string& config_hash);

}  // namespace demboost
