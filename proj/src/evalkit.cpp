#include "demboost/evalkit.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

#include "demboost/errors.hpp"
#include "demboost/textio.hpp"

namespace demboost {

double rmse(std::span<const double> residuals) {
    if (residuals.empty()) throw std::invalid_argument("rmse of an empty residual list");
    double acc = 0.0;
    for (double r : residuals) acc += r * r;
    return std::sqrt(acc / static_cast<double>(residuals.size()));
}

double improvement_factor(double original_rmse, double corrected_rmse) {
    if (original_rmse <= 0.0) throw std::invalid_argument("improvement needs original RMSE > 0");
    if (corrected_rmse < 0.0) throw std::invalid_argument("corrected RMSE must be >= 0");
    return 100.0 * (original_rmse - corrected_rmse) / original_rmse;
}

Grid error_map(const Grid& dem, const Grid& ref) { return diff(dem, ref); }

void export_learning_curve(const TrainingTrace& trace, const std::filesystem::path& path) {
    if (trace.points.empty()) throw std::invalid_argument("learning curve trace is empty");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open learning curve csv for writing: " + path.string());
    out << "iteration,train_rmse,val_rmse\n";
    for (std::size_t i = 0; i < trace.points.size(); ++i) {
        out << (i + 1) << ',' << format_double(trace.points[i].train_rmse) << ','
            << format_double(trace.points[i].val_rmse) << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

namespace {

struct ResidualStats {
    double rmse = 0.0;
    double mae = 0.0;
    double bias = 0.0;
    std::size_t n = 0;
};

ResidualStats residual_stats(const Grid& dem, const Grid& ref) {
    if (!dem.header().aligned_with(ref.header())) {
        throw AlignmentError("evaluation requires aligned grids");
    }
    ResidualStats stats;
    double sq = 0.0, abs_sum = 0.0, sum = 0.0;
    for (int r = 0; r < dem.nrows(); ++r) {
        for (int c = 0; c < dem.ncols(); ++c) {
            if (!dem.is_valid(r, c) || !ref.is_valid(r, c)) continue;
            const double d = dem.at(r, c) - ref.at(r, c);
            sq += d * d;
            abs_sum += std::abs(d);
            sum += d;
            ++stats.n;
        }
    }
    if (stats.n == 0) throw EmptyDatasetError("no overlapping valid cells to evaluate");
    stats.rmse = std::sqrt(sq / static_cast<double>(stats.n));
    stats.mae = abs_sum / static_cast<double>(stats.n);
    stats.bias = sum / static_cast<double>(stats.n);
    return stats;
}

}  // namespace

SiteRecord evaluate_site(const std::string& site, const std::string& dem_name,
                         const Grid& original, const Grid* corrected, const Grid& ref) {
    SiteRecord rec;
    rec.site = site;
    rec.dem = dem_name;
    const ResidualStats orig = residual_stats(original, ref);
    rec.original_rmse = orig.rmse;
    rec.original_mae = orig.mae;
    rec.original_bias = orig.bias;
    rec.n_points = orig.n;
    if (corrected != nullptr) {
        const ResidualStats corr = residual_stats(*corrected, ref);
        rec.corrected_rmse = corr.rmse;
        if (orig.rmse > 0.0) {
            rec.improvement_pct = improvement_factor(orig.rmse, corr.rmse);
        }
    }
    return rec;
}

void write_report_json(const AccuracyReport& report, const std::filesystem::path& path,
                       const std::string& config_hash) {
    nlohmann::ordered_json doc;
    doc["config_hash"] = config_hash;
    doc["records"] = nlohmann::ordered_json::array();
    for (const SiteRecord& rec : report.records) {
        nlohmann::ordered_json j;
        j["site"] = rec.site;
        j["dem"] = rec.dem;
        j["n_points"] = rec.n_points;
        j["original_rmse"] = rec.original_rmse;
        j["original_mae"] = rec.original_mae;
        j["original_bias"] = rec.original_bias;
        if (rec.corrected_rmse) j["corrected_rmse"] = *rec.corrected_rmse;
        if (rec.improvement_pct) j["improvement_pct"] = *rec.improvement_pct;
        doc["records"].push_back(j);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open report for writing: " + path.string());
    out << doc.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace demboost
