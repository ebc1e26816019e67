#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "demboost/dataset.hpp"
#include "demboost/evalkit.hpp"
#include "demboost/gbtree.hpp"
#include "demboost/hypertune.hpp"
#include "demboost/raster.hpp"
#include "demboost/synthgen.hpp"
#include "demboost/terrain.hpp"

namespace demboost {

struct TerrainSettings {
    int tpi_radius = 1;
    int vrm_radius = 1;
    int tst_radius = 10;
    double tst_threshold = 1.0;
    ResampleMethod urban_resample = ResampleMethod::nearest;
    ResampleMethod cover_resample = ResampleMethod::bilinear;
};

struct TuneSettings {
    int budget = 50;
    int n_init = 10;
    SearchSpace space = SearchSpace::gbt_default();
};

// Everything a run needs, loaded from one JSON document. Paths are resolved
// relative to the config file's directory.
struct RunConfig {
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "out";

    struct Inputs {
        std::filesystem::path global_dem;
        std::filesystem::path ref_dem;
        std::filesystem::path urban;
        std::filesystem::path forest_pct;
        std::filesystem::path bare_pct;
    } inputs;

    double global_dem_offset = 0.0;
    double ref_dem_offset = 0.0;

    TerrainSettings terrain;
    SplitSpec split;
    std::optional<GbtParams> params;
    std::optional<TuneSettings> tune;
    std::optional<SceneConfig> scene;
    int histogram_bins = 0;

    std::string config_hash;  // hash of the raw config file bytes
};

RunConfig load_config(const std::filesystem::path& path);

void save_params_json(const GbtParams& params, const std::filesystem::path& path);
GbtParams load_params_json(const std::filesystem::path& path);

// Derives the full 11-layer predictor stack on the DEM's grid, in
// feature_names() order. Covariate layers are resampled when not aligned.
std::array<Grid, kNumFeatures> make_feature_grids(const Grid& dem, const Grid& urban,
                                                  const Grid& forest_pct, const Grid& bare_pct,
                                                  const TerrainSettings& settings);

// Subcommand bodies shared by the CLI and the test suites. Each writes its
// artifacts plus a manifest under config.output_dir.
void run_synth(const RunConfig& config);
void run_features(const RunConfig& config);
void run_train(const RunConfig& config);
void run_tune(const RunConfig& config);
void run_correct(const RunConfig& config, const std::filesystem::path& model_path,
                 const std::filesystem::path& dem_path);

struct EvaluateInput {
    std::string name;
    std::filesystem::path path;
};
AccuracyReport run_evaluate(const RunConfig& config, const std::vector<EvaluateInput>& dems,
                            const std::filesystem::path& ref_path);

// Stable content hash used to key manifests (FNV-1a 64, hex).
std::string hash_file_bytes(const std::filesystem::path& path);

}  // namespace demboost
