#include "demboost/pipeline.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "demboost/errors.hpp"

namespace demboost {

namespace {

using nlohmann::ordered_json;

ResampleMethod resample_from_string(const std::string& s) {
    if (s == "nearest") return ResampleMethod::nearest;
    if (s == "bilinear") return ResampleMethod::bilinear;
    throw Error("unknown resample method '" + s + "' (expected nearest|bilinear)");
}

std::string resample_to_string(ResampleMethod m) {
    return m == ResampleMethod::nearest ? "nearest" : "bilinear";
}

GbtParams params_from_json(const ordered_json& j) {
    GbtParams p;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        if (key == "n_estimators") p.n_estimators = it.value().get<int>();
        else if (key == "max_depth") p.max_depth = it.value().get<int>();
        else if (key == "learning_rate") p.learning_rate = it.value().get<double>();
        else if (key == "reg_alpha") p.reg_alpha = it.value().get<double>();
        else if (key == "reg_lambda") p.reg_lambda = it.value().get<double>();
        else if (key == "gamma") p.gamma = it.value().get<double>();
        else if (key == "min_child_weight") p.min_child_weight = it.value().get<double>();
        else if (key == "subsample") p.subsample = it.value().get<double>();
        else if (key == "colsample_bytree") p.colsample_bytree = it.value().get<double>();
        else if (key == "early_stopping_rounds") p.early_stopping_rounds = it.value().get<int>();
        else if (key == "seed") p.seed = it.value().get<std::uint64_t>();
        else throw Error("unknown params field '" + key + "'");
    }
    p.validate();
    return p;
}

ordered_json params_to_json(const GbtParams& p) {
    ordered_json j;
    j["n_estimators"] = p.n_estimators;
    j["max_depth"] = p.max_depth;
    j["learning_rate"] = p.learning_rate;
    j["reg_alpha"] = p.reg_alpha;
    j["reg_lambda"] = p.reg_lambda;
    j["gamma"] = p.gamma;
    j["min_child_weight"] = p.min_child_weight;
    j["subsample"] = p.subsample;
    j["colsample_bytree"] = p.colsample_bytree;
    j["early_stopping_rounds"] = p.early_stopping_rounds;
    j["seed"] = p.seed;
    return j;
}

SceneConfig scene_from_json(const ordered_json& j) {
    SceneConfig s;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        if (key == "size") s.size = it.value().get<int>();
        else if (key == "cellsize") s.cellsize = it.value().get<double>();
        else if (key == "seed") s.seed = it.value().get<std::uint64_t>();
        else if (key == "building_density") s.building_density = it.value().get<double>();
        else if (key == "building_height_mean") s.building_height_mean = it.value().get<double>();
        else if (key == "building_height_sd") s.building_height_sd = it.value().get<double>();
        else if (key == "forest_density") s.forest_density = it.value().get<double>();
        else if (key == "canopy_offset_per_pct") s.canopy_offset_per_pct = it.value().get<double>();
        else if (key == "slope_noise_coeff") s.slope_noise_coeff = it.value().get<double>();
        else if (key == "white_noise_sd") s.white_noise_sd = it.value().get<double>();
        else if (key == "base_terrain_amplitude") s.base_terrain_amplitude = it.value().get<double>();
        else throw Error("unknown scene field '" + key + "'");
    }
    return s;
}

ordered_json scene_to_json(const SceneConfig& s) {
    ordered_json j;
    j["size"] = s.size;
    j["cellsize"] = s.cellsize;
    j["seed"] = s.seed;
    j["building_density"] = s.building_density;
    j["building_height_mean"] = s.building_height_mean;
    j["building_height_sd"] = s.building_height_sd;
    j["forest_density"] = s.forest_density;
    j["canopy_offset_per_pct"] = s.canopy_offset_per_pct;
    j["slope_noise_coeff"] = s.slope_noise_coeff;
    j["white_noise_sd"] = s.white_noise_sd;
    j["base_terrain_amplitude"] = s.base_terrain_amplitude;
    return j;
}

ordered_json terrain_to_json(const TerrainSettings& t) {
    ordered_json j;
    j["tpi_radius"] = t.tpi_radius;
    j["vrm_radius"] = t.vrm_radius;
    j["tst_radius"] = t.tst_radius;
    j["tst_threshold"] = t.tst_threshold;
    j["urban_resample"] = resample_to_string(t.urban_resample);
    j["cover_resample"] = resample_to_string(t.cover_resample);
    return j;
}

ordered_json config_to_json(const RunConfig& c) {
    ordered_json j;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir.string();
    j["inputs"]["global_dem"] = c.inputs.global_dem.string();
    j["inputs"]["ref_dem"] = c.inputs.ref_dem.string();
    j["inputs"]["urban"] = c.inputs.urban.string();
    j["inputs"]["forest_pct"] = c.inputs.forest_pct.string();
    j["inputs"]["bare_pct"] = c.inputs.bare_pct.string();
    j["vertical_offsets"]["global_dem"] = c.global_dem_offset;
    j["vertical_offsets"]["ref_dem"] = c.ref_dem_offset;
    j["terrain"] = terrain_to_json(c.terrain);
    j["split"]["test_fraction"] = c.split.test_fraction;
    j["split"]["val_fraction_of_train"] = c.split.val_fraction_of_train;
    j["split"]["seed"] = c.split.seed;
    if (c.params) j["params"] = params_to_json(*c.params);
    if (c.tune) {
        j["tune"]["budget"] = c.tune->budget;
        j["tune"]["n_init"] = c.tune->n_init;
    }
    if (c.scene) j["scene"] = scene_to_json(*c.scene);
    j["histogram_bins"] = c.histogram_bins;
    return j;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
    if (p.empty() || p.is_absolute()) return p;
    return base / p;
}

Grid read_input_grid(const std::filesystem::path& path, const char* role) {
    if (path.empty()) throw IoError(std::string("config gives no path for ") + role);
    return read_ascii_grid(path);
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory: " + dir.string());
}

void write_manifest(const RunConfig& config, const std::string& command,
                    const std::vector<std::string>& outputs) {
    ordered_json j;
    j["command"] = command;
    j["tool"] = "demboost";
    j["schema_version"] = 1;
    j["config_hash"] = config.config_hash;
    j["seed"] = config.seed;
    j["resolved_config"] = config_to_json(config);
    j["outputs"] = outputs;
    const auto path = config.output_dir / (command + "_manifest.json");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write manifest: " + path.string());
    out << j.dump(2) << "\n";
}

// Validation and test tables reuse the split; the tune objective is the
// validation RMSE at the early-stopped best iteration.
ObjectiveValue tuning_objective(const GbtParams& candidate, const FeatureTable& train_table,
                                const FeatureTable& val_table, const TrainOptions& options) {
    GbtParams p = candidate;
    p.early_stopping_rounds = 10;
    const TrainResult result = train(train_table, val_table, p, options);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < result.model.best_iteration && i < result.trace.size(); ++i) {
        best = std::min(best, result.trace.points[i].val_rmse);
    }
    return {best, static_cast<int>(result.model.best_iteration)};
}

}  // namespace

std::string hash_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file for hashing: " + path.string());
    std::uint64_t hash = 1469598103934665603ull;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 1099511628211ull;
        }
    }
    std::ostringstream hex;
    hex << std::hex << hash;
    return hex.str();
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path.string());
    ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("config is not valid JSON: " + std::string(e.what()));
    }

    RunConfig c;
    const auto base = path.parent_path();
    c.config_hash = hash_file_bytes(path);

    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("output_dir")) c.output_dir = resolve(base, j["output_dir"].get<std::string>());
    if (j.contains("inputs")) {
        const auto& in_j = j["inputs"];
        auto get_path = [&](const char* key) -> std::filesystem::path {
            return in_j.contains(key) ? resolve(base, in_j[key].get<std::string>())
                                      : std::filesystem::path{};
        };
        c.inputs.global_dem = get_path("global_dem");
        c.inputs.ref_dem = get_path("ref_dem");
        c.inputs.urban = get_path("urban");
        c.inputs.forest_pct = get_path("forest_pct");
        c.inputs.bare_pct = get_path("bare_pct");
    }
    if (j.contains("vertical_offsets")) {
        const auto& off = j["vertical_offsets"];
        if (off.contains("global_dem")) c.global_dem_offset = off["global_dem"].get<double>();
        if (off.contains("ref_dem")) c.ref_dem_offset = off["ref_dem"].get<double>();
    }
    if (j.contains("terrain")) {
        const auto& t = j["terrain"];
        if (t.contains("tpi_radius")) c.terrain.tpi_radius = t["tpi_radius"].get<int>();
        if (t.contains("vrm_radius")) c.terrain.vrm_radius = t["vrm_radius"].get<int>();
        if (t.contains("tst_radius")) c.terrain.tst_radius = t["tst_radius"].get<int>();
        if (t.contains("tst_threshold")) c.terrain.tst_threshold = t["tst_threshold"].get<double>();
        if (t.contains("urban_resample")) {
            c.terrain.urban_resample = resample_from_string(t["urban_resample"].get<std::string>());
        }
        if (t.contains("cover_resample")) {
            c.terrain.cover_resample = resample_from_string(t["cover_resample"].get<std::string>());
        }
    }
    if (j.contains("split")) {
        const auto& s = j["split"];
        if (s.contains("test_fraction")) c.split.test_fraction = s["test_fraction"].get<double>();
        if (s.contains("val_fraction_of_train")) {
            c.split.val_fraction_of_train = s["val_fraction_of_train"].get<double>();
        }
        if (s.contains("seed")) c.split.seed = s["seed"].get<std::uint64_t>();
    }
    if (j.contains("params") && j.contains("params_file")) {
        throw Error("config may give params inline or via params_file, not both");
    }
    if (j.contains("params")) c.params = params_from_json(j["params"]);
    if (j.contains("params_file")) {
        c.params = load_params_json(resolve(base, j["params_file"].get<std::string>()));
    }
    if (j.contains("tune")) {
        TuneSettings t;
        const auto& tj = j["tune"];
        if (tj.contains("budget")) t.budget = tj["budget"].get<int>();
        if (tj.contains("n_init")) t.n_init = tj["n_init"].get<int>();
        if (tj.contains("space")) {
            for (const auto& pj : tj["space"]) {
                for (ParamRange& range : t.space.params) {
                    if (range.name != pj.at("name").get<std::string>()) continue;
                    if (pj.contains("lower")) range.lower = pj["lower"].get<double>();
                    if (pj.contains("upper")) range.upper = pj["upper"].get<double>();
                }
            }
            t.space.validate();
        }
        c.tune = t;
    }
    if (j.contains("scene")) c.scene = scene_from_json(j["scene"]);
    if (j.contains("histogram_bins")) c.histogram_bins = j["histogram_bins"].get<int>();
    return c;
}

void save_params_json(const GbtParams& params, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write params file: " + path.string());
    out << params_to_json(params).dump(2) << "\n";
}

GbtParams load_params_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open params file: " + path.string());
    ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("params file is not valid JSON: " + std::string(e.what()));
    }
    return params_from_json(j);
}

std::array<Grid, kNumFeatures> make_feature_grids(const Grid& dem, const Grid& urban,
                                                  const Grid& forest_pct, const Grid& bare_pct,
                                                  const TerrainSettings& settings) {
    auto co_register = [&](const Grid& g, ResampleMethod method) {
        return g.header().aligned_with(dem.header()) ? g : resample(g, dem.header(), method);
    };
    return {
        dem,
        co_register(urban, settings.urban_resample),
        slope(dem),
        aspect(dem),
        roughness(dem),
        tpi(dem, {settings.tpi_radius}),
        tri(dem),
        tst(dem, {settings.tst_radius}, settings.tst_threshold),
        vrm(dem, {settings.vrm_radius}),
        co_register(forest_pct, settings.cover_resample),
        co_register(bare_pct, settings.cover_resample),
    };
}

void run_synth(const RunConfig& config) {
    if (!config.scene) throw Error("config has no scene block");
    ensure_dir(config.output_dir);
    const Scene scene = generate_scene(*config.scene);
    write_ascii_grid(scene.truth, config.output_dir / "truth.asc");
    write_ascii_grid(scene.corrupted, config.output_dir / "corrupted.asc");
    write_ascii_grid(scene.urban, config.output_dir / "urban.asc");
    write_ascii_grid(scene.forest_pct, config.output_dir / "forest_pct.asc");
    write_ascii_grid(scene.bare_pct, config.output_dir / "bare_pct.asc");
    write_manifest(config, "synth",
                   {"truth.asc", "corrupted.asc", "urban.asc", "forest_pct.asc", "bare_pct.asc"});
}

void run_features(const RunConfig& config) {
    const Grid dem = apply_vertical_offset(
        read_input_grid(config.inputs.global_dem, "inputs.global_dem"), config.global_dem_offset);
    const Grid urban = read_input_grid(config.inputs.urban, "inputs.urban");
    const Grid forest = read_input_grid(config.inputs.forest_pct, "inputs.forest_pct");
    const Grid bare = read_input_grid(config.inputs.bare_pct, "inputs.bare_pct");

    const auto grids = make_feature_grids(dem, urban, forest, bare, config.terrain);
    const auto dir = config.output_dir / "features";
    ensure_dir(dir);
    std::vector<std::string> outputs;
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
        const std::string name = feature_names()[f] + ".asc";
        write_ascii_grid(grids[f], dir / name);
        outputs.push_back("features/" + name);
    }
    write_manifest(config, "features", outputs);
}

namespace {

std::array<Grid, kNumFeatures> read_feature_grids(const std::filesystem::path& dir) {
    auto read_one = [&](std::size_t f) { return read_ascii_grid(dir / (feature_names()[f] + ".asc")); };
    return {read_one(0), read_one(1), read_one(2), read_one(3), read_one(4), read_one(5),
            read_one(6), read_one(7), read_one(8), read_one(9), read_one(10)};
}

FeatureTable assemble_from_dir(const RunConfig& config, Grid& elevation_out) {
    const auto dir = config.output_dir / "features";
    const auto grids = read_feature_grids(dir);
    elevation_out = grids[0];

    Grid ref = apply_vertical_offset(read_input_grid(config.inputs.ref_dem, "inputs.ref_dem"),
                                     config.ref_dem_offset);
    if (!ref.header().aligned_with(elevation_out.header())) {
        ref = resample(ref, elevation_out.header(), ResampleMethod::bilinear);
    }
    const Grid delta = diff(elevation_out, ref);

    std::array<const Grid*, kNumFeatures> ptrs{};
    for (std::size_t f = 0; f < kNumFeatures; ++f) ptrs[f] = &grids[f];
    return assemble(ptrs, delta);
}

}  // namespace

void run_tune(const RunConfig& config) {
    if (!config.tune) throw Error("config has no tune block");
    ensure_dir(config.output_dir);
    Grid elevation;
    const FeatureTable table = assemble_from_dir(config, elevation);
    const SplitResult parts = split(table, config.split);
    const TrainOptions options{config.histogram_bins};

    const TuneResult result = tune_gbt(
        config.tune->space,
        [&](const GbtParams& candidate) {
            GbtParams p = candidate;
            p.seed = config.seed;
            return tuning_objective(p, parts.train, parts.val, options);
        },
        config.tune->budget, config.tune->n_init, config.seed);

    GbtParams best = result.best_params;
    best.seed = config.seed;
    export_history_csv(config.tune->space, result.history,
                       config.output_dir / "tuning_history.csv");
    save_params_json(best, config.output_dir / "best_params.json");
    write_manifest(config, "tune", {"tuning_history.csv", "best_params.json"});
}

void run_train(const RunConfig& config) {
    if (!config.params && !config.tune) {
        throw Error("config needs a params block or a tune block for training");
    }
    ensure_dir(config.output_dir);
    Grid elevation;
    const FeatureTable table = assemble_from_dir(config, elevation);
    const SplitResult parts = split(table, config.split);
    const TrainOptions options{config.histogram_bins};

    std::vector<std::string> outputs;
    GbtParams params;
    if (config.tune) {
        const TuneResult result = tune_gbt(
            config.tune->space,
            [&](const GbtParams& candidate) {
                GbtParams p = candidate;
                p.seed = config.seed;
                return tuning_objective(p, parts.train, parts.val, options);
            },
            config.tune->budget, config.tune->n_init, config.seed);
        params = result.best_params;
        params.seed = config.seed;
        params.early_stopping_rounds = 10;
        export_history_csv(config.tune->space, result.history,
                           config.output_dir / "tuning_history.csv");
        save_params_json(params, config.output_dir / "best_params.json");
        outputs.push_back("tuning_history.csv");
        outputs.push_back("best_params.json");
    } else {
        params = *config.params;
    }

    const TrainResult result = train(parts.train, parts.val, params, options);
    save_model(result.model, config.output_dir / "model.txt");
    export_learning_curve(result.trace, config.output_dir / "learning_curve.csv");
    outputs.push_back("model.txt");
    outputs.push_back("learning_curve.csv");

    // Train/test accuracy summary alongside the model.
    ordered_json report;
    auto rmse_of = [&](const FeatureTable& part) {
        std::vector<double> residuals;
        residuals.reserve(part.size());
        const std::vector<double> pred = result.model.predict_batch(part);
        for (std::size_t i = 0; i < part.size(); ++i) {
            residuals.push_back(pred[i] - part.rows[i].target);
        }
        return rmse(residuals);
    };
    report["n_train"] = parts.train.size();
    report["n_val"] = parts.val.size();
    report["n_test"] = parts.test.size();
    report["best_iteration"] = result.model.best_iteration;
    report["train_rmse"] = rmse_of(parts.train);
    if (!parts.val.empty()) report["val_rmse"] = rmse_of(parts.val);
    if (!parts.test.empty()) report["test_rmse"] = rmse_of(parts.test);
    {
        const auto path = config.output_dir / "train_report.json";
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write train report: " + path.string());
        out << report.dump(2) << "\n";
    }
    outputs.push_back("train_report.json");
    write_manifest(config, "train", outputs);
}

void run_correct(const RunConfig& config, const std::filesystem::path& model_path,
                 const std::filesystem::path& dem_path) {
    ensure_dir(config.output_dir);
    const BoostModel model = load_model(model_path);

    const auto dir = config.output_dir / "features";
    std::array<Grid, kNumFeatures> grids;
    if (model.feature_names.size() != kNumFeatures) {
        throw FeatureMismatchError("model has " + std::to_string(model.feature_names.size()) +
                                   " features, expected " + std::to_string(kNumFeatures));
    }
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
        if (model.feature_names[f] != feature_names()[f]) {
            throw FeatureMismatchError("model feature '" + model.feature_names[f] +
                                       "' does not match expected '" + feature_names()[f] + "'");
        }
        const auto path = dir / (model.feature_names[f] + ".asc");
        if (!std::filesystem::exists(path)) {
            throw FeatureMismatchError("feature raster missing for model input: " + path.string());
        }
        grids[f] = read_ascii_grid(path);
    }

    const Grid dem = read_input_grid(dem_path, "dem");
    for (const Grid& g : grids) {
        if (!g.header().aligned_with(dem.header())) {
            throw AlignmentError("feature rasters are not aligned with the DEM being corrected");
        }
    }

    Grid corrected = dem;
    Grid mask(dem.header(), 0.0);  // 1 = passed through uncorrected
    std::array<double, kNumFeatures> features{};
    for (int r = 0; r < dem.nrows(); ++r) {
        for (int c = 0; c < dem.ncols(); ++c) {
            bool have_all = dem.is_valid(r, c);
            for (std::size_t f = 0; have_all && f < kNumFeatures; ++f) {
                if (!grids[f].is_valid(r, c)) have_all = false;
            }
            if (!have_all) {
                mask.at(r, c) = 1.0;
                continue;
            }
            for (std::size_t f = 0; f < kNumFeatures; ++f) features[f] = grids[f].at(r, c);
            corrected.at(r, c) = dem.at(r, c) - model.predict(features);
        }
    }
    write_ascii_grid(corrected, config.output_dir / "corrected.asc");
    write_ascii_grid(mask, config.output_dir / "correction_mask.asc");
    write_manifest(config, "correct", {"corrected.asc", "correction_mask.asc"});
}

AccuracyReport run_evaluate(const RunConfig& config, const std::vector<EvaluateInput>& dems,
                            const std::filesystem::path& ref_path) {
    ensure_dir(config.output_dir);
    const Grid ref = read_input_grid(ref_path, "ref");

    AccuracyReport report;
    std::vector<std::string> outputs;
    const Grid* original = nullptr;
    std::vector<Grid> grids;
    grids.reserve(dems.size());
    for (const EvaluateInput& input : dems) {
        grids.push_back(read_input_grid(input.path, input.name.c_str()));
    }
    if (!grids.empty()) original = &grids.front();

    for (std::size_t i = 0; i < grids.size(); ++i) {
        const bool is_original = (i == 0);
        SiteRecord rec = evaluate_site("site", dems[i].name, *original,
                                       is_original ? nullptr : &grids[i], ref);
        report.records.push_back(rec);

        const Grid emap = error_map(grids[i], ref);
        const std::string name = "error_map_" + dems[i].name + ".asc";
        write_ascii_grid(emap, config.output_dir / name);
        outputs.push_back(name);
    }
    write_report_json(report, config.output_dir / "evaluation_report.json", config.config_hash);
    outputs.push_back("evaluation_report.json");
    write_manifest(config, "evaluate", outputs);
    return report;
}

}  // namespace demboost
