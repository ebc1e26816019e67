#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "demboost/errors.hpp"
#include "demboost/pipeline.hpp"

namespace {

// name=path, or a bare path whose stem becomes the name.
demboost::EvaluateInput parse_dem_arg(const std::string& arg) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos) {
        std::filesystem::path p(arg);
        return {p.stem().string(), p};
    }
    return {arg.substr(0, eq), std::filesystem::path(arg.substr(eq + 1))};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DEM error correction with gradient boosted trees"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--out", out_override, "override the config's output directory");

    auto* synth = app.add_subcommand("synth", "generate a synthetic scene");
    auto* features = app.add_subcommand("features", "derive the predictor rasters");
    auto* train_cmd = app.add_subcommand("train", "assemble, split, and fit the model");
    auto* tune_cmd = app.add_subcommand("tune", "Bayesian search for hyperparameters");

    auto* correct = app.add_subcommand("correct", "subtract predicted errors from a DEM");
    std::string model_arg, dem_arg;
    correct->add_option("--model", model_arg, "model file (default <out>/model.txt)");
    correct->add_option("--dem", dem_arg, "DEM to correct (default <out>/features/elevation.asc)");

    auto* evaluate = app.add_subcommand("evaluate", "accuracy report and error maps");
    std::vector<std::string> eval_dems;
    std::string ref_arg;
    evaluate->add_option("--dem", eval_dems,
                         "name=path of a DEM to evaluate; first entry is the original "
                         "(default: original + corrected from the run directory)");
    evaluate->add_option("--ref", ref_arg, "reference DEM (default from config)");

    // Global options may appear before or after the subcommand name.
    for (auto* sub : {synth, features, train_cmd, tune_cmd, correct, evaluate}) {
        sub->add_option("--config", config_path);
        sub->add_option("--out", out_override);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (config_path.empty()) throw demboost::Error("--config is required");
        demboost::RunConfig config = demboost::load_config(config_path);
        if (!out_override.empty()) config.output_dir = out_override;

        if (synth->parsed()) {
            demboost::run_synth(config);
        } else if (features->parsed()) {
            demboost::run_features(config);
        } else if (train_cmd->parsed()) {
            demboost::run_train(config);
        } else if (tune_cmd->parsed()) {
            demboost::run_tune(config);
        } else if (correct->parsed()) {
            const std::filesystem::path model =
                model_arg.empty() ? config.output_dir / "model.txt" : std::filesystem::path(model_arg);
            const std::filesystem::path dem = dem_arg.empty()
                                                  ? config.output_dir / "features" / "elevation.asc"
                                                  : std::filesystem::path(dem_arg);
            demboost::run_correct(config, model, dem);
        } else if (evaluate->parsed()) {
            std::vector<demboost::EvaluateInput> dems;
            if (eval_dems.empty()) {
                dems.push_back({"original", config.output_dir / "features" / "elevation.asc"});
                const auto corrected = config.output_dir / "corrected.asc";
                if (std::filesystem::exists(corrected)) dems.push_back({"corrected", corrected});
            } else {
                for (const std::string& arg : eval_dems) dems.push_back(parse_dem_arg(arg));
            }
            std::filesystem::path ref = ref_arg.empty() ? config.inputs.ref_dem
                                                        : std::filesystem::path(ref_arg);
            const auto report = demboost::run_evaluate(config, dems, ref);
            for (const auto& rec : report.records) {
                std::cout << rec.dem << ": rmse " << rec.original_rmse;
                if (rec.corrected_rmse) std::cout << " -> " << *rec.corrected_rmse;
                if (rec.improvement_pct) std::cout << " (" << *rec.improvement_pct << "% improvement)";
                std::cout << " over " << rec.n_points << " cells\n";
            }
        }
    } catch (const demboost::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const demboost::EmptyDatasetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const demboost::FeatureMismatchError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const demboost::AlignmentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
