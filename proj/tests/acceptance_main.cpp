// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Heavier scenarios (the 512x512 end-to-end run and the
// 20-seed tuning comparison) share their artifacts with the determinism and
// importance checks that follow them.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <future>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "demboost/dataset.hpp"
#include "demboost/evalkit.hpp"
#include "demboost/gbtree.hpp"
#include "demboost/hypertune.hpp"
#include "demboost/pipeline.hpp"
#include "demboost/raster.hpp"
#include "demboost/rng.hpp"
#include "demboost/synthgen.hpp"
#include "demboost/terrain.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace demboost;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Acceptance {
    int failures = 0;

    void criterion(int id, const std::string& label, const std::function<bool(std::string&)>& body) {
        std::string detail;
        bool ok = false;
        try {
            ok = body(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        if (!ok) ++failures;
        std::printf("criterion %02d  %s  %s%s%s\n", id, ok ? "PASS" : "FAIL", label.c_str(),
                    detail.empty() ? "" : "  -- ", detail.c_str());
        std::fflush(stdout);
    }
};

// --------------------------------------------------------------------------
// Scene-backed datasets shared by several criteria.

struct SceneDataset {
    Scene scene;
    FeatureTable table;
};

SceneDataset scene_dataset(std::uint64_t seed, int size) {
    SceneConfig config;
    config.size = size;
    config.seed = seed;
    SceneDataset out{generate_scene(config), {}};
    const auto grids = make_feature_grids(out.scene.corrupted, out.scene.urban,
                                          out.scene.forest_pct, out.scene.bare_pct, {});
    const Grid delta = diff(out.scene.corrupted, out.scene.truth);
    std::array<const Grid*, kNumFeatures> ptrs{};
    for (std::size_t f = 0; f < kNumFeatures; ++f) ptrs[f] = &grids[f];
    out.table = assemble(ptrs, delta);
    return out;
}

double test_rmse_of(const BoostModel& model, const FeatureTable& test) {
    std::vector<double> residuals;
    residuals.reserve(test.size());
    for (const FeatureRow& row : test.rows) {
        residuals.push_back(model.predict(row.features) - row.target);
    }
    return rmse(residuals);
}

// Per-seed outcome of the tuned-vs-default comparison (criterion 6) reused by
// criteria 9 and 10.
struct SeedOutcome {
    double default_test_rmse = 0.0;
    double tuned_test_rmse = 0.0;
    std::vector<std::string> importance_top3;
    bool importance_sum_matches = false;
    std::string tuned_model_bytes;  // seed 0 only, for the determinism recheck
};

GbtParams default_params_with_stopping(std::uint64_t seed) {
    GbtParams p;  // stock configuration
    p.early_stopping_rounds = 10;
    p.seed = seed;
    return p;
}

SeedOutcome run_seed_comparison(std::uint64_t seed, bool keep_model_bytes) {
    const SceneDataset data = scene_dataset(1000 + seed, 96);
    const SplitResult parts = split(data.table, {0.2, 0.125, seed});

    SeedOutcome out;
    const TrainResult default_run =
        train(parts.train, parts.val, default_params_with_stopping(seed));
    out.default_test_rmse = test_rmse_of(default_run.model, parts.test);

    const TuneResult tuned = tune_gbt(
        SearchSpace::gbt_default(),
        [&](const GbtParams& candidate) {
            GbtParams p = candidate;
            p.seed = seed;
            p.early_stopping_rounds = 10;
            const TrainResult r = train(parts.train, parts.val, p);
            double best = std::numeric_limits<double>::infinity();
            for (const auto& point : r.trace.points) best = std::min(best, point.val_rmse);
            return ObjectiveValue{best, static_cast<int>(r.model.best_iteration)};
        },
        50, 10, seed);
    GbtParams best = tuned.best_params;
    best.seed = seed;
    best.early_stopping_rounds = 10;
    const TrainResult tuned_run = train(parts.train, parts.val, best);
    out.tuned_test_rmse = test_rmse_of(tuned_run.model, parts.test);

    // Importance bookkeeping on a compact probe model; shallow trees keep the
    // split counts focused on the drivers rather than on value memorization.
    GbtParams probe;
    probe.n_estimators = 60;
    probe.max_depth = 3;
    probe.seed = seed;
    const TrainResult probe_run = train(parts.train, parts.val, probe);
    const auto importance = feature_importance(probe_run.model, ImportanceKind::weight);
    std::vector<std::pair<std::string, double>> ranked(importance.begin(), importance.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    for (std::size_t i = 0; i < 3 && i < ranked.size(); ++i) {
        out.importance_top3.push_back(ranked[i].first);
    }
    std::size_t split_count = 0;
    for (const Tree& tree : probe_run.model.trees) {
        for (const TreeNode& node : tree.nodes) split_count += node.is_leaf() ? 0 : 1;
    }
    double weight_sum = 0.0;
    for (const auto& [name, score] : importance) weight_sum += score;
    out.importance_sum_matches = weight_sum == static_cast<double>(split_count);

    if (keep_model_bytes) {
        TempDir dir;
        save_model(tuned_run.model, dir.path() / "tuned.txt");
        out.tuned_model_bytes = file_bytes(dir.path() / "tuned.txt");
    }
    return out;
}

// --------------------------------------------------------------------------
// The 512x512 default-parameter end-to-end run (criterion 6a / 9).

struct EndToEnd {
    double improvement_pct = 0.0;
    std::string model_bytes;
    std::string corrected_bytes;
    std::string error_map_bytes;
};

EndToEnd run_end_to_end_512(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto cfg_path = dir / "run.json";
    {
        std::ofstream out(cfg_path, std::ios::binary);
        out << R"({
  "seed": 4242,
  "output_dir": ")" << dir.generic_string() << R"(",
  "inputs": {
    "global_dem": ")" << (dir / "corrupted.asc").generic_string() << R"(",
    "ref_dem": ")" << (dir / "truth.asc").generic_string() << R"(",
    "urban": ")" << (dir / "urban.asc").generic_string() << R"(",
    "forest_pct": ")" << (dir / "forest_pct.asc").generic_string() << R"(",
    "bare_pct": ")" << (dir / "bare_pct.asc").generic_string() << R"("
  },
  "split": { "test_fraction": 0.2, "val_fraction_of_train": 0.125, "seed": 4242 },
  "params": {},
  "scene": { "size": 512, "cellsize": 30.0, "seed": 4242 }
})";
    }
    const RunConfig config = load_config(cfg_path);
    run_synth(config);
    run_features(config);
    run_train(config);
    run_correct(config, dir / "model.txt", dir / "features" / "elevation.asc");
    const AccuracyReport report = run_evaluate(
        config,
        {{"original", dir / "features" / "elevation.asc"}, {"corrected", dir / "corrected.asc"}},
        dir / "truth.asc");

    EndToEnd out;
    out.improvement_pct = report.records.at(1).improvement_pct.value_or(-1.0);
    out.model_bytes = file_bytes(dir / "model.txt");
    out.corrected_bytes = file_bytes(dir / "corrected.asc");
    out.error_map_bytes = file_bytes(dir / "error_map_corrected.asc");
    return out;
}

}  // namespace

int main() {
    Acceptance acc;
    const auto suite_start = std::chrono::steady_clock::now();

    // ------------------------------------------------------------------ 1
    acc.criterion(1, "terrain stencils match naive oracles (20 seeds, 50x50, tol 1e-12, < 10 s)",
                  [&](std::string& detail) {
                      const auto start = std::chrono::steady_clock::now();
                      double worst = 0.0;
                      for (std::uint64_t seed = 0; seed < 20; ++seed) {
                          const Grid g = oracles::random_grid(9000 + seed, 50, 0.0, 150.0,
                                                              seed % 3 == 0 ? 0.02 : 0.0);
                          worst = std::max(worst, oracles::max_abs_difference(
                                                      slope(g), oracles::slope_naive(g)));
                          worst = std::max(worst, oracles::max_abs_difference(
                                                      aspect(g), oracles::aspect_naive(g)));
                          worst = std::max(worst, oracles::max_abs_difference(
                                                      roughness(g), oracles::roughness_naive(g)));
                          worst = std::max(worst, oracles::max_abs_difference(
                                                      tpi(g, {1}), oracles::tpi_naive(g, 1)));
                          worst = std::max(worst, oracles::max_abs_difference(
                                                      tri(g), oracles::tri_naive(g)));
                          worst = std::max(worst,
                                           oracles::max_abs_difference(
                                               tst(g, {10}, 1.0), oracles::tst_naive(g, 10, 1.0)));
                          worst = std::max(worst, oracles::max_abs_difference(
                                                      vrm(g, {1}), oracles::vrm_naive(g, 1)));
                      }
                      const double elapsed = seconds_since(start);
                      std::ostringstream ss;
                      ss << "max |diff| " << worst << ", " << elapsed << " s";
                      detail = ss.str();
                      return worst <= 1e-12 && elapsed < 10.0;
                  });

    // ------------------------------------------------------------------ 2
    acc.criterion(2, "leaf weights match a 1-D numeric minimizer (1000 sets, tol 1e-9)",
                  [&](std::string& detail) {
                      std::mt19937_64 rng(77);
                      double worst = 0.0;
                      for (int trial = 0; trial < 1000; ++trial) {
                          const int n = 1 + static_cast<int>(uniform_below(rng, 8));
                          double grad_sum = 0.0;
                          for (int i = 0; i < n; ++i) grad_sum += uniform_range(rng, -10.0, 10.0);
                          const double lambda = uniform_range(rng, 0.001, 10.0);
                          const double alpha = uniform_range(rng, 0.001, 10.0);
                          const double closed = optimal_leaf_weight(grad_sum, n, lambda, alpha);
                          const double refined =
                              oracles::refine_leaf_weight(grad_sum, n, lambda, alpha);
                          worst = std::max(worst, std::abs(closed - refined));
                      }
                      std::ostringstream ss;
                      ss << "max |closed - refined| " << worst;
                      detail = ss.str();
                      return worst <= 1e-9;
                  });

    // ------------------------------------------------------------------ 3
    acc.criterion(3, "depth<=2 trees equal the exhaustive split search (50 datasets)",
                  [&](std::string& detail) {
                      int matched = 0;
                      std::mt19937_64 rng(55);
                      for (int trial = 0; trial < 50; ++trial) {
                          FeatureTable t;
                          for (int i = 0; i < 20; ++i) {
                              FeatureRow row;
                              row.col = i;
                              row.row = 0;
                              for (double& f : row.features) f = uniform_range(rng, -4.0, 4.0);
                              row.features[1] = row.features[1] > 0.0 ? 1.0 : 0.0;
                              row.target = uniform_range(rng, -6.0, 6.0);
                              t.rows.push_back(row);
                          }
                          GbtParams p;
                          p.n_estimators = 1;
                          p.learning_rate = 1.0;
                          p.max_depth = trial % 2 ? 2 : 1;
                          p.reg_lambda = trial % 3 == 0 ? 0.0 : uniform_range(rng, 0.001, 10.0);
                          p.reg_alpha = trial % 4 == 0 ? uniform_range(rng, 0.001, 10.0) : 0.0;
                          p.gamma = trial % 5 == 0 ? uniform_range(rng, 0.0, 0.5) : 0.0;
                          const TrainResult result = train(t, {}, p);

                          double base = 0.0;
                          for (const auto& row : t.rows) base += row.target;
                          base /= static_cast<double>(t.size());
                          std::vector<std::array<double, kNumFeatures>> x;
                          std::vector<double> grad;
                          for (const auto& row : t.rows) {
                              x.push_back(row.features);
                              grad.push_back(base - row.target);
                          }
                          double g_total = 0.0;
                          for (double g : grad) g_total += g;
                          oracles::BfSamples samples{&x, {}, &grad};
                          for (int i = 0; i < 20; ++i) samples.rows.push_back(i);
                          const auto ref =
                              oracles::bf_build(samples, g_total, 20.0, p, 0);
                          if (oracles::bf_equals(*ref, result.model.trees.at(0), 0)) ++matched;
                      }
                      detail = std::to_string(matched) + "/50 exact";
                      return matched == 50;
                  });

    // ------------------------------------------------------------------ 4
    std::string crit4_model_bytes;
    FeatureTable crit4_table;
    acc.criterion(4, "train RMSE non-increasing over 200 iterations (no subsampling)",
                  [&](std::string& detail) {
                      const SceneDataset data = scene_dataset(321, 96);
                      crit4_table = data.table;
                      GbtParams p;
                      p.n_estimators = 200;
                      p.subsample = 1.0;
                      p.colsample_bytree = 1.0;
                      p.seed = 321;
                      const TrainResult result = train(crit4_table, {}, p);
                      if (result.trace.size() != 200) {
                          detail = "trace length " + std::to_string(result.trace.size());
                          return false;
                      }
                      bool monotone = true;
                      for (std::size_t i = 1; i < result.trace.size(); ++i) {
                          if (result.trace.points[i].train_rmse >
                              result.trace.points[i - 1].train_rmse) {
                              monotone = false;
                          }
                      }
                      TempDir dir;
                      save_model(result.model, dir.path() / "m.txt");
                      crit4_model_bytes = file_bytes(dir.path() / "m.txt");
                      std::ostringstream ss;
                      ss << "rmse " << result.trace.points.front().train_rmse << " -> "
                         << result.trace.points.back().train_rmse;
                      detail = ss.str();
                      return monotone;
                  });

    // ------------------------------------------------------------------ 5
    acc.criterion(5, "early stopping halts 10 rounds past a scripted minimum at k",
                  [&](std::string& detail) {
                      const FeatureTable t = [&] {
                          SceneDataset d = scene_dataset(5, 32);
                          return d.table;
                      }();
                      const SplitResult parts = split(t, {0.2, 0.2, 5});
                      const std::size_t k = 37;
                      GbtParams p;
                      p.n_estimators = 500;
                      p.early_stopping_rounds = 10;
                      TrainCallbacks callbacks;
                      callbacks.override_val_rmse = [&](std::size_t iteration, double) {
                          return iteration <= k ? 200.0 - static_cast<double>(iteration)
                                                : 200.0 + static_cast<double>(iteration);
                      };
                      const TrainResult result = train(parts.train, parts.val, p, {}, &callbacks);
                      std::ostringstream ss;
                      ss << "stopped at " << result.trace.size() << ", best_iteration "
                         << result.model.best_iteration;
                      detail = ss.str();
                      return result.trace.size() == k + 10 && result.model.best_iteration == k;
                  });

    // ------------------------------------------------------------------ 6
    TempDir e2e_dir;
    EndToEnd first_run;
    std::vector<SeedOutcome> outcomes(20);
    acc.criterion(
        6,
        "synthetic end-to-end: default model improves >= 40%; tuned <= default in >= 14/20 "
        "seeds; < 5 min",
        [&](std::string& detail) {
            const auto start = std::chrono::steady_clock::now();
            first_run = run_end_to_end_512(e2e_dir.path() / "a");

            const unsigned workers =
                std::max(2u, std::min(8u, std::thread::hardware_concurrency()));
            std::vector<std::future<SeedOutcome>> futures;
            for (std::uint64_t seed = 0; seed < 20; ++seed) {
                futures.push_back(std::async(std::launch::async, [seed] {
                    return run_seed_comparison(seed, seed == 0);
                }));
                // Crude throttle: cap in-flight work at the worker budget.
                if (futures.size() % workers == 0) {
                    futures[futures.size() - workers].wait();
                }
            }
            int tuned_wins = 0;
            for (std::uint64_t seed = 0; seed < 20; ++seed) {
                outcomes[seed] = futures[seed].get();
                if (outcomes[seed].tuned_test_rmse <= outcomes[seed].default_test_rmse) {
                    ++tuned_wins;
                }
            }
            const double elapsed = seconds_since(start);
            std::ostringstream ss;
            ss << "improvement " << first_run.improvement_pct << "%, tuned<=default in "
               << tuned_wins << "/20, " << elapsed << " s";
            detail = ss.str();
            return first_run.improvement_pct >= 40.0 && tuned_wins >= 14 && elapsed < 300.0;
        });

    // ------------------------------------------------------------------ 7
    acc.criterion(7, "improvement-factor arithmetic reproduces the published bands",
                  [&](std::string& detail) {
                      const double copernicus = improvement_factor(1.859, 0.877);
                      const double aw3d = improvement_factor(3.628, 0.987);
                      std::ostringstream ss;
                      ss << "(1.859 -> 0.877) = " << copernicus << "%, (3.628 -> 0.987) = "
                         << aw3d << "%";
                      detail = ss.str();
                      return std::abs(copernicus - 52.8) < 0.05 && copernicus >= 46.0 &&
                             copernicus <= 53.0 && std::abs(aw3d - 72.8) < 0.05 && aw3d >= 72.0 &&
                             aw3d <= 73.0;
                  });

    // ------------------------------------------------------------------ 8
    acc.criterion(8, "Bayesian tuner beats random search on (x-0.3)^2 (median of 20 paired seeds)",
                  [&](std::string& detail) {
                      SearchSpace space;
                      space.params = {{"x", 0.0, 1.0, ParamScale::linear, ParamKind::real}};
                      std::vector<double> bo_err, rs_err;
                      for (std::uint64_t seed = 0; seed < 20; ++seed) {
                          const auto result = tune(
                              space,
                              [](const std::vector<double>& x) {
                                  return ObjectiveValue{(x[0] - 0.3) * (x[0] - 0.3), 0};
                              },
                              30, 8, seed);
                          bo_err.push_back(std::abs(result.best_point[0] - 0.3));

                          std::mt19937_64 rng(seed);
                          double best_v = std::numeric_limits<double>::infinity();
                          double best_x = 0.0;
                          for (int i = 0; i < 30; ++i) {
                              const double x = uniform01(rng);
                              const double v = (x - 0.3) * (x - 0.3);
                              if (v < best_v) {
                                  best_v = v;
                                  best_x = x;
                              }
                          }
                          rs_err.push_back(std::abs(best_x - 0.3));
                      }
                      auto median = [](std::vector<double> v) {
                          std::sort(v.begin(), v.end());
                          return 0.5 * (v[9] + v[10]);
                      };
                      const double bo = median(bo_err), rs = median(rs_err);
                      std::ostringstream ss;
                      ss << "median |x-0.3|: tuner " << bo << " vs random " << rs;
                      detail = ss.str();
                      return bo < rs;
                  });

    // ------------------------------------------------------------------ 9
    acc.criterion(9, "determinism: repeating criteria 4 and 6 reproduces files bit-for-bit",
                  [&](std::string& detail) {
                      GbtParams p;
                      p.n_estimators = 200;
                      p.seed = 321;
                      const TrainResult again = train(crit4_table, {}, p);
                      TempDir dir;
                      save_model(again.model, dir.path() / "m.txt");
                      const bool crit4_same = file_bytes(dir.path() / "m.txt") == crit4_model_bytes;

                      const EndToEnd second = run_end_to_end_512(e2e_dir.path() / "b");
                      const bool e2e_same = second.model_bytes == first_run.model_bytes &&
                                            second.corrected_bytes == first_run.corrected_bytes &&
                                            second.error_map_bytes == first_run.error_map_bytes;

                      const SeedOutcome seed0 = run_seed_comparison(0, true);
                      const bool tuned_same =
                          seed0.tuned_model_bytes == outcomes[0].tuned_model_bytes;

                      std::ostringstream ss;
                      ss << "criterion-4 model " << (crit4_same ? "identical" : "DIFFERS")
                         << "; 512 run artifacts " << (e2e_same ? "identical" : "DIFFER")
                         << "; tuned seed-0 model " << (tuned_same ? "identical" : "DIFFERS");
                      detail = ss.str();
                      return crit4_same && e2e_same && tuned_same;
                  });

    // ------------------------------------------------------------------ 10
    acc.criterion(10, "importance: urban+forest in top-3 weights >= 18/20; weights sum to splits",
                  [&](std::string& detail) {
                      int hits = 0;
                      bool sums_ok = true;
                      for (const SeedOutcome& out : outcomes) {
                          const bool has_urban =
                              std::find(out.importance_top3.begin(), out.importance_top3.end(),
                                        "urban") != out.importance_top3.end();
                          const bool has_forest =
                              std::find(out.importance_top3.begin(), out.importance_top3.end(),
                                        "forest_pct") != out.importance_top3.end();
                          if (has_urban && has_forest) ++hits;
                          sums_ok = sums_ok && out.importance_sum_matches;
                      }
                      detail = std::to_string(hits) + "/20 seeds, weight sums " +
                               (sums_ok ? "exact" : "MISMATCH");
                      return hits >= 18 && sums_ok;
                  });

    std::printf("acceptance: %d/10 criteria passed in %.1f s\n", 10 - acc.failures,
                seconds_since(suite_start));
    return acc.failures == 0 ? 0 : 1;
}
