#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "demboost/dataset.hpp"

namespace demboost {

// Boosting hyperparameters. The defaults mirror the stock xgboost regressor
// configuration so an untuned run is a meaningful baseline.
struct GbtParams {
    int n_estimators = 100;
    int max_depth = 6;
    double learning_rate = 0.3;
    double reg_alpha = 0.0;
    double reg_lambda = 1.0;
    double gamma = 0.0;
    double min_child_weight = 1.0;
    double subsample = 1.0;
    double colsample_bytree = 1.0;
    int early_stopping_rounds = 0;  // 0 disables early stopping
    std::uint64_t seed = 0;

    void validate() const;
};

// One node of a regression tree. feature < 0 marks a leaf; children are
// indices into the owning tree's node vector.
struct TreeNode {
    std::int32_t feature = -1;
    double threshold = 0.0;
    double value = 0.0;  // leaf weight
    double gain = 0.0;   // split gain, kept for importance reports
    std::int32_t left = -1;
    std::int32_t right = -1;

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;

    // Routes x down the tree: x[feature] < threshold goes left.
    double predict(std::span<const double> x) const;
};

struct LearningPoint {
    double train_rmse = 0.0;
    double val_rmse = std::numeric_limits<double>::quiet_NaN();
};

// One entry per tree actually built.
struct TrainingTrace {
    std::vector<LearningPoint> points;

    std::size_t size() const { return points.size(); }
};

struct BoostModel {
    double base_score = 0.0;
    std::vector<Tree> trees;
    std::vector<std::string> feature_names;
    GbtParams params;
    std::size_t best_iteration = 0;  // number of trees used for prediction

    // base_score + learning_rate * sum of leaf weights over the first
    // best_iteration trees.
    double predict(std::span<const double> features) const;
    std::vector<double> predict_batch(const FeatureTable& table) const;
};

// Decides when boosting should stop: `update` returns true once the
// validation RMSE has failed to strictly improve for `rounds` consecutive
// iterations. best_iteration() is the tree count at the minimum.
class EarlyStopper {
public:
    explicit EarlyStopper(int rounds) : rounds_(rounds) {}

    bool update(double val_rmse);
    std::size_t best_iteration() const { return best_iteration_; }
    double best_value() const { return best_value_; }

private:
    int rounds_ = 0;
    int stale_ = 0;
    std::size_t seen_ = 0;
    std::size_t best_iteration_ = 0;
    double best_value_ = std::numeric_limits<double>::infinity();
};

struct TrainOptions {
    // 0 = exact greedy split search over all distinct values. A positive
    // count switches to quantile histograms with that many bins per feature,
    // trading exact thresholds for speed on big tables.
    int histogram_bins = 0;
};

// Test/diagnostic seams used by the trainer loop.
struct TrainCallbacks {
    // Replaces the measured validation RMSE fed to early stopping and the
    // trace (the model itself is unaffected).
    std::function<double(std::size_t iteration, double val_rmse)> override_val_rmse;
};

struct TrainResult {
    BoostModel model;
    TrainingTrace trace;
};

// Second-order boosting with squared error: per-sample gradient is the
// current residual (prediction - target) and the hessian is 1. Trees are
// grown level-by-level to max_depth, keeping only splits with positive gain
//   gain = 1/2 * [GL^2/(HL+lambda) + GR^2/(HR+lambda) - G^2/(H+lambda)] - gamma
// and leaves take the L1-softened optimum
//   w = -sign(G) * max(|G| - alpha, 0) / (H + lambda).
TrainResult train(const FeatureTable& train_table, const FeatureTable& val_table,
                  const GbtParams& params, const TrainOptions& options = {},
                  const TrainCallbacks* callbacks = nullptr);

enum class ImportanceKind { weight, gain };

// weight = number of splits per feature (the F-score of importance plots),
// gain = summed split gain. Only the first best_iteration trees count.
std::map<std::string, double> feature_importance(const BoostModel& model, ImportanceKind kind);

void save_model(const BoostModel& model, const std::filesystem::path& path);
BoostModel load_model(const std::filesystem::path& path);

// Closed-form minimizer of G*w + 1/2*(H+lambda)*w^2 + alpha*|w|.
double optimal_leaf_weight(double grad_sum, double hess_sum, double reg_lambda, double reg_alpha);

}  // namespace demboost
