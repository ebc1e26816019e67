#include "demboost/gbtree.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "demboost/errors.hpp"
#include "demboost/rng.hpp"
#include "demboost/textio.hpp"

namespace demboost {

void GbtParams::validate() const {
    if (n_estimators < 1) throw std::invalid_argument("n_estimators must be >= 1");
    if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
        throw std::invalid_argument("learning_rate must lie in (0, 1]");
    }
    if (reg_alpha < 0.0 || reg_lambda < 0.0 || gamma < 0.0 || min_child_weight < 0.0) {
        throw std::invalid_argument("regularization parameters must be >= 0");
    }
    if (!(subsample > 0.0 && subsample <= 1.0)) {
        throw std::invalid_argument("subsample must lie in (0, 1]");
    }
    if (!(colsample_bytree > 0.0 && colsample_bytree <= 1.0)) {
        throw std::invalid_argument("colsample_bytree must lie in (0, 1]");
    }
    if (early_stopping_rounds < 0) {
        throw std::invalid_argument("early_stopping_rounds must be >= 0");
    }
}

double optimal_leaf_weight(double grad_sum, double hess_sum, double reg_lambda, double reg_alpha) {
    const double denom = hess_sum + reg_lambda;
    if (denom <= 0.0) return 0.0;
    if (grad_sum > reg_alpha) return -(grad_sum - reg_alpha) / denom;
    if (grad_sum < -reg_alpha) return -(grad_sum + reg_alpha) / denom;
    return 0.0;
}

double Tree::predict(std::span<const double> x) const {
    std::int32_t node = 0;
    while (!nodes[static_cast<std::size_t>(node)].is_leaf()) {
        const TreeNode& n = nodes[static_cast<std::size_t>(node)];
        node = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(node)].value;
}

double BoostModel::predict(std::span<const double> features) const {
    if (features.size() != feature_names.size()) {
        throw std::invalid_argument("predict expects " + std::to_string(feature_names.size()) +
                                    " features, got " + std::to_string(features.size()));
    }
    double sum = 0.0;
    for (std::size_t t = 0; t < best_iteration && t < trees.size(); ++t) {
        sum += trees[t].predict(features);
    }
    return base_score + params.learning_rate * sum;
}

std::vector<double> BoostModel::predict_batch(const FeatureTable& table) const {
    std::vector<double> out;
    out.reserve(table.size());
    for (const FeatureRow& row : table.rows) {
        out.push_back(predict(row.features));
    }
    return out;
}

bool EarlyStopper::update(double val_rmse) {
    ++seen_;
    if (val_rmse < best_value_) {
        best_value_ = val_rmse;
        best_iteration_ = seen_;
        stale_ = 0;
        return false;
    }
    ++stale_;
    return rounds_ > 0 && stale_ >= rounds_;
}

namespace {

double mean_squared_residual(std::span<const double> pred, std::span<const double> target) {
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double r = pred[i] - target[i];
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(pred.size()));
}

struct SplitCandidate {
    double gain = 0.0;
    std::int32_t feature = -1;
    double threshold = 0.0;
    double grad_left = 0.0;
    double hess_left = 0.0;

    bool valid() const { return feature >= 0; }

    // Deterministic preference: larger gain, then lower feature index, then
    // smaller threshold. Makes the result independent of scan scheduling.
    bool beats(const SplitCandidate& other) const {
        if (gain != other.gain) return gain > other.gain;
        if (feature != other.feature) return feature < other.feature;
        return threshold < other.threshold;
    }
};

// Shared state for growing one tree level-by-level over presorted columns.
class TreeBuilder {
public:
    TreeBuilder(const std::vector<std::vector<double>>& cols,
                const std::vector<std::vector<std::uint32_t>>& sorted_idx,
                const GbtParams& params, const TrainOptions& options)
        : cols_(cols), sorted_(sorted_idx), params_(params), options_(options),
          n_rows_(cols.empty() ? 0 : cols[0].size()) {
        if (options_.histogram_bins > 0) build_histogram_cuts();
    }

    Tree build(std::span<const double> grad, const std::vector<char>& in_sample,
               std::span<const std::int32_t> features, std::vector<std::int32_t>& pos) {
        Tree tree;
        tree.nodes.emplace_back();
        std::fill(pos.begin(), pos.end(), 0);

        double g0 = 0.0, h0 = 0.0;
        for (std::size_t i = 0; i < n_rows_; ++i) {
            if (in_sample[i]) {
                g0 += grad[i];
                h0 += 1.0;
            }
        }
        node_grad_.assign(1, g0);
        node_hess_.assign(1, h0);

        std::int32_t level_begin = 0;
        std::int32_t level_end = 1;
        for (int depth = 0; depth < params_.max_depth && level_begin < level_end; ++depth) {
            const std::size_t width = static_cast<std::size_t>(level_end - level_begin);
            std::vector<SplitCandidate> best(width);
            if (options_.histogram_bins > 0) {
                scan_level_histogram(grad, in_sample, features, pos, level_begin, level_end, best);
            } else {
                scan_level_exact(grad, in_sample, features, pos, level_begin, level_end, best);
            }

            const std::int32_t next_begin = static_cast<std::int32_t>(tree.nodes.size());
            for (std::size_t k = 0; k < width; ++k) {
                const std::int32_t nd = level_begin + static_cast<std::int32_t>(k);
                if (!best[k].valid()) {
                    finalize_leaf(tree, nd);
                    continue;
                }
                const std::int32_t left = static_cast<std::int32_t>(tree.nodes.size());
                tree.nodes.emplace_back();
                const std::int32_t right = static_cast<std::int32_t>(tree.nodes.size());
                tree.nodes.emplace_back();
                // Re-acquire the reference: the two pushes may reallocate.
                TreeNode& node = tree.nodes[static_cast<std::size_t>(nd)];
                node.feature = best[k].feature;
                node.threshold = best[k].threshold;
                node.gain = best[k].gain;
                node.left = left;
                node.right = right;
                node_grad_.push_back(best[k].grad_left);
                node_hess_.push_back(best[k].hess_left);
                node_grad_.push_back(node_grad_[static_cast<std::size_t>(nd)] - best[k].grad_left);
                node_hess_.push_back(node_hess_[static_cast<std::size_t>(nd)] - best[k].hess_left);
            }
            const std::int32_t next_end = static_cast<std::int32_t>(tree.nodes.size());

            // Route every row sitting at a node that actually split.
            for (std::size_t i = 0; i < n_rows_; ++i) {
                const std::int32_t nd = pos[i];
                if (nd < level_begin || nd >= level_end) continue;
                const TreeNode& node = tree.nodes[static_cast<std::size_t>(nd)];
                if (node.is_leaf()) continue;
                const double v = cols_[static_cast<std::size_t>(node.feature)][i];
                pos[i] = v < node.threshold ? node.left : node.right;
            }

            level_begin = next_begin;
            level_end = next_end;
        }

        // Depth limit reached: whatever is still open becomes a leaf.
        for (std::int32_t nd = level_begin; nd < level_end; ++nd) {
            finalize_leaf(tree, nd);
        }
        return tree;
    }

private:
    struct Scanner {
        double grad = 0.0;
        double hess = 0.0;
        double last_value = 0.0;
        bool started = false;
    };

    void finalize_leaf(Tree& tree, std::int32_t nd) {
        tree.nodes[static_cast<std::size_t>(nd)].value =
            optimal_leaf_weight(node_grad_[static_cast<std::size_t>(nd)],
                                node_hess_[static_cast<std::size_t>(nd)], params_.reg_lambda,
                                params_.reg_alpha);
    }

    void consider(SplitCandidate& best, std::int32_t nd, std::int32_t feature, double threshold,
                  double grad_left, double hess_left) const {
        const double hess_right = node_hess_[static_cast<std::size_t>(nd)] - hess_left;
        if (hess_left < params_.min_child_weight || hess_right < params_.min_child_weight) return;
        const double grad_total = node_grad_[static_cast<std::size_t>(nd)];
        const double hess_total = node_hess_[static_cast<std::size_t>(nd)];
        const double grad_right = grad_total - grad_left;
        const double gain = 0.5 * (grad_left * grad_left / (hess_left + params_.reg_lambda) +
                                   grad_right * grad_right / (hess_right + params_.reg_lambda) -
                                   grad_total * grad_total / (hess_total + params_.reg_lambda)) -
                            params_.gamma;
        if (gain <= 0.0) return;
        SplitCandidate cand{gain, feature, threshold, grad_left, hess_left};
        if (!best.valid() || cand.beats(best)) best = cand;
    }

    // One pass over each presorted column evaluates every candidate midpoint
    // for every node of the level simultaneously.
    void scan_level_exact(std::span<const double> grad, const std::vector<char>& in_sample,
                          std::span<const std::int32_t> features,
                          std::span<const std::int32_t> pos, std::int32_t level_begin,
                          std::int32_t level_end, std::vector<SplitCandidate>& best) {
        const std::size_t width = static_cast<std::size_t>(level_end - level_begin);
        std::vector<Scanner> scan(width);
        for (std::int32_t f : features) {
            std::fill(scan.begin(), scan.end(), Scanner{});
            const std::vector<double>& col = cols_[static_cast<std::size_t>(f)];
            for (const std::uint32_t i : sorted_[static_cast<std::size_t>(f)]) {
                const std::int32_t nd = pos[i];
                if (nd < level_begin || nd >= level_end || !in_sample[i]) continue;
                Scanner& s = scan[static_cast<std::size_t>(nd - level_begin)];
                const double v = col[i];
                if (s.started && v > s.last_value) {
                    const double threshold = s.last_value + 0.5 * (v - s.last_value);
                    // Adjacent representable values can collapse the midpoint
                    // onto the left value; such a threshold would misroute.
                    if (threshold > s.last_value) {
                        consider(best[static_cast<std::size_t>(nd - level_begin)], nd, f,
                                 threshold, s.grad, s.hess);
                    }
                }
                s.grad += grad[i];
                s.hess += 1.0;
                s.last_value = v;
                s.started = true;
            }
        }
    }

    void build_histogram_cuts() {
        const int bins = options_.histogram_bins;
        cuts_.resize(cols_.size());
        bin_of_.resize(cols_.size());
        for (std::size_t f = 0; f < cols_.size(); ++f) {
            const auto& order = sorted_[f];
            std::vector<double>& cuts = cuts_[f];
            for (int b = 1; b < bins; ++b) {
                const std::size_t q = static_cast<std::size_t>(
                    static_cast<double>(b) * static_cast<double>(n_rows_) / bins);
                if (q == 0 || q >= n_rows_) continue;
                const double v = cols_[f][order[q]];
                if (cuts.empty() || v > cuts.back()) cuts.push_back(v);
            }
            bin_of_[f].resize(n_rows_);
            for (std::size_t i = 0; i < n_rows_; ++i) {
                const auto it = std::upper_bound(cuts.begin(), cuts.end(), cols_[f][i]);
                bin_of_[f][i] = static_cast<std::uint16_t>(it - cuts.begin());
            }
        }
    }

    // Approximate variant: candidates are the per-feature quantile cuts, and
    // split thresholds land on data values instead of midpoints.
    void scan_level_histogram(std::span<const double> grad, const std::vector<char>& in_sample,
                              std::span<const std::int32_t> features,
                              std::span<const std::int32_t> pos, std::int32_t level_begin,
                              std::int32_t level_end, std::vector<SplitCandidate>& best) {
        const std::size_t width = static_cast<std::size_t>(level_end - level_begin);
        for (std::int32_t f : features) {
            const std::vector<double>& cuts = cuts_[static_cast<std::size_t>(f)];
            if (cuts.empty()) continue;
            const std::size_t n_bins = cuts.size() + 1;
            hist_grad_.assign(width * n_bins, 0.0);
            hist_count_.assign(width * n_bins, 0.0);
            for (std::size_t i = 0; i < n_rows_; ++i) {
                const std::int32_t nd = pos[i];
                if (nd < level_begin || nd >= level_end || !in_sample[i]) continue;
                const std::size_t slot = static_cast<std::size_t>(nd - level_begin) * n_bins +
                                         bin_of_[static_cast<std::size_t>(f)][i];
                hist_grad_[slot] += grad[i];
                hist_count_[slot] += 1.0;
            }
            for (std::size_t k = 0; k < width; ++k) {
                const double node_total =
                    node_hess_[static_cast<std::size_t>(level_begin) + k];
                double g_acc = 0.0, h_acc = 0.0;
                for (std::size_t b = 0; b + 1 < n_bins; ++b) {
                    g_acc += hist_grad_[k * n_bins + b];
                    h_acc += hist_count_[k * n_bins + b];
                    if (h_acc == 0.0) continue;
                    if (h_acc == node_total) break;  // right side would be empty
                    consider(best[k], level_begin + static_cast<std::int32_t>(k), f, cuts[b],
                             g_acc, h_acc);
                }
            }
        }
    }

    const std::vector<std::vector<double>>& cols_;
    const std::vector<std::vector<std::uint32_t>>& sorted_;
    const GbtParams& params_;
    const TrainOptions& options_;
    std::size_t n_rows_;
    std::vector<double> node_grad_;
    std::vector<double> node_hess_;
    std::vector<std::vector<double>> cuts_;
    std::vector<std::vector<std::uint16_t>> bin_of_;
    std::vector<double> hist_grad_;
    std::vector<double> hist_count_;
};

}  // namespace

TrainResult train(const FeatureTable& train_table, const FeatureTable& val_table,
                  const GbtParams& params, const TrainOptions& options,
                  const TrainCallbacks* callbacks) {
    params.validate();
    if (train_table.empty()) throw EmptyDatasetError("training table is empty");
    const bool early_stopping = params.early_stopping_rounds > 0;
    if (early_stopping && val_table.empty()) {
        throw Error("early stopping requires a non-empty validation set");
    }

    const std::size_t n = train_table.size();
    std::vector<double> target(n);
    for (std::size_t i = 0; i < n; ++i) {
        target[i] = train_table.rows[i].target;
        if (!std::isfinite(target[i])) throw Error("non-finite training target");
    }

    // Column-major copy plus one global presort per feature; node partitions
    // reuse the global order for the rest of training.
    std::vector<std::vector<double>> cols(kNumFeatures, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t f = 0; f < kNumFeatures; ++f) {
            cols[f][i] = train_table.rows[i].features[f];
        }
    }
    std::vector<std::vector<std::uint32_t>> sorted_idx(kNumFeatures);
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
        auto& order = sorted_idx[f];
        order.resize(n);
        std::iota(order.begin(), order.end(), 0u);
        std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            if (cols[f][a] != cols[f][b]) return cols[f][a] < cols[f][b];
            return a < b;
        });
    }

    BoostModel model;
    model.params = params;
    model.feature_names.assign(feature_names().begin(), feature_names().end());
    model.base_score = std::accumulate(target.begin(), target.end(), 0.0) / static_cast<double>(n);

    std::vector<double> pred(n, model.base_score);
    std::vector<double> grad(n);
    std::vector<std::int32_t> pos(n, 0);

    std::vector<double> val_target, val_pred;
    val_target.reserve(val_table.size());
    for (const FeatureRow& row : val_table.rows) val_target.push_back(row.target);
    val_pred.assign(val_table.size(), model.base_score);

    const auto n_sampled =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n * params.subsample)));
    const auto n_feat_sampled = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(kNumFeatures * params.colsample_bytree)));

    std::mt19937_64 rng(params.seed);
    std::vector<std::uint32_t> row_pool(n);
    std::iota(row_pool.begin(), row_pool.end(), 0u);
    std::vector<std::int32_t> feat_pool(kNumFeatures);
    std::iota(feat_pool.begin(), feat_pool.end(), 0);

    TreeBuilder builder(cols, sorted_idx, params, options);
    TrainingTrace trace;
    EarlyStopper stopper(params.early_stopping_rounds);
    std::vector<char> in_sample(n, 1);
    std::vector<std::int32_t> tree_features(feat_pool.begin(), feat_pool.end());

    for (int iter = 1; iter <= params.n_estimators; ++iter) {
        for (std::size_t i = 0; i < n; ++i) grad[i] = pred[i] - target[i];

        if (n_sampled < n) {
            std::fill(in_sample.begin(), in_sample.end(), char{0});
            for (std::size_t i = 0; i < n_sampled; ++i) {
                const std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, n - i));
                std::swap(row_pool[i], row_pool[j]);
                in_sample[row_pool[i]] = 1;
            }
        }
        if (n_feat_sampled < kNumFeatures) {
            for (std::size_t i = 0; i < n_feat_sampled; ++i) {
                const std::size_t j =
                    i + static_cast<std::size_t>(uniform_below(rng, kNumFeatures - i));
                std::swap(feat_pool[i], feat_pool[j]);
            }
            tree_features.assign(feat_pool.begin(), feat_pool.begin() + n_feat_sampled);
            std::sort(tree_features.begin(), tree_features.end());
        }

        Tree tree = builder.build(grad, in_sample, tree_features, pos);

        for (std::size_t i = 0; i < n; ++i) {
            pred[i] += params.learning_rate * tree.nodes[static_cast<std::size_t>(pos[i])].value;
        }
        for (std::size_t j = 0; j < val_pred.size(); ++j) {
            val_pred[j] += params.learning_rate * tree.predict(val_table.rows[j].features);
        }

        LearningPoint point;
        point.train_rmse = mean_squared_residual(pred, target);
        if (!val_pred.empty()) point.val_rmse = mean_squared_residual(val_pred, val_target);
        if (callbacks && callbacks->override_val_rmse) {
            point.val_rmse = callbacks->override_val_rmse(static_cast<std::size_t>(iter), point.val_rmse);
        }
        trace.points.push_back(point);
        model.trees.push_back(std::move(tree));

        if (early_stopping && stopper.update(point.val_rmse)) break;
    }

    model.best_iteration = early_stopping ? stopper.best_iteration() : model.trees.size();
    return {std::move(model), std::move(trace)};
}

std::map<std::string, double> feature_importance(const BoostModel& model, ImportanceKind kind) {
    std::map<std::string, double> scores;
    for (const std::string& name : model.feature_names) scores[name] = 0.0;
    for (std::size_t t = 0; t < model.best_iteration && t < model.trees.size(); ++t) {
        for (const TreeNode& node : model.trees[t].nodes) {
            if (node.is_leaf()) continue;
            const std::string& name = model.feature_names[static_cast<std::size_t>(node.feature)];
            scores[name] += kind == ImportanceKind::weight ? 1.0 : node.gain;
        }
    }
    return scores;
}

namespace {

constexpr const char* kModelMagic = "demboost_model";
constexpr int kModelSchemaVersion = 1;

void write_node_preorder(std::ostream& out, const Tree& tree, std::int32_t idx) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(idx)];
    if (node.is_leaf()) {
        out << "L " << format_double(node.value) << "\n";
        return;
    }
    out << "S " << node.feature << ' ' << format_double(node.threshold) << ' '
        << format_double(node.gain) << "\n";
    write_node_preorder(out, tree, node.left);
    write_node_preorder(out, tree, node.right);
}

std::int32_t read_node_preorder(std::istream& in, Tree& tree, long& line_no) {
    std::string line;
    if (!std::getline(in, line)) throw Error("model file truncated inside a tree");
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    const std::int32_t idx = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (tag == "L") {
        std::string value;
        if (!(ls >> value)) throw ParseError("leaf without value", line_no);
        tree.nodes[static_cast<std::size_t>(idx)].value = parse_double(value, line_no);
        return idx;
    }
    if (tag != "S") throw ParseError("expected node tag 'S' or 'L'", line_no);
    std::string feature, threshold, gain;
    if (!(ls >> feature >> threshold >> gain)) throw ParseError("malformed split node", line_no);
    const auto f = static_cast<std::int32_t>(parse_int(feature, line_no));
    const double thr = parse_double(threshold, line_no);
    const double g = parse_double(gain, line_no);
    const std::int32_t left = read_node_preorder(in, tree, line_no);
    const std::int32_t right = read_node_preorder(in, tree, line_no);
    TreeNode& node = tree.nodes[static_cast<std::size_t>(idx)];
    node.feature = f;
    node.threshold = thr;
    node.gain = g;
    node.left = left;
    node.right = right;
    return idx;
}

}  // namespace

void save_model(const BoostModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open model file for writing: " + path.string());
    out << kModelMagic << ' ' << kModelSchemaVersion << "\n";
    out << "base_score " << format_double(model.base_score) << "\n";
    out << "best_iteration " << model.best_iteration << "\n";
    out << "feature_names " << model.feature_names.size();
    for (const std::string& name : model.feature_names) {
        if (name.find_first_of(" \t\n") != std::string::npos) {
            throw Error("feature names must not contain whitespace");
        }
        out << ' ' << name;
    }
    out << "\n";
    const GbtParams& p = model.params;
    out << "params"
        << " n_estimators " << p.n_estimators << " max_depth " << p.max_depth << " learning_rate "
        << format_double(p.learning_rate) << " reg_alpha " << format_double(p.reg_alpha)
        << " reg_lambda " << format_double(p.reg_lambda) << " gamma " << format_double(p.gamma)
        << " min_child_weight " << format_double(p.min_child_weight) << " subsample "
        << format_double(p.subsample) << " colsample_bytree " << format_double(p.colsample_bytree)
        << " early_stopping_rounds " << p.early_stopping_rounds << " seed " << p.seed << "\n";
    out << "trees " << model.trees.size() << "\n";
    for (const Tree& tree : model.trees) {
        out << "tree " << tree.nodes.size() << "\n";
        write_node_preorder(out, tree, 0);
    }
    out << "end\n";
    if (!out) throw IoError("write failed: " + path.string());
}

BoostModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file: " + path.string());

    long line_no = 0;
    std::string line;
    auto next_line = [&]() -> std::istringstream {
        if (!std::getline(in, line)) throw Error("model file truncated");
        ++line_no;
        return std::istringstream(line);
    };

    {
        auto ls = next_line();
        std::string magic;
        int version = -1;
        ls >> magic >> version;
        if (magic != kModelMagic || version != kModelSchemaVersion) {
            throw Error("unsupported model schema: expected '" + std::string(kModelMagic) + " " +
                        std::to_string(kModelSchemaVersion) + "'");
        }
    }

    BoostModel model;
    {
        auto ls = next_line();
        std::string key, value;
        if (!(ls >> key >> value) || key != "base_score") throw ParseError("expected base_score", line_no);
        model.base_score = parse_double(value, line_no);
    }
    {
        auto ls = next_line();
        std::string key, value;
        if (!(ls >> key >> value) || key != "best_iteration") {
            throw ParseError("expected best_iteration", line_no);
        }
        model.best_iteration = static_cast<std::size_t>(parse_int(value, line_no));
    }
    {
        auto ls = next_line();
        std::string key;
        std::size_t count = 0;
        if (!(ls >> key >> count) || key != "feature_names") {
            throw ParseError("expected feature_names", line_no);
        }
        std::string name;
        while (ls >> name) model.feature_names.push_back(name);
        if (model.feature_names.size() != count) {
            throw ParseError("feature name count mismatch", line_no);
        }
    }
    {
        auto ls = next_line();
        std::string key;
        if (!(ls >> key) || key != "params") throw ParseError("expected params", line_no);
        std::string field, value;
        GbtParams& p = model.params;
        while (ls >> field >> value) {
            if (field == "n_estimators") p.n_estimators = static_cast<int>(parse_int(value, line_no));
            else if (field == "max_depth") p.max_depth = static_cast<int>(parse_int(value, line_no));
            else if (field == "learning_rate") p.learning_rate = parse_double(value, line_no);
            else if (field == "reg_alpha") p.reg_alpha = parse_double(value, line_no);
            else if (field == "reg_lambda") p.reg_lambda = parse_double(value, line_no);
            else if (field == "gamma") p.gamma = parse_double(value, line_no);
            else if (field == "min_child_weight") p.min_child_weight = parse_double(value, line_no);
            else if (field == "subsample") p.subsample = parse_double(value, line_no);
            else if (field == "colsample_bytree") p.colsample_bytree = parse_double(value, line_no);
            else if (field == "early_stopping_rounds") p.early_stopping_rounds = static_cast<int>(parse_int(value, line_no));
            else if (field == "seed") p.seed = static_cast<std::uint64_t>(parse_int(value, line_no));
            else throw ParseError("unknown params field '" + field + "'", line_no);
        }
    }

    std::size_t n_trees = 0;
    {
        auto ls = next_line();
        std::string key;
        if (!(ls >> key >> n_trees) || key != "trees") throw ParseError("expected trees count", line_no);
    }
    for (std::size_t t = 0; t < n_trees; ++t) {
        auto ls = next_line();
        std::string key;
        std::size_t n_nodes = 0;
        if (!(ls >> key >> n_nodes) || key != "tree") throw ParseError("expected tree header", line_no);
        Tree tree;
        read_node_preorder(in, tree, line_no);
        if (tree.nodes.size() != n_nodes) throw ParseError("tree node count mismatch", line_no);
        model.trees.push_back(std::move(tree));
    }
    {
        auto ls = next_line();
        std::string key;
        if (!(ls >> key) || key != "end") throw Error("model file truncated (missing end marker)");
    }
    if (model.best_iteration > model.trees.size()) {
        throw Error("best_iteration exceeds stored tree count");
    }
    return model;
}

}  // namespace demboost
