#include "demboost/hypertune.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>

#include "demboost/errors.hpp"
#include "demboost/rng.hpp"
#include "demboost/textio.hpp"

namespace demboost {

namespace {

constexpr double kSqrt5 = 2.2360679774997896964091736687747;
constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440084436210485); }
double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

constexpr std::array<int, 16> kPrimes = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

double radical_inverse(std::uint64_t index, int base) {
    double inv_base = 1.0 / base;
    double factor = inv_base;
    double value = 0.0;
    while (index > 0) {
        value += static_cast<double>(index % static_cast<std::uint64_t>(base)) * factor;
        index /= static_cast<std::uint64_t>(base);
        factor *= inv_base;
    }
    return value;
}

// Halton sequence with a per-dimension random shift (Cranley-Patterson
// rotation) so different seeds explore different but equally uniform sets.
class HaltonStream {
public:
    HaltonStream(std::size_t dims, std::mt19937_64& rng) : shifts_(dims) {
        if (dims > kPrimes.size()) throw std::invalid_argument("search space has too many dimensions");
        for (double& s : shifts_) s = uniform01(rng);
    }

    std::vector<double> next() {
        ++index_;
        std::vector<double> point(shifts_.size());
        for (std::size_t d = 0; d < shifts_.size(); ++d) {
            double v = radical_inverse(index_, kPrimes[d]) + shifts_[d];
            if (v >= 1.0) v -= 1.0;
            point[d] = v;
        }
        return point;
    }

private:
    std::vector<double> shifts_;
    std::uint64_t index_ = 0;
};

}  // namespace

void SearchSpace::validate() const {
    if (params.empty()) throw std::invalid_argument("search space is empty");
    for (const ParamRange& p : params) {
        if (!(p.lower < p.upper)) {
            throw std::invalid_argument("parameter '" + p.name + "' needs lower < upper");
        }
        if (p.scale == ParamScale::log && p.lower <= 0.0) {
            throw std::invalid_argument("parameter '" + p.name + "' is log-scaled and needs lower > 0");
        }
    }
}

std::vector<double> SearchSpace::to_physical(std::span<const double> unit) const {
    if (unit.size() != params.size()) throw std::invalid_argument("unit point has wrong dimension");
    std::vector<double> out(params.size());
    for (std::size_t d = 0; d < params.size(); ++d) {
        const ParamRange& p = params[d];
        double v;
        if (p.scale == ParamScale::log) {
            const double lo = std::log(p.lower), hi = std::log(p.upper);
            v = std::exp(lo + unit[d] * (hi - lo));
        } else {
            v = p.lower + unit[d] * (p.upper - p.lower);
        }
        v = std::clamp(v, p.lower, p.upper);
        if (p.kind == ParamKind::integer) v = std::round(v);
        out[d] = v;
    }
    return out;
}

SearchSpace SearchSpace::gbt_default() {
    SearchSpace space;
    space.params = {
        {"n_estimators", 1.0, 2000.0, ParamScale::linear, ParamKind::integer},
        {"max_depth", 1.0, 10.0, ParamScale::linear, ParamKind::integer},
        {"learning_rate", 0.001, 1.0, ParamScale::log, ParamKind::real},
        {"reg_alpha", 0.001, 10.0, ParamScale::log, ParamKind::real},
        {"reg_lambda", 0.001, 10.0, ParamScale::log, ParamKind::real},
        {"subsample", 0.001, 1.0, ParamScale::linear, ParamKind::real},
        {"colsample_bytree", 0.001, 1.0, ParamScale::linear, ParamKind::real},
        {"min_child_weight", 0.001, 10.0, ParamScale::log, ParamKind::real},
        {"gamma", 0.001, 10.0, ParamScale::log, ParamKind::real},
    };
    return space;
}

GbtParams params_from_point(const SearchSpace& space, std::span<const double> physical,
                            const GbtParams& base) {
    if (physical.size() != space.size()) throw std::invalid_argument("point has wrong dimension");
    GbtParams p = base;
    for (std::size_t d = 0; d < space.size(); ++d) {
        const std::string& name = space.params[d].name;
        const double v = physical[d];
        if (name == "n_estimators") p.n_estimators = std::max(1, static_cast<int>(std::llround(v)));
        else if (name == "max_depth") p.max_depth = std::max(1, static_cast<int>(std::llround(v)));
        else if (name == "learning_rate") p.learning_rate = v;
        else if (name == "reg_alpha") p.reg_alpha = v;
        else if (name == "reg_lambda") p.reg_lambda = v;
        else if (name == "subsample") p.subsample = v;
        else if (name == "colsample_bytree") p.colsample_bytree = v;
        else if (name == "min_child_weight") p.min_child_weight = v;
        else if (name == "gamma") p.gamma = v;
        else throw std::invalid_argument("unknown parameter '" + name + "'");
    }
    return p;
}

double expected_improvement(double mu, double sigma, double f_best) {
    if (sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
    const double delta = f_best - mu;
    if (sigma == 0.0) return std::max(delta, 0.0);
    const double z = delta / sigma;
    return std::max(0.0, delta * normal_cdf(z) + sigma * normal_pdf(z));
}

GaussianProcess::GaussianProcess(double length_scale, double nugget)
    : length_scale_(length_scale), nugget_(nugget) {
    if (length_scale <= 0.0) throw std::invalid_argument("length scale must be > 0");
}

double GaussianProcess::kernel(std::span<const double> a, std::span<const double> b) const {
    double sq = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double diff = a[d] - b[d];
        sq += diff * diff;
    }
    const double t = kSqrt5 * std::sqrt(sq) / length_scale_;
    return (1.0 + t + t * t / 3.0) * std::exp(-t);
}

void GaussianProcess::fit(const std::vector<std::vector<double>>& points,
                          const std::vector<double>& values) {
    if (points.size() != values.size() || points.size() < 2) {
        throw std::invalid_argument("gaussian process needs >= 2 points");
    }
    const std::size_t n = points.size();
    points_ = points;

    std::vector<double> k(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double v = kernel(points[i], points[j]);
            if (i == j) v += nugget_;
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }

    // In-place lower Cholesky; the nugget keeps this positive definite for
    // any sane history, so a failure is reported as a numeric error.
    chol_.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = k[i * n + j];
            for (std::size_t m = 0; m < j; ++m) sum -= chol_[i * n + m] * chol_[j * n + m];
            if (i == j) {
                if (sum <= 0.0) throw Error("kernel matrix is numerically singular");
                chol_[i * n + i] = std::sqrt(sum);
            } else {
                chol_[i * n + j] = sum / chol_[j * n + j];
            }
        }
    }

    // alpha = K^-1 y via forward/back substitution.
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = values[i];
        for (std::size_t m = 0; m < i; ++m) sum -= chol_[i * n + m] * z[m];
        z[i] = sum / chol_[i * n + i];
    }
    alpha_.assign(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double sum = z[ii];
        for (std::size_t m = ii + 1; m < n; ++m) sum -= chol_[m * n + ii] * alpha_[m];
        alpha_[ii] = sum / chol_[ii * n + ii];
    }

    double log_det_half = 0.0;
    for (std::size_t i = 0; i < n; ++i) log_det_half += std::log(chol_[i * n + i]);
    double quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) quad += values[i] * alpha_[i];
    log_marginal_likelihood_ = -0.5 * quad - log_det_half - 0.5 * static_cast<double>(n) * kLog2Pi;
}

GaussianProcess::Posterior GaussianProcess::posterior(std::span<const double> x) const {
    const std::size_t n = points_.size();
    if (n == 0) throw Error("gaussian process is not fitted");
    std::vector<double> kstar(n);
    for (std::size_t i = 0; i < n; ++i) kstar[i] = kernel(points_[i], x);

    double mu = 0.0;
    for (std::size_t i = 0; i < n; ++i) mu += kstar[i] * alpha_[i];

    // v = L^-1 k*; var = k(x,x) + nugget - v.v
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = kstar[i];
        for (std::size_t m = 0; m < i; ++m) sum -= chol_[i * n + m] * v[m];
        v[i] = sum / chol_[i * n + i];
    }
    double explained = 0.0;
    for (std::size_t i = 0; i < n; ++i) explained += v[i] * v[i];
    const double var = std::max(0.0, 1.0 + nugget_ - explained);
    return {mu, std::sqrt(var)};
}

namespace {

constexpr std::array<double, 5> kLengthScaleGrid = {0.05, 0.1, 0.2, 0.4, 0.8};
constexpr int kAcquisitionCandidates = 2048;
constexpr int kIncumbentPerturbations = 64;
constexpr double kPerturbationSd = 0.05;

}  // namespace

TuneResult tune(const SearchSpace& space, const VectorObjective& objective, int budget, int n_init,
                std::uint64_t seed) {
    space.validate();
    if (n_init < 2 || budget < n_init) {
        throw std::invalid_argument("tuning requires budget >= n_init >= 2");
    }

    std::mt19937_64 rng(seed);
    HaltonStream halton(space.size(), rng);

    TuneResult result;
    std::vector<std::vector<double>> unit_points;
    int best_index = -1;

    auto evaluate = [&](const std::vector<double>& unit) {
        TrialRecord rec;
        rec.index = static_cast<int>(result.history.size());
        rec.point = space.to_physical(unit);
        try {
            const ObjectiveValue v = objective(rec.point);
            rec.objective = v.objective;
            rec.best_iteration = v.best_iteration;
            if (!std::isfinite(rec.objective)) rec.failed = true;
        } catch (const std::exception&) {
            rec.failed = true;
        }
        if (!rec.failed && rec.objective < result.best_objective) {
            result.best_objective = rec.objective;
            result.best_point = rec.point;
            best_index = rec.index;
        }
        unit_points.push_back(unit);
        result.history.push_back(std::move(rec));
    };

    for (int i = 0; i < n_init; ++i) evaluate(halton.next());

    while (static_cast<int>(result.history.size()) < budget) {
        std::vector<std::vector<double>> x;
        std::vector<double> y;
        for (std::size_t i = 0; i < result.history.size(); ++i) {
            if (result.history[i].failed) continue;
            x.push_back(unit_points[i]);
            y.push_back(result.history[i].objective);
        }
        if (x.size() < 2) {
            evaluate(halton.next());
            continue;
        }

        const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
        double var = 0.0;
        for (double v : y) var += (v - mean) * (v - mean);
        const double sd = std::max(std::sqrt(var / static_cast<double>(y.size())), 1e-12);
        for (double& v : y) v = (v - mean) / sd;

        // Isotropic length scale picked by marginal likelihood each round.
        GaussianProcess best_gp(kLengthScaleGrid[0]);
        double best_lml = -std::numeric_limits<double>::infinity();
        for (double ls : kLengthScaleGrid) {
            GaussianProcess gp(ls);
            gp.fit(x, y);
            if (gp.log_marginal_likelihood() > best_lml) {
                best_lml = gp.log_marginal_likelihood();
                best_gp = gp;
            }
        }

        const double f_best = (result.best_objective - mean) / sd;
        std::vector<double> best_candidate;
        double best_ei = -1.0;
        auto consider = [&](std::vector<double> candidate) {
            const auto post = best_gp.posterior(candidate);
            const double ei = expected_improvement(post.mu, post.sigma, f_best);
            if (ei > best_ei) {
                best_ei = ei;
                best_candidate = std::move(candidate);
            }
        };
        for (int i = 0; i < kAcquisitionCandidates; ++i) consider(halton.next());
        const std::vector<double>& incumbent = unit_points[static_cast<std::size_t>(best_index)];
        for (int i = 0; i < kIncumbentPerturbations; ++i) {
            std::vector<double> cand(incumbent.size());
            for (std::size_t d = 0; d < cand.size(); ++d) {
                cand[d] = std::clamp(incumbent[d] + kPerturbationSd * normal01(rng), 0.0, 1.0);
            }
            consider(std::move(cand));
        }
        evaluate(best_candidate);
    }

    if (best_index < 0) throw Error("every tuning trial failed");
    return result;
}

TuneResult tune_gbt(const SearchSpace& space,
                    const std::function<ObjectiveValue(const GbtParams&)>& objective, int budget,
                    int n_init, std::uint64_t seed) {
    GbtParams base;
    TuneResult result = tune(
        space,
        [&](const std::vector<double>& physical) {
            return objective(params_from_point(space, physical, base));
        },
        budget, n_init, seed);
    for (TrialRecord& rec : result.history) {
        rec.params = params_from_point(space, rec.point, base);
    }
    if (!result.best_point.empty()) {
        result.best_params = params_from_point(space, result.best_point, base);
    }
    return result;
}

void export_history_csv(const SearchSpace& space, const std::vector<TrialRecord>& history,
                        const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open history csv for writing: " + path.string());
    out << "trial";
    for (const ParamRange& p : space.params) out << ',' << p.name;
    out << ",objective,best_iteration\n";
    for (const TrialRecord& rec : history) {
        out << rec.index;
        for (double v : rec.point) out << ',' << format_double(v);
        out << ',' << (rec.failed ? "nan" : format_double(rec.objective)) << ','
            << rec.best_iteration << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace demboost
