#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "demboost/gbtree.hpp"

namespace demboost {

enum class ParamScale { linear, log };
enum class ParamKind { real, integer };

struct ParamRange {
    std::string name;
    double lower = 0.0;
    double upper = 1.0;
    ParamScale scale = ParamScale::linear;
    ParamKind kind = ParamKind::real;
};

struct SearchSpace {
    std::vector<ParamRange> params;

    std::size_t size() const { return params.size(); }
    void validate() const;

    // Maps a point in [0,1]^d through each parameter's scale; integers are
    // rounded to the nearest whole value.
    std::vector<double> to_physical(std::span<const double> unit) const;

    // The nine boosting parameters with their stock tuning bounds.
    static SearchSpace gbt_default();
};

struct TrialRecord {
    int index = 0;
    std::vector<double> point;  // physical parameter values, space order
    GbtParams params;           // populated when tuning boosting parameters
    double objective = std::numeric_limits<double>::quiet_NaN();
    int best_iteration = 0;
    bool failed = false;
};

struct ObjectiveValue {
    double objective = 0.0;
    int best_iteration = 0;
};

struct TuneResult {
    std::vector<double> best_point;
    GbtParams best_params;
    double best_objective = std::numeric_limits<double>::infinity();
    std::vector<TrialRecord> history;
};

// Expected improvement for minimization: how much below f_best a Gaussian
// with moments (mu, sigma) is expected to land.
double expected_improvement(double mu, double sigma, double f_best);

// Zero-mean Gaussian process with an isotropic Matern 5/2 kernel on the unit
// cube. Callers standardize the observations.
class GaussianProcess {
public:
    explicit GaussianProcess(double length_scale, double nugget = 1e-6);

    void fit(const std::vector<std::vector<double>>& points, const std::vector<double>& values);

    struct Posterior {
        double mu = 0.0;
        double sigma = 0.0;
    };
    Posterior posterior(std::span<const double> x) const;

    double log_marginal_likelihood() const { return log_marginal_likelihood_; }
    double length_scale() const { return length_scale_; }

private:
    double kernel(std::span<const double> a, std::span<const double> b) const;

    double length_scale_;
    double nugget_;
    std::vector<std::vector<double>> points_;
    std::vector<double> alpha_;       // K^-1 y
    std::vector<double> chol_;        // lower Cholesky factor, row-major
    double log_marginal_likelihood_ = 0.0;
};

using VectorObjective = std::function<ObjectiveValue(const std::vector<double>&)>;

// Sequential model-based minimization: quasi-random warmup, then one
// GP-guided point per trial chosen by maximizing expected improvement over a
// seeded candidate set. Throws Error when every trial fails.
TuneResult tune(const SearchSpace& space, const VectorObjective& objective, int budget,
                int n_init, std::uint64_t seed);

// Convenience wrapper for the boosting space: converts each point to
// GbtParams before evaluation and records them in the history.
TuneResult tune_gbt(const SearchSpace& space,
                    const std::function<ObjectiveValue(const GbtParams&)>& objective, int budget,
                    int n_init, std::uint64_t seed);

// Builds GbtParams from physical values keyed by ParamRange names; fields not
// named keep the supplied base values.
GbtParams params_from_point(const SearchSpace& space, std::span<const double> physical,
                            const GbtParams& base = {});

void export_history_csv(const SearchSpace& space, const std::vector<TrialRecord>& history,
                        const std::filesystem::path& path);

}  // namespace demboost
