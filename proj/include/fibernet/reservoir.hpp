#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Cholesky>

#include "fibernet/trace.hpp"

namespace fibernet {

struct RidgeConfig {
    double alpha = 0.01;
    double train_fraction = 0.75;
    double washout = 2.0;  // s dropped from the trace start

    void validate() const;
};

/// Row ranges of one chronological split: train [start, train_end), test [train_end, end).
struct Split {
    std::size_t start = 0;
    std::size_t train_end = 0;
    std::size_t end = 0;

    std::size_t train_rows() const noexcept { return train_end - start; }
    std::size_t test_rows() const noexcept { return end - train_end; }
};

struct ReadoutFit {
    Eigen::VectorXd weights;
    double intercept = 0.0;
    Eigen::VectorXd feature_means;
    Split split;
    std::vector<double> train_prediction;
    std::vector<double> test_prediction;
    std::vector<double> train_target;
    std::vector<double> test_target;
    /// Training target has zero variance; capacities are undefined.
    bool degenerate_target = false;
};

/// Ridge readout over a fixed feature matrix and split. The training Gram
/// matrix is factorized once; fit() then costs two matrix-vector products.
class RidgeReadout {
public:
    RidgeReadout(const Eigen::Ref<const Eigen::MatrixXd>& features, const RidgeConfig& config,
                 std::size_t start_row);

    /// `target` is indexed like the feature rows (only rows >= start are read).
    ReadoutFit fit(std::span<const double> target) const;

    const Split& split() const noexcept { return split_; }

private:
    Eigen::MatrixXd centered_;  // rows [start, end) minus training means
    Eigen::VectorXd means_;
    Eigen::LDLT<Eigen::MatrixXd> solver_;
    Split split_;
};

/// Washout converted to rows at the trace's sample rate.
std::size_t washout_rows(const ReservoirTrace& trace, const RidgeConfig& config);

ReadoutFit train_readout(const ReservoirTrace& trace, std::span<const double> target,
                         const RidgeConfig& config);

/// 1 - sum (zhat - z)^2 / sum (z - mean z)^2.
double capacity(std::span<const double> prediction, std::span<const double> target);

/// P_1 .. P_max_order of u by Bonnet's recurrence.
std::vector<std::vector<double>> legendre_targets(std::span<const double> u, int max_order = 10);

struct TaskScore {
    std::string task;  // "legendre", "memory", ...
    double parameter = 0.0;  // order k or lag tau (s)
    double train = 0.0;
    double test = 0.0;
};

struct NonlinearResult {
    std::vector<TaskScore> per_order;
    double c_nl = 0.0;
};

struct MemoryResult {
    std::vector<TaskScore> curve;
    double c_m = 0.0;
};

/// Test capacities floored at 0 then averaged.
double floored_mean(const std::vector<TaskScore>& scores);

NonlinearResult nonlinear_capacity(const ReservoirTrace& trace, const RidgeConfig& config,
                                   int max_order = 10);

MemoryResult memory_capacity(const ReservoirTrace& trace, const RidgeConfig& config,
                             double horizon = 1.0, double lag_step = 0.02);

struct NarmaConfig {
    int order = 2;
    double a = 0.3;
    double b = 0.05;
    double c = 1.5;
    double d = 0.1;
    double lo = 0.0;
    double hi = 0.2;
    double evaluation_rate = 10.0;  // Hz

    void validate() const;
};

/// s[t] = y_{t+1}, where y_{t+1} = a y_t + b y_t sum_{i<n} y_{t-i} + c v_{t-n+1} v_t + d
/// from zero history.
std::vector<double> narma_series(std::span<const double> v, const NarmaConfig& config);

struct NarmaResult {
    int order = 0;
    double rmse = 0.0;
    double idr = 0.0;
    /// Same split and ridge on the normalized input alone.
    double baseline_rmse = 0.0;
    std::vector<double> prediction;  // test split
    std::vector<double> target;      // test split
    std::vector<double> test_times;
};

NarmaResult evaluate_narma(const ReservoirTrace& trace, const RidgeConfig& ridge, const NarmaConfig& narma);

/// Linear interpolation between order statistics.
double percentile(std::vector<double> values, double p);
double interdecile_range(std::span<const double> errors);
double rmse(std::span<const double> prediction, std::span<const double> target);

}  // namespace fibernet
