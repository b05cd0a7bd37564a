#include "fibernet/reservoir.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fibernet/error.hpp"
#include "fibernet/kernels.hpp"
#include "fibernet/signals.hpp"

namespace fibernet {

void RidgeConfig::validate() const {
    if (!(alpha > 0.0)) throw InvalidArgument("ridge alpha must be positive");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw InvalidArgument("train fraction must lie in (0, 1)");
    if (!(washout >= 0.0)) throw InvalidArgument("washout must be non-negative");
}

RidgeReadout::RidgeReadout(const Eigen::Ref<const Eigen::MatrixXd>& features, const RidgeConfig& config,
                           std::size_t start_row) {
    config.validate();
    const auto n = static_cast<std::size_t>(features.rows());
    if (start_row + 4 > n) throw InvalidArgument("ridge: too few rows after washout");
    const std::size_t usable = n - start_row;
    const auto n_train = static_cast<std::size_t>(std::floor(config.train_fraction * static_cast<double>(usable)));
    if (n_train < 2 || usable - n_train < 2) throw InvalidArgument("ridge: split leaves fewer than 2 rows on a side");
    split_ = {start_row, start_row + n_train, n};

    const auto rows = features.middleRows(static_cast<Eigen::Index>(start_row), static_cast<Eigen::Index>(usable));
    if (!rows.allFinite()) throw NumericalError("ridge: feature matrix contains non-finite values");
    const auto train = rows.topRows(static_cast<Eigen::Index>(n_train));
    means_ = train.colwise().mean().transpose();
    centered_ = rows.rowwise() - means_.transpose();

    Eigen::MatrixXd gram = kernels::omp::gram(centered_.topRows(static_cast<Eigen::Index>(n_train)));
    gram.diagonal().array() += config.alpha;
    solver_.compute(gram);
    if (solver_.info() != Eigen::Success || !solver_.isPositive())
        throw NumericalError("ridge: regularized normal matrix is not positive definite");
}

ReadoutFit RidgeReadout::fit(std::span<const double> target) const {
    if (target.size() != split_.end) throw InvalidArgument("ridge: target length does not match trace length");
    const auto n_train = static_cast<Eigen::Index>(split_.train_rows());
    const auto n_test = static_cast<Eigen::Index>(split_.test_rows());
    const Eigen::Map<const Eigen::VectorXd> z(target.data() + split_.start, n_train + n_test);
    if (!z.allFinite()) throw NumericalError("ridge: target contains non-finite values");

    ReadoutFit fit;
    fit.split = split_;
    fit.feature_means = means_;
    const auto z_train = z.head(n_train);
    fit.intercept = z_train.mean();
    fit.degenerate_target = (z_train.array() - fit.intercept).abs().maxCoeff() == 0.0;

    const auto x_train = centered_.topRows(n_train);
    const Eigen::VectorXd rhs = x_train.transpose() * (z_train.array() - fit.intercept).matrix();
    fit.weights = solver_.solve(rhs);
    if (!fit.weights.allFinite()) throw NumericalError("ridge: solve produced non-finite weights");

    const Eigen::VectorXd pred = (centered_ * fit.weights).array() + fit.intercept;
    fit.train_prediction.assign(pred.data(), pred.data() + n_train);
    fit.test_prediction.assign(pred.data() + n_train, pred.data() + n_train + n_test);
    fit.train_target.assign(z.data(), z.data() + n_train);
    fit.test_target.assign(z.data() + n_train, z.data() + n_train + n_test);
    return fit;
}

std::size_t washout_rows(const ReservoirTrace& trace, const RidgeConfig& config) {
    return static_cast<std::size_t>(std::llround(config.washout * trace.sample_rate()));
}

ReadoutFit train_readout(const ReservoirTrace& trace, std::span<const double> target,
                         const RidgeConfig& config) {
    trace.validate();
    config.validate();
    if (target.size() != trace.rows()) throw InvalidArgument("train_readout: target length must equal trace length");
    const double duration = static_cast<double>(trace.rows()) / trace.sample_rate();
    if (!(config.washout < duration * (1.0 - config.train_fraction)))
        throw InvalidArgument("train_readout: washout must be shorter than the test interval");
    return RidgeReadout(trace.features, config, washout_rows(trace, config)).fit(target);
}

double capacity(std::span<const double> prediction, std::span<const double> target) {
    if (prediction.size() != target.size()) throw InvalidArgument("capacity: length mismatch");
    if (target.size() < 2) throw InvalidArgument("capacity: need at least 2 samples");
    const double mean = std::accumulate(target.begin(), target.end(), 0.0) / static_cast<double>(target.size());
    double sse = 0.0;
    double sst = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double r = prediction[i] - target[i];
        const double c = target[i] - mean;
        sse += r * r;
        sst += c * c;
    }
    if (!(sst > 0.0)) throw UndefinedCapacity("capacity: target has zero variance");
    return 1.0 - sse / sst;
}

std::vector<std::vector<double>> legendre_targets(std::span<const double> u, int max_order) {
    if (max_order < 1) throw InvalidArgument("legendre_targets: max_order must be >= 1");
    for (double x : u)
        if (!(std::abs(x) <= 1.0)) throw InvalidArgument("legendre_targets: input outside [-1, 1]");
    const auto k_max = static_cast<std::size_t>(max_order);
    std::vector<std::vector<double>> p(k_max, std::vector<double>(u.size()));
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double x = u[i];
        double prev = 1.0;  // P_0
        double cur = x;     // P_1
        p[0][i] = cur;
        for (std::size_t k = 1; k < k_max; ++k) {
            const auto kd = static_cast<double>(k);
            const double next = ((2.0 * kd + 1.0) * x * cur - kd * prev) / (kd + 1.0);
            prev = cur;
            cur = next;
            p[k][i] = cur;
        }
    }
    return p;
}

double floored_mean(const std::vector<TaskScore>& scores) {
    if (scores.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& s : scores) sum += std::max(0.0, s.test);
    return sum / static_cast<double>(scores.size());
}

NonlinearResult nonlinear_capacity(const ReservoirTrace& trace, const RidgeConfig& config, int max_order) {
    trace.validate();
    const RidgeReadout readout(trace.features, config, washout_rows(trace, config));
    const auto targets = legendre_targets(trace.input.samples, max_order);
    NonlinearResult out;
    for (std::size_t k = 0; k < targets.size(); ++k) {
        const ReadoutFit fit = readout.fit(targets[k]);
        out.per_order.push_back({"legendre", static_cast<double>(k + 1),
                                 capacity(fit.train_prediction, fit.train_target),
                                 capacity(fit.test_prediction, fit.test_target)});
    }
    out.c_nl = floored_mean(out.per_order);
    return out;
}

MemoryResult memory_capacity(const ReservoirTrace& trace, const RidgeConfig& config, double horizon,
                             double lag_step) {
    trace.validate();
    config.validate();
    if (!(horizon > 0.0) || !(lag_step > 0.0)) throw InvalidArgument("memory_capacity: horizon and lag step must be positive");
    const double rate = trace.sample_rate();
    const double duration = static_cast<double>(trace.rows()) / rate;
    if (!(horizon < duration - config.washout))
        throw InvalidArgument("memory_capacity: horizon must be shorter than the trace after washout");
    const double step_rows = lag_step * rate;
    if (std::abs(step_rows - std::round(step_rows)) > 1e-9 || std::round(step_rows) < 1.0)
        throw InvalidArgument("memory_capacity: lag step must be a whole number of samples");
    const auto lag_count = static_cast<std::size_t>(std::llround(horizon / lag_step)) + 1;
    const auto rows_per_step = static_cast<std::size_t>(std::llround(step_rows));

    const std::size_t washout = washout_rows(trace, config);
    const auto& u = trace.input.samples;
    std::map<std::size_t, std::unique_ptr<RidgeReadout>> readouts;
    MemoryResult out;
    std::vector<double> target(u.size(), 0.0);
    for (std::size_t j = 0; j < lag_count; ++j) {
        const std::size_t lag = j * rows_per_step;
        const std::size_t start = std::max(washout, lag);
        auto& readout = readouts[start];
        if (!readout) readout = std::make_unique<RidgeReadout>(trace.features, config, start);
        std::fill(target.begin(), target.end(), 0.0);
        for (std::size_t i = lag; i < u.size(); ++i) target[i] = u[i - lag];
        const ReadoutFit fit = readout->fit(target);
        out.curve.push_back({"memory", static_cast<double>(j) * lag_step,
                             capacity(fit.train_prediction, fit.train_target),
                             capacity(fit.test_prediction, fit.test_target)});
    }
    out.c_m = floored_mean(out.curve);
    return out;
}

void NarmaConfig::validate() const {
    if (order < 2) throw InvalidArgument("NARMA order must be >= 2");
    if (!(lo < hi)) throw InvalidArgument("NARMA input range must satisfy lo < hi");
    if (!(evaluation_rate > 0.0)) throw InvalidArgument("NARMA evaluation rate must be positive");
}

std::vector<double> narma_series(std::span<const double> v, const NarmaConfig& config) {
    config.validate();
    const auto n = static_cast<std::size_t>(config.order);
    if (v.size() <= n) throw InvalidArgument("narma_series: input must be longer than the order");
    for (double x : v)
        if (!(x >= config.lo - 1e-12 && x <= config.hi + 1e-12))
            throw InvalidArgument("narma_series: input outside the configured range");
    std::vector<double> y(v.size() + 1, 0.0);  // y[0] = 0
    for (std::size_t t = 0; t < v.size(); ++t) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n && i <= t; ++i) sum += y[t - i];
        const double v_lag = t + 1 >= n ? v[t + 1 - n] : 0.0;
        y[t + 1] = config.a * y[t] + config.b * y[t] * sum + config.c * v_lag * v[t] + config.d;
        if (!(std::abs(y[t + 1]) <= 1e3))
            throw TaskDivergence("NARMA-" + std::to_string(n) + " diverged at step " + std::to_string(t + 1));
    }
    return {y.begin() + 1, y.end()};
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw InvalidArgument("percentile: empty input");
    if (!(p >= 0.0 && p <= 100.0)) throw InvalidArgument("percentile: p must lie in [0, 100]");
    std::sort(values.begin(), values.end());
    const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double interdecile_range(std::span<const double> errors) {
    std::vector<double> v(errors.begin(), errors.end());
    return percentile(v, 90.0) - percentile(v, 10.0);
}

double rmse(std::span<const double> prediction, std::span<const double> target) {
    if (prediction.size() != target.size() || target.empty()) throw InvalidArgument("rmse: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) s += (prediction[i] - target[i]) * (prediction[i] - target[i]);
    return std::sqrt(s / static_cast<double>(target.size()));
}

NarmaResult evaluate_narma(const ReservoirTrace& trace, const RidgeConfig& ridge, const NarmaConfig& narma) {
    trace.validate();
    narma.validate();
    const double ratio = trace.sample_rate() / narma.evaluation_rate;
    const auto factor = static_cast<std::size_t>(std::llround(ratio));
    if (factor < 1 || std::abs(ratio - static_cast<double>(factor)) > 1e-9)
        throw InvalidArgument("evaluate_narma: evaluation rate must divide the trace rate");
    const ReservoirTrace slow = decimate(trace, factor);
    const InputSignal v = normalize_to_range(slow.input, narma.lo, narma.hi);
    const auto target = narma_series(v.samples, narma);

    NarmaResult out;
    out.order = narma.order;
    const ReadoutFit fit = train_readout(slow, target, ridge);
    out.prediction = fit.test_prediction;
    out.target = fit.test_target;
    for (std::size_t i = fit.split.train_end; i < fit.split.end; ++i) out.test_times.push_back(slow.times[i]);
    std::vector<double> err(out.prediction.size());
    for (std::size_t i = 0; i < err.size(); ++i) err[i] = out.prediction[i] - out.target[i];
    out.rmse = rmse(out.prediction, out.target);
    out.idr = interdecile_range(err);

    const Eigen::Map<const Eigen::MatrixXd> input_column(v.samples.data(), static_cast<Eigen::Index>(v.size()), 1);
    const ReadoutFit base = RidgeReadout(input_column, ridge, washout_rows(slow, ridge)).fit(target);
    out.baseline_rmse = rmse(base.test_prediction, base.test_target);
    return out;
}

}  // namespace fibernet
