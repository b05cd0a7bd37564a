#include "fibernet/signals.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "fibernet/error.hpp"
#include "fibernet/io.hpp"

namespace fibernet {

void SignalSpec::validate() const {
    if (!(duration > 0.0)) throw InvalidArgument("signal: duration must be positive");
    if (!(knot_rate > 0.0) || !(sample_rate > 0.0))
        throw InvalidArgument("signal: rates must be positive");
    if (!(knot_rate < sample_rate)) throw InvalidArgument("signal: knot_rate must be below sample_rate");
    if (!(amplitude > 0.0 && amplitude <= 1.0)) throw InvalidArgument("signal: amplitude must lie in (0, 1]");
}

std::size_t SignalSpec::sample_count() const {
    return static_cast<std::size_t>(std::llround(duration * sample_rate));
}

std::size_t SignalSpec::knot_count() const {
    return static_cast<std::size_t>(std::llround(duration * knot_rate));
}

NaturalSpline::NaturalSpline(std::vector<double> knots, double knot_spacing)
    : y_(std::move(knots)), m_(y_.size(), 0.0), h_(knot_spacing) {
    const std::size_t n = y_.size();
    if (n < 4) throw InvalidArgument("cubic spline needs at least 4 knots");
    // Tridiagonal system for interior second derivatives (uniform spacing):
    // m[i-1] + 4 m[i] + m[i+1] = 6 (y[i-1] - 2 y[i] + y[i+1]) / h^2, m[0] = m[n-1] = 0.
    const std::size_t k = n - 2;
    std::vector<double> diag(k, 4.0), rhs(k);
    for (std::size_t i = 0; i < k; ++i)
        rhs[i] = 6.0 * (y_[i] - 2.0 * y_[i + 1] + y_[i + 2]) / (h_ * h_);
    for (std::size_t i = 1; i < k; ++i) {
        const double w = 1.0 / diag[i - 1];
        diag[i] -= w;
        rhs[i] -= w * rhs[i - 1];
    }
    m_[k] = rhs[k - 1] / diag[k - 1];
    for (std::size_t i = k - 1; i-- > 0;) m_[i + 1] = (rhs[i] - m_[i + 2]) / diag[i];
}

double NaturalSpline::operator()(double t) const {
    const std::size_t n = y_.size();
    const double last = h_ * static_cast<double>(n - 1);
    if (t <= 0.0) {
        const double slope = (y_[1] - y_[0]) / h_ - h_ * (2.0 * m_[0] + m_[1]) / 6.0;
        return y_[0] + slope * t;
    }
    if (t >= last) {
        const double slope = (y_[n - 1] - y_[n - 2]) / h_ + h_ * (m_[n - 2] + 2.0 * m_[n - 1]) / 6.0;
        return y_[n - 1] + slope * (t - last);
    }
    const std::size_t i = std::min(static_cast<std::size_t>(t / h_), n - 2);
    const double a = (h_ * static_cast<double>(i + 1) - t) / h_;
    const double b = 1.0 - a;
    return a * y_[i] + b * y_[i + 1] +
           ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h_ * h_ / 6.0;
}

std::vector<double> draw_knots(std::uint64_t seed, std::size_t count) {
    // mt19937_64 output is fixed by the standard; the distribution classes
    // are not, so the unit-interval mapping is done by hand.
    std::mt19937_64 gen(seed);
    std::vector<double> knots(count);
    for (double& k : knots) {
        const double unit = static_cast<double>(gen() >> 11) * 0x1.0p-53;
        k = 2.0 * unit - 1.0;
    }
    return knots;
}

InputSignal generate_spline_input(const SignalSpec& spec) {
    spec.validate();
    if (spec.knot_count() < 4)
        throw InvalidArgument("signal: duration * knot_rate must give at least 4 knots");
    const auto knots = draw_knots(spec.seed, spec.knot_count());
    return spline_input_from_knots(spec, knots);
}

InputSignal spline_input_from_knots(const SignalSpec& spec, std::span<const double> knots) {
    spec.validate();
    const NaturalSpline spline(std::vector<double>(knots.begin(), knots.end()), 1.0 / spec.knot_rate);
    InputSignal u{.samples = {}, .sample_rate = spec.sample_rate, .spec = spec};
    u.samples.resize(spec.sample_count());
    for (std::size_t i = 0; i < u.samples.size(); ++i)
        u.samples[i] = spline(static_cast<double>(i) / spec.sample_rate);
    rescale_overshoot(u.samples);
    for (double& s : u.samples) s *= spec.amplitude;
    return u;
}

void rescale_overshoot(std::vector<double>& samples) {
    double peak = 0.0;
    for (double s : samples) peak = std::max(peak, std::abs(s));
    if (peak > 1.0)
        for (double& s : samples) s /= peak;
}

std::vector<double> scale_force(const InputSignal& u, double force_max) {
    std::vector<double> f(u.samples.size());
    std::transform(u.samples.begin(), u.samples.end(), f.begin(),
                   [force_max](double s) { return force_max * s; });
    return f;
}

InputSignal normalize_to_range(const InputSignal& u, double lo, double hi) {
    if (!(lo < hi)) throw InvalidArgument("normalize_to_range: need lo < hi");
    const double amp = u.spec.amplitude;
    InputSignal out = u;
    for (double& s : out.samples) s = lo + (s + amp) / (2.0 * amp) * (hi - lo);
    return out;
}

InputSignal decimate(const InputSignal& u, std::size_t factor) {
    if (factor < 1) throw InvalidArgument("decimate: factor must be >= 1");
    InputSignal out{.samples = {}, .sample_rate = u.sample_rate / static_cast<double>(factor), .spec = u.spec};
    out.samples.reserve(u.samples.size() / factor + 1);
    for (std::size_t i = 0; i < u.samples.size(); i += factor) out.samples.push_back(u.samples[i]);
    return out;
}

void write_signal_csv(const std::filesystem::path& path, const InputSignal& u) {
    std::string text = "time_s,value\n";
    for (std::size_t i = 0; i < u.size(); ++i)
        text += format_double(u.time(i)) + "," + format_double(u.samples[i]) + "\n";
    write_file_atomic(path, text);
}

}  // namespace fibernet
