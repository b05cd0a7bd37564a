#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace fibernet {

struct SignalSpec {
    std::uint64_t seed = 42;
    double knot_rate = 5.0;      // Hz
    double duration = 100.0;     // s
    double sample_rate = 250.0;  // Hz
    double amplitude = 1.0;

    void validate() const;
    std::size_t sample_count() const;
    std::size_t knot_count() const;
};

struct InputSignal {
    std::vector<double> samples;
    double sample_rate = 250.0;
    SignalSpec spec;

    std::size_t size() const noexcept { return samples.size(); }
    double time(std::size_t i) const noexcept { return static_cast<double>(i) / sample_rate; }
};

/// Natural cubic spline through equally spaced knots.
class NaturalSpline {
public:
    NaturalSpline(std::vector<double> knots, double knot_spacing);

    /// Linear continuation outside the knot range (zero end curvature).
    double operator()(double t) const;

private:
    std::vector<double> y_;
    std::vector<double> m_;  // second derivatives at knots
    double h_;
};

/// Seeded knots, i.i.d. uniform on [-1, 1]. Bit-reproducible across platforms.
std::vector<double> draw_knots(std::uint64_t seed, std::size_t count);

InputSignal generate_spline_input(const SignalSpec& spec);

/// Same pipeline with caller-supplied knot values (knot i sits at i / knot_rate).
InputSignal spline_input_from_knots(const SignalSpec& spec, std::span<const double> knots);

/// Divides by max|u| when that exceeds 1; idempotent.
void rescale_overshoot(std::vector<double>& samples);

std::vector<double> scale_force(const InputSignal& u, double force_max);

/// Affine map of [-amplitude, amplitude] onto [lo, hi].
InputSignal normalize_to_range(const InputSignal& u, double lo, double hi);

/// Every factor-th sample starting at index 0.
InputSignal decimate(const InputSignal& u, std::size_t factor);

/// Two-column CSV: time_s,value.
void write_signal_csv(const std::filesystem::path& path, const InputSignal& u);

}  // namespace fibernet
