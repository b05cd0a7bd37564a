#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include <Eigen/Dense>

#include "fibernet/error.hpp"
#include "fibernet/io.hpp"
#include "fibernet/signals.hpp"
#include "fibernet/trace.hpp"

using namespace fibernet;

namespace {

// Natural cubic spline by a dense solve for all second derivatives.
struct DenseSpline {
    std::vector<double> y;
    Eigen::VectorXd m;
    double h;

    DenseSpline(std::vector<double> knots, double spacing) : y(std::move(knots)), h(spacing) {
        const auto n = static_cast<Eigen::Index>(y.size());
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
        a(0, 0) = 1.0;
        a(n - 1, n - 1) = 1.0;
        for (Eigen::Index i = 1; i + 1 < n; ++i) {
            a(i, i - 1) = h / 6.0;
            a(i, i) = 2.0 * h / 3.0;
            a(i, i + 1) = h / 6.0;
            b(i) = (y[i + 1] - y[i]) / h - (y[i] - y[i - 1]) / h;
        }
        m = a.fullPivLu().solve(b);
    }

    double operator()(double t) const {
        const auto i = std::min(static_cast<std::size_t>(std::floor(t / h)), y.size() - 2);
        const double x0 = h * static_cast<double>(i);
        const double x1 = x0 + h;
        const auto k = static_cast<Eigen::Index>(i);
        return m(k) * std::pow(x1 - t, 3) / (6 * h) + m(k + 1) * std::pow(t - x0, 3) / (6 * h) +
               (y[i] / h - m(k) * h / 6) * (x1 - t) + (y[i + 1] / h - m(k + 1) * h / 6) * (t - x0);
    }
};

SignalSpec short_spec(double duration = 10.0) {
    SignalSpec s;
    s.duration = duration;
    return s;
}

}  // namespace

TEST_CASE("spline passes through its knots") {
    const auto knots = draw_knots(3, 60);
    const NaturalSpline spline(knots, 0.2);
    for (std::size_t k = 0; k < knots.size(); ++k) CHECK(std::abs(spline(0.2 * k) - knots[k]) < 1e-10);
}

TEST_CASE("spline matches a dense natural-spline solve") {
    const auto knots = draw_knots(17, 40);
    const NaturalSpline spline(knots, 0.2);
    const DenseSpline oracle(knots, 0.2);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> t(0.0, 0.2 * 39);
    for (int i = 0; i < 500; ++i) {
        const double x = t(rng);
        CHECK(std::abs(spline(x) - oracle(x)) < 1e-10);
    }
}

TEST_CASE("generated drive is deterministic and bounded") {
    SignalSpec spec;
    CHECK(spec.knot_count() == 500);
    CHECK(spec.sample_count() == 25000);
    const InputSignal a = generate_spline_input(spec);
    const InputSignal b = generate_spline_input(spec);
    REQUIRE(a.size() == 25000);
    CHECK(std::memcmp(a.samples.data(), b.samples.data(), a.size() * sizeof(double)) == 0);
    for (double s : a.samples) CHECK(std::abs(s) <= spec.amplitude);

    spec.seed = 43;
    CHECK(generate_spline_input(spec).samples != a.samples);

    SignalSpec half = short_spec();
    half.amplitude = 0.5;
    double peak = 0.0;
    for (double s : generate_spline_input(half).samples) peak = std::max(peak, std::abs(s));
    CHECK(peak <= 0.5);
    CHECK(peak > 0.25);
}

TEST_CASE("knot draws are uniform on [-1, 1]") {
    const auto k = draw_knots(5, 20000);
    double lo = 1.0, hi = -1.0, mean = 0.0;
    for (double x : k) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
        mean += x / static_cast<double>(k.size());
    }
    CHECK(lo >= -1.0);
    CHECK(hi < 1.0);
    CHECK(lo < -0.999);
    CHECK(hi > 0.999);
    CHECK(std::abs(mean) < 0.02);
}

TEST_CASE("constant knots give a constant drive") {
    SignalSpec spec = short_spec();
    spec.amplitude = 0.8;
    const std::vector<double> knots(spec.knot_count(), 0.5);
    for (double s : spline_input_from_knots(spec, knots).samples) CHECK(s == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("overshoot rescale is idempotent") {
    std::vector<double> v{0.2, -1.7, 1.1, 0.0};
    rescale_overshoot(v);
    CHECK(v[1] == doctest::Approx(-1.0));
    const auto once = v;
    rescale_overshoot(v);
    CHECK(v == once);
    std::vector<double> inside{0.3, -0.9};
    rescale_overshoot(inside);
    CHECK(inside == std::vector<double>{0.3, -0.9});
}

TEST_CASE("too few knots are rejected") {
    CHECK_THROWS_AS(generate_spline_input(short_spec(0.6)), InvalidArgument);
    SignalSpec bad = short_spec();
    bad.knot_rate = 300.0;
    CHECK_THROWS_AS(generate_spline_input(bad), InvalidArgument);
    bad = short_spec();
    bad.amplitude = 1.5;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("force scaling and range normalization") {
    InputSignal u;
    u.samples = {-1.0, 0.0, 1.0};
    CHECK(scale_force(u, 0.05) == std::vector<double>{-0.05, 0.0, 0.05});
    InputSignal zero;
    zero.samples.assign(5, 0.0);
    for (double f : scale_force(zero, 3.0)) CHECK(f == 0.0);

    const InputSignal v = normalize_to_range(u, 0.0, 0.2);
    CHECK(v.samples[0] == doctest::Approx(0.0));
    CHECK(v.samples[1] == doctest::Approx(0.1));
    CHECK(v.samples[2] == doctest::Approx(0.2));
    CHECK_THROWS_AS(normalize_to_range(u, 0.2, 0.2), InvalidArgument);
}

TEST_CASE("decimation keeps every factor-th sample") {
    InputSignal u;
    u.sample_rate = 250.0;
    for (int i = 0; i < 1000; ++i) u.samples.push_back(i);
    const InputSignal d = decimate(u, 25);
    CHECK(d.size() == 40);
    CHECK(d.sample_rate == doctest::Approx(10.0));
    CHECK(d.samples[3] == 75.0);
    CHECK(decimate(u, 1).samples == u.samples);

    ReservoirTrace t;
    t.input = u;
    t.features = Eigen::MatrixXd::Zero(1000, 2);
    for (int i = 0; i < 1000; ++i) {
        t.times.push_back(i / 250.0);
        t.features(i, 0) = i;
    }
    t.feature_meta = feature_columns({ReadoutPoint{}});
    const ReservoirTrace td = decimate(t, 25);
    CHECK(td.rows() == 40);
    CHECK(td.sample_rate() == doctest::Approx(10.0));
    CHECK(td.features(2, 0) == 50.0);
    CHECK(td.times[2] == doctest::Approx(0.2));
}

TEST_CASE("signal csv export") {
    const auto dir = std::filesystem::temp_directory_path() / "fibernet_signal_test";
    std::filesystem::create_directories(dir);
    InputSignal u = generate_spline_input(short_spec());
    write_signal_csv(dir / "u.csv", u);
    const std::string text = read_file(dir / "u.csv");
    CHECK(text.rfind("time_s,value\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 2501);
    std::filesystem::remove_all(dir);
}
