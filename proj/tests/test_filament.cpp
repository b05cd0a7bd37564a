#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "fibernet/error.hpp"
#include "fibernet/filament.hpp"
#include "oracles.hpp"

using namespace fibernet;
using namespace fibernet::testing;

namespace {

const MaterialParams kRef = MaterialParams::reference();

FilamentMesh jiggled(std::mt19937_64& rng, int n_el, double length, double amp) {
    FilamentMesh m = build_filament(length, n_el, kRef, Vec2::Zero(), Vec2::UnitX());
    std::uniform_real_distribution<double> d(-amp, amp);
    for (Vec2& p : m.positions) p += Vec2(d(rng), d(rng));
    return m;
}

}  // namespace

TEST_CASE("material derives area and second moment") {
    CHECK(kRef.area() == doctest::Approx(std::numbers::pi * 1e-6).epsilon(1e-12));
    CHECK(kRef.second_moment() == doctest::Approx(std::numbers::pi * 16e-12 / 64.0).epsilon(1e-12));
    CHECK(kRef.bending_stiffness() == doctest::Approx(7.854e-5).epsilon(1e-4));
    CHECK_THROWS_AS(MaterialParams(-1.0, 1000.0, 2e-3), InvalidArgument);
}

TEST_CASE("build_filament node layout") {
    const auto m = build_filament(0.52, 52, kRef, Vec2::Zero(), Vec2::UnitX());
    CHECK(m.node_count() == 53);
    for (double l : m.rest_lengths) CHECK(l == doctest::Approx(0.01).epsilon(1e-12));

    const auto m2 = build_filament(0.5, 2, kRef, Vec2::Zero(), Vec2::UnitX());
    REQUIRE(m2.node_count() == 3);
    CHECK(m2.positions[0].x() == doctest::Approx(0.0));
    CHECK(m2.positions[1].x() == doctest::Approx(0.25));
    CHECK(m2.positions[2].x() == doctest::Approx(0.5));

    const auto m3 = build_filament(0.3, 6, kRef, Vec2(0.1, 0.0), Vec2::UnitY());
    for (const Vec2& p : m3.positions) CHECK(p.x() == 0.1);
    CHECK(m3.positions.back().y() == doctest::Approx(0.3));

    CHECK_THROWS_AS(build_filament(0.0, 4, kRef, Vec2::Zero(), Vec2::UnitX()), InvalidArgument);
    CHECK_THROWS_AS(build_filament(1.0, 1, kRef, Vec2::Zero(), Vec2::UnitX()), InvalidArgument);
}

TEST_CASE("rest configuration carries no force") {
    const auto m = build_filament(0.2, 8, kRef, Vec2(0.3, -0.1), Vec2(0.6, 0.8));
    for (const Vec2& f : internal_forces(m)) CHECK(f.norm() < 1e-12);
    const Energy e = energy(m);
    CHECK(e.kinetic == 0.0);
    CHECK(e.elastic == doctest::Approx(0.0));
}

TEST_CASE("uniform stretch gives axial force EA eps") {
    const double eps = 0.01;
    auto m = build_filament(0.02, 2, kRef, Vec2::Zero(), Vec2::UnitX());
    for (Vec2& p : m.positions) p *= 1.0 + eps;
    const auto f = internal_forces(m);
    const double ea_eps = 1e8 * (std::numbers::pi * 1e-6) * eps;
    CHECK(ea_eps == doctest::Approx(3.1416).epsilon(1e-4));
    CHECK(f[0].x() == doctest::Approx(ea_eps).epsilon(1e-9));
    CHECK(f[2].x() == doctest::Approx(-ea_eps).epsilon(1e-9));
    CHECK(std::abs(f[1].x()) < 1e-9);

    // Quadratic spring energy per element: 1/2 (EA / l0) (eps l0)^2.
    const double l0 = 0.01;
    const double per_element = 0.5 * (kRef.axial_stiffness() / l0) * (eps * l0) * (eps * l0);
    CHECK(energy(m).elastic == doctest::Approx(2.0 * per_element).epsilon(1e-9));
}

TEST_CASE("right-angle bend matches the energy gradient") {
    auto m = build_filament(0.02, 2, kRef, Vec2::Zero(), Vec2::UnitX());
    m.positions[2] = Vec2(0.01, 0.01);
    const auto f = internal_forces(m);
    const auto oracle = fd_forces(m, 1e-9);
    CHECK(diff_norm(f, oracle) / norm(oracle) < 1e-5);
    CHECK((f[0] + f[1] + f[2]).norm() < 1e-12);
    // End nodes are pushed back toward straight, transversely to their elements.
    CHECK(std::abs(f[0].y()) > 0.0);
    CHECK(std::abs(f[2].x()) > 0.0);
    CHECK(f[0].y() == doctest::Approx(-f[2].x()).epsilon(1e-9));
}

TEST_CASE("internal forces are the negative energy gradient on random configurations") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const auto m = jiggled(rng, 6, 0.06, 1e-3);
        const auto f = internal_forces(m);
        const auto oracle = fd_forces(m, 1e-8);
        CHECK(diff_norm(f, oracle) / norm(oracle) < 1e-5);
    }
}

TEST_CASE("frame invariance of energy and forces") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    std::uniform_real_distribution<double> shift(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = jiggled(rng, 8, 0.08, 1e-3);
        const Eigen::Rotation2Dd r(angle(rng));
        const Vec2 t(shift(rng), shift(rng));
        FilamentMesh moved = m;
        for (Vec2& p : moved.positions) p = r * p + t;

        const double e0 = energy(m).elastic;
        CHECK(std::abs(energy(moved).elastic - e0) <= 1e-10 * e0);

        const auto f0 = internal_forces(m);
        const auto f1 = internal_forces(moved);
        Points rotated(f0.size());
        for (std::size_t i = 0; i < f0.size(); ++i) rotated[i] = r * f0[i];
        CHECK(diff_norm(f1, rotated) <= 1e-9 * norm(f0));
    }
}

TEST_CASE("stable_dt follows the axial CFL bound") {
    const auto m = build_filament(0.1, 10, kRef, Vec2::Zero(), Vec2::UnitX());
    CHECK(stable_dt(m, 1.0) == doctest::Approx(0.01 * std::sqrt(1e-5)).epsilon(1e-12));
    CHECK(stable_dt(m, 1.0) == doctest::Approx(3.162e-5).epsilon(1e-3));
    CHECK(stable_dt(m, 0.1) == doctest::Approx(3.162e-6).epsilon(1e-3));
    CHECK_THROWS_AS(step(m, {}, 2.0 * stable_dt(m, 1.0)), StabilityError);
}

TEST_CASE("kinetic energy of a rigid translation") {
    auto m = build_filament(0.1, 10, kRef, Vec2::Zero(), Vec2::UnitX());
    const Vec2 v(0.3, -0.4);
    for (Vec2& u : m.velocities) u = v;
    const double total_mass = kRef.linear_density() * 0.1;
    const Energy e = energy(m);
    CHECK(e.kinetic == doctest::Approx(0.5 * total_mass * v.squaredNorm()).epsilon(1e-12));
    CHECK(e.elastic == doctest::Approx(0.0));
}

TEST_CASE("equilibrium is preserved by a step") {
    const auto m = build_filament(0.1, 10, kRef, Vec2::Zero(), Vec2::UnitX());
    const auto next = step(m, {}, stable_dt(m, 0.1));
    for (std::size_t i = 0; i < m.node_count(); ++i) {
        CHECK((next.positions[i] - m.positions[i]).norm() < 1e-15);
        CHECK(next.velocities[i].norm() < 1e-12);
    }
}

TEST_CASE("axial oscillation period of a lumped mass") {
    // Middle node of a two-element fiber with clamped ends: mass rho A l,
    // stiffness 2 EA / l.
    const double l = 0.01;
    auto m = build_filament(2 * l, 2, kRef.with_damping(0.0), Vec2::Zero(), Vec2::UnitX());
    m.clamp(0);
    m.clamp(2);
    m.positions[1].x() += 1e-5;
    const double mass = kRef.linear_density() * l;
    const double k = 2.0 * kRef.axial_stiffness() / l;
    const double period = 2.0 * std::numbers::pi * std::sqrt(mass / k);

    const double dt = stable_dt(m, 0.1);
    std::vector<double> up_crossings;
    double prev = m.positions[1].x() - l;
    for (int s = 1; s < 20000 && up_crossings.size() < 6; ++s) {
        m = step(m, {}, dt, s);
        const double cur = m.positions[1].x() - l;
        if (prev < 0.0 && cur >= 0.0) up_crossings.push_back((s - 1 + prev / (prev - cur)) * dt);
        prev = cur;
    }
    REQUIRE(up_crossings.size() == 6);
    const double measured = (up_crossings.back() - up_crossings.front()) / 5.0;
    CHECK(measured == doctest::Approx(period).epsilon(0.02));
}

TEST_CASE("undamped energy drift stays below 1% over one second") {
    std::mt19937_64 rng(3);
    auto m = jiggled(rng, 10, 0.1, 2e-4);
    m.material = kRef.with_damping(0.0);
    m.clamp(0);
    const double dt = stable_dt(m, 0.1);
    const double e0 = energy(m).total();
    REQUIRE(e0 > 0.0);
    const auto masses = lumped_masses(m);
    Points scratch;
    double worst = 0.0;
    const auto steps = static_cast<int>(std::ceil(1.0 / dt));
    for (int s = 0; s < steps; ++s) {
        advance(m, {}, dt, masses, scratch, s);
        if (s % 100 == 0) worst = std::max(worst, std::abs(energy(m).total() - e0));
    }
    CHECK(worst / e0 < 0.01);
}

TEST_CASE("damped energy envelope decays") {
    std::mt19937_64 rng(5);
    auto m = jiggled(rng, 10, 0.1, 2e-4);
    m.clamp(0);
    const double dt = stable_dt(m, 0.1);
    const auto masses = lumped_masses(m);
    Points scratch;
    // Window maxima of total energy must fall from one 0.1 s window to the
    // next. The step-boundary energy wobbles by O(dt^2), so the start value
    // is not a bound for the first window.
    const auto per_window = static_cast<int>(0.1 / dt);
    double prev_max = std::numeric_limits<double>::infinity();
    for (int w = 0; w < 6; ++w) {
        double window_max = 0.0;
        for (int s = 0; s < per_window; ++s) {
            advance(m, {}, dt, masses, scratch, s);
            window_max = std::max(window_max, energy(m).total());
        }
        CHECK(window_max < prev_max);
        prev_max = window_max;
    }
}

TEST_CASE("collapsed element raises a degeneracy error") {
    auto m = build_filament(0.02, 2, kRef, Vec2::Zero(), Vec2::UnitX());
    m.positions[1] = m.positions[0];
    CHECK_THROWS_AS(internal_forces(m), DegeneracyError);
}

TEST_CASE("non-finite state reports the step index") {
    auto m = build_filament(0.02, 2, kRef, Vec2::Zero(), Vec2::UnitX());
    std::vector<Vec2> ext(3, Vec2::Zero());
    ext[1] = Vec2(std::numeric_limits<double>::infinity(), 0.0);
    try {
        (void)step(m, ext, stable_dt(m, 0.1), 42);
        FAIL("expected a divergence error");
    } catch (const DivergenceError& e) {
        CHECK(e.step() == 42);
    }
}
