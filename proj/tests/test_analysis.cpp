#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "fibernet/analysis.hpp"
#include "fibernet/error.hpp"

using namespace fibernet;

namespace {

constexpr double kPi2 = std::numbers::pi * std::numbers::pi;
const MaterialParams kRef = MaterialParams::reference();

NetworkSpec crosshatch(int n, double spacing = 0.1) {
    NetworkSpec s;
    s.count = n;
    s.node_spacing = spacing;
    return s;
}

std::vector<FeatureColumn> columns_of(const NetworkSpec& spec) {
    return feature_columns(assemble(spec).readouts);
}

RunSpec small_run() {
    RunSpec r;
    r.network = crosshatch(2);
    r.signal.duration = 6.0;
    return r;
}

}  // namespace

TEST_CASE("deflection force predictor") {
    const double i = std::numbers::pi * std::pow(2e-3, 4) / 64.0;
    CHECK(i == doctest::Approx(7.854e-13).epsilon(1e-4));
    CHECK(force_for_deflection(0.0133, 1e8, i, 0.1) == doctest::Approx(0.0501).epsilon(1e-3));
    CHECK(force_for_deflection(0.0, 1e8, i, 0.1) == 0.0);
    // Cubic in spacing, linear in deflection.
    const double f = force_for_deflection(0.01, 1e8, i, 0.1);
    CHECK(force_for_deflection(0.01, 1e8, i, 0.2) == doctest::Approx(f / 8.0).epsilon(1e-14));
    CHECK(force_for_deflection(0.03, 1e8, i, 0.1) == doctest::Approx(3.0 * f).epsilon(1e-14));
}

TEST_CASE("buckling number predictor") {
    const double ei = kRef.bending_stiffness();
    CHECK(ei == doctest::Approx(7.854e-5).epsilon(1e-4));
    const BucklingQuery q{0.15504, 0.1, 1e8, kRef.second_moment()};
    CHECK(buckling_number(q) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(buckling_number({0.0, 0.1, 1e8, kRef.second_moment()}) == 0.0);
    // Independent evaluation: half the input load on each flanking column.
    CHECK(buckling_number(q) == doctest::Approx(0.15504 / 2 * 0.01 / (kPi2 * ei)).epsilon(1e-12));
    for (double s : {0.02, 0.05, 0.1, 0.15}) {
        const double f = force_for_buckling_number(1.0, s, 1e8, kRef.second_moment());
        CHECK(buckling_number({f, s, 1e8, kRef.second_moment()}) == doctest::Approx(1.0).epsilon(1e-14));
        const double b = buckling_number({0.1, s, 1e8, kRef.second_moment()});
        CHECK(buckling_number({0.3, s, 1e8, kRef.second_moment()}) == doctest::Approx(3.0 * b).epsilon(1e-14));
        CHECK(buckling_number({0.1, 2 * s, 1e8, kRef.second_moment()}) == doctest::Approx(4.0 * b).epsilon(1e-14));
    }
}

TEST_CASE("feature group sizes on crosshatch networks") {
    const GroupParams p{.segment_length = 0.1};
    const auto c6 = columns_of(crosshatch(6));
    CHECK(select_features(c6, FeatureGroup::midpoint_lateral, p).size() == 84);
    CHECK(select_features(c6, FeatureGroup::all, p).size() == 240);
    const auto c4 = columns_of(crosshatch(4));
    CHECK(select_features(c4, FeatureGroup::h_mid_y, p).size() == 20);
    for (int n = 2; n <= 8; ++n) {
        const auto c = columns_of(crosshatch(n));
        CHECK(select_features(c, FeatureGroup::all, p).size() == static_cast<std::size_t>(6 * n * n + 4 * n));
        CHECK(select_features(c, FeatureGroup::midpoint_lateral, p).size() ==
              static_cast<std::size_t>(2 * n * (n + 1)));
    }
}

TEST_CASE("elementary groups partition every column") {
    const GroupParams p{.segment_length = 0.1};
    for (const NetworkSpec& spec : {crosshatch(3), crosshatch(5)}) {
        const auto cols = columns_of(spec);
        std::vector<int> hits(cols.size(), 0);
        for (FeatureGroup g : elementary_groups())
            for (std::size_t i : select_features(cols, g, p)) ++hits[i];
        for (int h : hits) CHECK(h == 1);

        std::set<std::size_t> lateral;
        for (FeatureGroup g : {FeatureGroup::h_mid_y, FeatureGroup::v_mid_x})
            for (std::size_t i : select_features(cols, g, p)) lateral.insert(i);
        const auto ml = select_features(cols, FeatureGroup::midpoint_lateral, p);
        CHECK(std::set<std::size_t>(ml.begin(), ml.end()) == lateral);
        CHECK(std::is_sorted(ml.begin(), ml.end()));
    }
}

TEST_CASE("readout distances follow the fiber grid") {
    for (int n : {3, 4, 5}) {
        const double s = 0.1;
        const NetworkAssembly a = assemble(crosshatch(n, s));
        const double length = (n + 1) * s;
        const Vec2 act = a.fibers[a.actuation.fiber].positions[a.actuation.node];
        for (const ReadoutPoint& r : a.readouts) {
            const Vec2 x = a.fibers[r.fiber_id].positions[r.node_id];
            const bool vertical = r.fiber_id >= static_cast<std::size_t>(n);
            double to_act;
            if (vertical) {
                to_act = std::abs(act.x() - x.x()) + std::abs(x.y() - act.y());
            } else if (std::abs(x.y() - act.y()) < 1e-12) {
                to_act = std::abs(x.x() - act.x());
            } else {
                to_act = std::numeric_limits<double>::infinity();
                for (int j = 1; j <= n; ++j)
                    to_act = std::min(to_act, std::abs(act.x() - j * s) + std::abs(j * s - x.x()));
                to_act += std::abs(act.y() - x.y());
            }
            CHECK(r.distance_to_actuation == doctest::Approx(to_act).epsilon(1e-9));

            double to_end = vertical ? length - x.y() : length - x.x();
            if (r.kind == ReadoutKind::crossing) to_end = std::min(length - x.x(), length - x.y());
            CHECK(r.distance_to_tensioned_end == doctest::Approx(to_end).epsilon(1e-9));
        }

        const auto cols = feature_columns(a.readouts);
        std::size_t near_act = 0, near_spr = 0;
        for (const auto& c : cols) {
            near_act += c.readout.distance_to_actuation <= 2 * s + 1e-12;
            near_spr += c.readout.distance_to_tensioned_end <= s + 1e-12;
        }
        const GroupParams p{.segment_length = s};
        CHECK(select_features(cols, FeatureGroup::near_actuation, p).size() == near_act);
        CHECK(select_features(cols, FeatureGroup::near_springs, p).size() == near_spr);
        GroupParams wide = p;
        wide.radius_segments = 100.0;
        CHECK(select_features(cols, FeatureGroup::near_actuation, wide).size() == cols.size());
    }
}

TEST_CASE("feature group errors") {
    const auto cols = columns_of(crosshatch(3));
    CHECK_THROWS_AS(select_features(cols, FeatureGroup::near_actuation, {}), InvalidGroup);
    const std::vector<FeatureColumn> crossings_only(cols.begin(), cols.begin() + 18);
    CHECK_THROWS_AS(select_features(crossings_only, FeatureGroup::h_mid_x, {.segment_length = 0.1}), InvalidGroup);
    CHECK_THROWS_AS(parse_feature_group("edges"), InvalidGroup);
    for (FeatureGroup g : elementary_groups()) CHECK(parse_feature_group(to_string(g)) == g);
}

TEST_CASE("task parsing") {
    CHECK(parse_task("legendre") == Task{TaskKind::legendre});
    CHECK(parse_task("memory") == Task{TaskKind::memory});
    CHECK(parse_task("narma:5") == Task{TaskKind::narma, 5});
    CHECK(parse_task("features:near_springs") == Task{TaskKind::features, 0, FeatureGroup::near_springs});
    CHECK(parse_task("narma:10").label() == "narma:10");
    CHECK_THROWS_AS(parse_task("narma:"), ConfigError);
    CHECK_THROWS_AS(parse_task("narma:x"), ConfigError);
    CHECK_THROWS_AS(parse_task("ipc"), ConfigError);
    CHECK_THROWS_AS(parse_task("features:bogus"), InvalidGroup);
}

TEST_CASE("sweep points are row-major over force, spacing, size, pretension") {
    SweepGrid g;
    g.base = small_run();
    g.forces = {0.1, 0.2};
    g.spacings = {0.05, 0.08, 0.1};
    g.sizes = {2, 3};
    g.pretensions = {0.01, 0.02};
    REQUIRE(g.point_count() == 24);
    for (std::size_t f = 0; f < 2; ++f)
        for (std::size_t s = 0; s < 3; ++s)
            for (std::size_t z = 0; z < 2; ++z)
                for (std::size_t p = 0; p < 2; ++p) {
                    const std::size_t idx = ((f * 3 + s) * 2 + z) * 2 + p;
                    const RunSpec r = g.point(idx);
                    CHECK(r.network.input_force_max == g.forces[f]);
                    CHECK(r.network.node_spacing == g.spacings[s]);
                    CHECK(r.network.count == g.sizes[z]);
                    CHECK(r.network.pretension == g.pretensions[p]);
                }
    CHECK_THROWS_AS(g.point(24), InvalidArgument);

    SweepGrid empty;
    CHECK(empty.point_count() == 1);
    CHECK(empty.point(0).network.node_spacing == empty.base.network.node_spacing);
}

TEST_CASE("force axes resolve through the closed-form predictors") {
    const double i = kRef.second_moment();
    NetworkSpec spec = crosshatch(4, 0.08);
    CHECK(resolve_force(ForceAxis::absolute, 0.3, spec) == 0.3);
    CHECK(resolve_force(ForceAxis::buckling_number, 1.0, spec) ==
          doctest::Approx(2.0 * kPi2 * 1e8 * i / (0.08 * 0.08)).epsilon(1e-14));
    CHECK(resolve_force(ForceAxis::deflection, 0.0133, spec) ==
          doctest::Approx(48.0 * 0.0133 * 1e8 * i / std::pow(0.08, 3)).epsilon(1e-14));
    NetworkSpec hex = spec;
    hex.topology = Topology::polygon;
    hex.count = 6;
    const double seg = assemble(hex).segment_length;
    CHECK(resolve_force(ForceAxis::buckling_number, 1.0, hex) ==
          doctest::Approx(force_for_buckling_number(1.0, seg, 1e8, i)).epsilon(1e-14));
    CHECK_THROWS_AS(parse_force_axis("newtons"), ConfigError);
}

TEST_CASE("a one-point sweep equals a direct run") {
    SweepGrid g;
    g.base = small_run();
    g.forces = {0.4};
    const SweepTable t = run_sweep(g);
    REQUIRE(t.rows.size() == 1);
    REQUIRE(t.rows[0].ok);
    const RunSpec spec = g.point(0);
    const ReservoirTrace trace = simulate_run(spec, generate_spline_input(spec.signal));
    const CapacityReport direct = evaluate_tasks(trace, spec.tasks, spec.evaluation);
    CHECK(t.rows[0].report.nonlinear->c_nl == direct.nonlinear->c_nl);
    CHECK(t.rows[0].report.memory->c_m == direct.memory->c_m);
    CHECK(t.rows[0].force == 0.4);
    CHECK(t.rows[0].buckling_number == doctest::Approx(buckling_number({0.4, 0.1, 1e8, kRef.second_moment()})));
}

TEST_CASE("sweeps are deterministic and contain failures per row") {
    SweepGrid g;
    g.base = small_run();
    g.forces = {0.2, 0.4};
    g.spacings = {0.1, -0.1};
    g.workers = 3;
    const SweepTable a = run_sweep(g);
    g.workers = 1;
    const SweepTable b = run_sweep(g);
    REQUIRE(a.rows.size() == 4);
    CHECK(a.failures() == 2);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(a.rows[i].index == i);
        CHECK(a.rows[i].ok == b.rows[i].ok);
        CHECK(a.rows[i].ok == (a.rows[i].spacing > 0.0));
        if (!a.rows[i].ok) {
            CHECK(a.rows[i].error.find("spacing") != std::string::npos);
            continue;
        }
        CHECK(a.rows[i].report.nonlinear->c_nl == b.rows[i].report.nonlinear->c_nl);
        CHECK(a.rows[i].report.memory->c_m == b.rows[i].report.memory->c_m);
    }
}

TEST_CASE("feature comparison reports ratios against all columns") {
    RunSpec r = small_run();
    r.evaluation.ridge.washout = 1.0;
    const ReservoirTrace trace = simulate_run(r, generate_spline_input(r.signal));
    const auto res = compare_feature_groups(
        trace, {FeatureGroup::all, FeatureGroup::midpoint_lateral, FeatureGroup::near_actuation}, r.evaluation);
    REQUIRE(res.size() == 3);
    CHECK(res[0].c_nl_ratio == 1.0);
    CHECK(res[0].c_m_ratio == 1.0);
    CHECK(res[0].columns_used == 32);
    CHECK(res[1].columns_used == 12);
    CHECK(res[1].columns_total == 32);
    CHECK(res[1].c_nl_ratio == doctest::Approx(res[1].c_nl / res[0].c_nl));

    const CapacityReport rep = evaluate_tasks(
        trace, {parse_task("features:all"), parse_task("features:all"), parse_task("narma:2")}, r.evaluation);
    CHECK(rep.features.size() == 1);
    CHECK(rep.narma.size() == 1);
    CHECK(!rep.nonlinear);
}

TEST_CASE("buckling detection on a crosshatch network") {
    const NetworkSpec spec = crosshatch(4);
    NetworkAssembly a = settle(assemble(spec));
    perturb(a, 1e-6, 42);
    const double fb = force_for_buckling_number(1.0, 0.1, 1e8, kRef.second_moment());
    CHECK(fb == doctest::Approx(0.15504).epsilon(1e-4));
    const auto watch = default_watch_list(a);
    CHECK(!watch.empty());

    BucklingProbe probe;
    probe.force_max = 0.0;
    const BucklingResult none = detect_buckling(a, probe);
    CHECK(!none.buckled);
    CHECK(none.max_excursion < 1e-5);

    probe.force_max = 0.5 * fb;
    CHECK(!detect_buckling(a, probe).buckled);
    probe.force_max = 1.5 * fb;
    const BucklingResult over = detect_buckling(a, probe);
    CHECK(over.buckled);
    CHECK(over.max_excursion > over.threshold);
    CHECK(over.threshold == doctest::Approx(0.005));
}

TEST_CASE("single column buckles above the Euler load") {
    const double s = 0.1;
    const double pcr = kPi2 * kRef.bending_stiffness() / (s * s);
    NetworkAssembly col = column_assembly(s, 16, kRef);
    perturb(col, 1e-6, 1);
    BucklingProbe probe;
    probe.force_max = 0.9 * pcr;
    CHECK(!detect_buckling(col, probe).buckled);
    probe.force_max = 1.1 * pcr;
    CHECK(detect_buckling(col, probe).buckled);
}

TEST_CASE("static midpoint deflection converges to F s^3 / 48 EI") {
    const double s = 0.1;
    const double load = 1e-4;
    const double expected = load * s * s * s / (48.0 * kRef.bending_stiffness());
    const double coarse = static_midpoint_deflection(s, 8, kRef, load);
    const double fine = static_midpoint_deflection(s, 32, kRef, load);
    CHECK(fine == doctest::Approx(expected).epsilon(0.05));
    CHECK(std::abs(fine - expected) <= std::abs(coarse - expected) + 1e-3 * expected);
}
