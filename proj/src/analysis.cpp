#include "fibernet/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <numbers>
#include <string>

#include "fibernet/error.hpp"
#include "fibernet/kernels.hpp"

namespace fibernet {

double force_for_deflection(double delta, double youngs_modulus, double second_moment, double spacing) {
    if (delta < 0.0 || !(youngs_modulus > 0.0) || !(second_moment > 0.0) || !(spacing > 0.0))
        throw InvalidArgument("force_for_deflection: arguments must be positive");
    return 48.0 * delta * youngs_modulus * second_moment / (spacing * spacing * spacing);
}

double buckling_number(const BucklingQuery& q) {
    if (q.input_force_max < 0.0 || !(q.spacing > 0.0) || !(q.youngs_modulus > 0.0) || !(q.second_moment > 0.0))
        throw InvalidArgument("buckling_number: query fields must be positive");
    const double p = 0.5 * q.input_force_max;
    return p * q.spacing * q.spacing / (std::numbers::pi * std::numbers::pi * q.youngs_modulus * q.second_moment);
}

double force_for_buckling_number(double b, double spacing, double youngs_modulus, double second_moment) {
    if (b < 0.0 || !(spacing > 0.0) || !(youngs_modulus > 0.0) || !(second_moment > 0.0))
        throw InvalidArgument("force_for_buckling_number: arguments must be positive");
    return 2.0 * b * std::numbers::pi * std::numbers::pi * youngs_modulus * second_moment / (spacing * spacing);
}

// ---------------------------------------------------------------------------

double chord_offset(const FilamentMesh& fiber, const WatchedNode& w) {
    const Vec2& a = fiber.positions.at(w.chord_a);
    const Vec2& b = fiber.positions.at(w.chord_b);
    const Vec2 d = b - a;
    const double len = d.norm();
    if (!(len > 0.0)) throw DegeneracyError("chord_offset: chord nodes coincide");
    const Vec2 r = fiber.positions.at(w.node) - a;
    return (d.x() * r.y() - d.y() * r.x()) / len;
}

std::vector<WatchedNode> default_watch_list(const NetworkAssembly& assembly) {
    std::vector<WatchedNode> watch;
    if (assembly.fibers.size() == 1) {
        const std::size_t last = assembly.fibers[0].node_count() - 1;
        for (const ReadoutPoint& p : assembly.readouts) watch.push_back({p.fiber_id, p.node_id, 0, last});
        return watch;
    }
    // Segment ends are the nodes where the fiber is bonded or clamped, plus its ends.
    std::vector<std::vector<std::size_t>> breaks(assembly.fibers.size());
    for (std::size_t f = 0; f < assembly.fibers.size(); ++f) breaks[f] = {0, assembly.fibers[f].node_count() - 1};
    for (const Coupling& c : assembly.couplings) {
        breaks[c.fiber_a].push_back(c.node_a);
        breaks[c.fiber_b].push_back(c.node_b);
    }
    for (auto& b : breaks) {
        std::sort(b.begin(), b.end());
        b.erase(std::unique(b.begin(), b.end()), b.end());
    }
    auto segment_of = [&](std::size_t fiber, std::size_t node) {
        const auto& b = breaks[fiber];
        const auto hi = std::upper_bound(b.begin(), b.end(), node);
        return std::pair{*(hi - 1), *hi};
    };

    if (assembly.horizontal_count > 0) {
        const std::size_t n = assembly.horizontal_count;
        const Vec2 act = assembly.fibers[assembly.actuation.fiber].positions[assembly.actuation.node];
        const double s = assembly.segment_length;
        for (const ReadoutPoint& p : assembly.readouts) {
            if (p.kind != ReadoutKind::v_midpoint || p.fiber_id < n) continue;
            const FilamentMesh& f = assembly.fibers[p.fiber_id];
            if (std::abs(f.positions[0].x() - act.x()) >= s * (1.0 + 1e-9)) continue;
            if (f.positions[p.node_id].y() >= act.y()) continue;
            const auto [a, b] = segment_of(p.fiber_id, p.node_id);
            watch.push_back({p.fiber_id, p.node_id, a, b});
        }
        return watch;
    }
    for (const ReadoutPoint& p : assembly.readouts) {
        if (p.kind == ReadoutKind::crossing) continue;
        const auto [a, b] = segment_of(p.fiber_id, p.node_id);
        watch.push_back({p.fiber_id, p.node_id, a, b});
    }
    return watch;
}

BucklingResult detect_buckling(const NetworkAssembly& assembly, const BucklingProbe& probe, SimOptions options) {
    if (!(probe.ramp_time >= 0.0) || !(probe.hold_time > 0.0))
        throw InvalidArgument("detect_buckling: ramp and hold times must be non-negative and positive");
    const std::vector<WatchedNode> watch = probe.watch.empty() ? default_watch_list(assembly) : probe.watch;
    if (watch.empty()) throw InvalidArgument("detect_buckling: nothing to watch");

    BucklingResult result;
    result.threshold = probe.threshold.value_or(0.05 * assembly.segment_length);
    if (!(result.threshold > 0.0)) throw InvalidArgument("detect_buckling: threshold must be positive");

    std::vector<double> baseline;
    for (const WatchedNode& w : watch) baseline.push_back(chord_offset(assembly.fibers.at(w.fiber), w));

    NetworkSimulator sim(assembly, options);
    const double chunk = 0.01;
    const int substeps = std::max(1, static_cast<int>(std::ceil(chunk / sim.dt())));
    const double end = probe.ramp_time + probe.hold_time;
    auto input_at = [&](double t) {
        if (probe.ramp_time <= 0.0 || t >= probe.ramp_time) return probe.peak_input;
        return probe.peak_input * t / probe.ramp_time;
    };
    while (sim.time() < end) {
        const double t0 = sim.time();
        const double t1 = t0 + substeps * sim.dt();
        sim.advance(substeps, input_at(t0), input_at(t1), probe.force_max);
        for (std::size_t i = 0; i < watch.size(); ++i) {
            const double v = chord_offset(sim.assembly().fibers[watch[i].fiber], watch[i]);
            result.max_excursion = std::max(result.max_excursion, std::abs(v - baseline[i]));
        }
        if (result.max_excursion > result.threshold) {
            result.buckled = true;
            break;
        }
    }
    return result;
}

namespace {

NetworkAssembly single_span(double span, int n_elements, const MaterialParams& material) {
    if (n_elements < 2 || n_elements % 2 != 0)
        throw InvalidArgument("span fixture needs an even element count >= 2");
    NetworkAssembly a;
    a.fibers.push_back(build_filament(span, n_elements, material, Vec2::Zero(), Vec2::UnitX()));
    FilamentMesh& f = a.fibers[0];
    const std::size_t last = f.node_count() - 1;
    f.clamp(0);
    f.constrain(last, kFixY);
    a.segment_length = span;
    const auto mid = static_cast<std::size_t>(n_elements / 2);
    ReadoutPoint p{.fiber_id = 0, .node_id = mid, .kind = ReadoutKind::h_midpoint};
    p.baseline_position = f.positions[mid];
    p.distance_to_tensioned_end = span - f.positions[mid].x();
    a.readouts.push_back(p);
    return a;
}

}  // namespace

NetworkAssembly column_assembly(double span, int n_elements, const MaterialParams& material) {
    NetworkAssembly a = single_span(span, n_elements, material);
    a.actuation = {0, a.fibers[0].node_count() - 1, Vec2::UnitX()};
    a.readouts[0].distance_to_actuation = span - a.readouts[0].baseline_position.x();
    a.settled = true;
    return a;
}

double static_midpoint_deflection(double span, int n_elements, const MaterialParams& material, double load) {
    // Damping near the first bending frequency relaxes fastest; it leaves the
    // static solution untouched.
    const double omega1 = std::pow(std::numbers::pi / span, 2) *
                          std::sqrt(material.bending_stiffness() / material.linear_density());
    NetworkAssembly a = single_span(span, n_elements, material.with_damping(omega1));
    const std::size_t mid = a.readouts[0].node_id;
    a.actuation = {0, mid, -Vec2::UnitY()};

    NetworkSimulator sim(std::move(a));
    const int substeps = std::max(1, static_cast<int>(std::ceil(0.01 / sim.dt())));
    double previous = 0.0;
    while (sim.time() < 60.0) {
        sim.advance(substeps, 1.0, 1.0, load);
        const double y = -sim.assembly().fibers[0].positions[mid].y();
        if (std::abs(y - previous) <= 1e-7 * std::abs(y) && sim.time() > 10.0 / omega1) return y;
        previous = y;
    }
    throw NonConvergence("static_midpoint_deflection: no equilibrium after 60 s", sim.kinetic_energy());
}

// ---------------------------------------------------------------------------

std::string_view to_string(FeatureGroup g) {
    switch (g) {
        case FeatureGroup::crossings_x: return "crossings_x";
        case FeatureGroup::crossings_y: return "crossings_y";
        case FeatureGroup::h_mid_x: return "h_mid_x";
        case FeatureGroup::h_mid_y: return "h_mid_y";
        case FeatureGroup::v_mid_x: return "v_mid_x";
        case FeatureGroup::v_mid_y: return "v_mid_y";
        case FeatureGroup::midpoint_lateral: return "midpoint_lateral";
        case FeatureGroup::near_actuation: return "near_actuation";
        case FeatureGroup::near_springs: return "near_springs";
        case FeatureGroup::all: return "all";
    }
    return "all";
}

FeatureGroup parse_feature_group(std::string_view s) {
    for (int i = 0; i <= static_cast<int>(FeatureGroup::all); ++i) {
        const auto g = static_cast<FeatureGroup>(i);
        if (to_string(g) == s) return g;
    }
    throw InvalidGroup("unknown feature group '" + std::string(s) + "'");
}

const std::vector<FeatureGroup>& elementary_groups() {
    static const std::vector<FeatureGroup> groups{FeatureGroup::crossings_x, FeatureGroup::crossings_y,
                                                  FeatureGroup::h_mid_x,     FeatureGroup::h_mid_y,
                                                  FeatureGroup::v_mid_x,     FeatureGroup::v_mid_y};
    return groups;
}

std::vector<std::size_t> select_features(std::span<const FeatureColumn> columns, FeatureGroup group,
                                         const GroupParams& params) {
    const double s = params.segment_length;
    if ((group == FeatureGroup::near_actuation || group == FeatureGroup::near_springs) && !(s > 0.0))
        throw InvalidGroup(std::string(to_string(group)) + " needs a positive segment length");
    const double slack = 1e-9 * s;

    auto member = [&](const FeatureColumn& c) {
        const ReadoutKind k = c.readout.kind;
        const Axis a = c.component;
        switch (group) {
            case FeatureGroup::crossings_x: return k == ReadoutKind::crossing && a == Axis::x;
            case FeatureGroup::crossings_y: return k == ReadoutKind::crossing && a == Axis::y;
            case FeatureGroup::h_mid_x: return k == ReadoutKind::h_midpoint && a == Axis::x;
            case FeatureGroup::h_mid_y: return k == ReadoutKind::h_midpoint && a == Axis::y;
            case FeatureGroup::v_mid_x: return k == ReadoutKind::v_midpoint && a == Axis::x;
            case FeatureGroup::v_mid_y: return k == ReadoutKind::v_midpoint && a == Axis::y;
            case FeatureGroup::midpoint_lateral:
                return (k == ReadoutKind::h_midpoint && a == Axis::y) || (k == ReadoutKind::v_midpoint && a == Axis::x);
            case FeatureGroup::near_actuation:
                return c.readout.distance_to_actuation <= params.radius_segments * s + slack;
            case FeatureGroup::near_springs:
                return c.readout.distance_to_tensioned_end <= params.band_segments * s + slack;
            case FeatureGroup::all: return true;
        }
        return false;
    };

    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (member(columns[i])) out.push_back(i);
    if (out.empty()) throw InvalidGroup("feature group '" + std::string(to_string(group)) + "' selects no columns");
    return out;
}

// ---------------------------------------------------------------------------

std::string Task::label() const {
    switch (kind) {
        case TaskKind::legendre: return "legendre";
        case TaskKind::memory: return "memory";
        case TaskKind::narma: return "narma:" + std::to_string(narma_order);
        case TaskKind::features: return "features:" + std::string(to_string(group));
    }
    return {};
}

Task parse_task(std::string_view s) {
    if (s == "legendre") return {TaskKind::legendre};
    if (s == "memory") return {TaskKind::memory};
    const auto colon = s.find(':');
    const std::string_view head = s.substr(0, colon);
    const std::string_view arg = colon == std::string_view::npos ? std::string_view{} : s.substr(colon + 1);
    if (head == "narma") {
        int n = 0;
        const auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), n);
        if (arg.empty() || ec != std::errc() || ptr != arg.data() + arg.size() || n < 1)
            throw ConfigError("task '" + std::string(s) + "': expected narma:<order>");
        return {TaskKind::narma, n};
    }
    if (head == "features" && !arg.empty()) return {TaskKind::features, 0, parse_feature_group(arg)};
    throw ConfigError("unknown task '" + std::string(s) + "' (expected legendre, memory, narma:n, features:group)");
}

namespace {

GroupParams resolved_groups(const ReservoirTrace& trace, const EvaluationSettings& settings) {
    GroupParams g = settings.groups;
    if (!(g.segment_length > 0.0)) g.segment_length = trace.segment_length;
    return g;
}

double ratio(double part, double whole) { return whole > 0.0 ? part / whole : 0.0; }

}  // namespace

std::vector<FeatureGroupResult> compare_feature_groups(const ReservoirTrace& trace,
                                                       const std::vector<FeatureGroup>& groups,
                                                       const EvaluationSettings& settings) {
    const GroupParams params = resolved_groups(trace, settings);
    const double c_nl_all = nonlinear_capacity(trace, settings.ridge).c_nl;
    const double c_m_all =
        memory_capacity(trace, settings.ridge, settings.memory_horizon, settings.memory_lag_step).c_m;

    std::vector<FeatureGroupResult> out;
    for (FeatureGroup g : groups) {
        FeatureGroupResult r;
        r.group = g;
        r.columns_total = trace.cols();
        if (g == FeatureGroup::all) {
            r.columns_used = trace.cols();
            r.c_nl = c_nl_all;
            r.c_m = c_m_all;
        } else {
            const auto cols = select_features(trace.feature_meta, g, params);
            const ReservoirTrace sub = select_columns(trace, cols);
            r.columns_used = cols.size();
            r.c_nl = nonlinear_capacity(sub, settings.ridge).c_nl;
            r.c_m = memory_capacity(sub, settings.ridge, settings.memory_horizon, settings.memory_lag_step).c_m;
        }
        r.c_nl_ratio = g == FeatureGroup::all ? 1.0 : ratio(r.c_nl, c_nl_all);
        r.c_m_ratio = g == FeatureGroup::all ? 1.0 : ratio(r.c_m, c_m_all);
        out.push_back(r);
    }
    return out;
}

CapacityReport evaluate_tasks(const ReservoirTrace& trace, const std::vector<Task>& tasks,
                              const EvaluationSettings& settings) {
    trace.validate();
    CapacityReport report;
    std::vector<FeatureGroup> groups;
    for (const Task& t : tasks) {
        switch (t.kind) {
            case TaskKind::legendre:
                if (!report.nonlinear) report.nonlinear = nonlinear_capacity(trace, settings.ridge);
                break;
            case TaskKind::memory:
                if (!report.memory)
                    report.memory =
                        memory_capacity(trace, settings.ridge, settings.memory_horizon, settings.memory_lag_step);
                break;
            case TaskKind::narma: {
                NarmaConfig cfg = settings.narma;
                cfg.order = t.narma_order;
                report.narma.push_back(evaluate_narma(trace, settings.ridge, cfg));
                break;
            }
            case TaskKind::features:
                if (std::find(groups.begin(), groups.end(), t.group) == groups.end()) groups.push_back(t.group);
                break;
        }
    }
    if (!groups.empty()) report.features = compare_feature_groups(trace, groups, settings);
    return report;
}

// ---------------------------------------------------------------------------

ReservoirTrace simulate_run(const RunSpec& spec, const InputSignal& input) {
    NetworkAssembly a = settle(assemble(spec.network), spec.settle_tolerance, spec.settle_max_time, spec.sim);
    if (spec.perturbation > 0.0) perturb(a, spec.perturbation, spec.signal.seed);
    return simulate(a, input, spec.network.input_force_max, spec.sim);
}

std::size_t SweepGrid::point_count() const {
    auto n = [](std::size_t k) { return std::max<std::size_t>(k, 1); };
    return n(forces.size()) * n(spacings.size()) * n(sizes.size()) * n(pretensions.size());
}

std::string_view to_string(ForceAxis f) {
    switch (f) {
        case ForceAxis::absolute: return "absolute";
        case ForceAxis::buckling_number: return "buckling_number";
        case ForceAxis::deflection: return "deflection";
    }
    return "absolute";
}

ForceAxis parse_force_axis(std::string_view s) {
    if (s == "absolute") return ForceAxis::absolute;
    if (s == "buckling_number") return ForceAxis::buckling_number;
    if (s == "deflection") return ForceAxis::deflection;
    throw ConfigError("unknown force axis '" + std::string(s) + "' (expected absolute, buckling_number, deflection)");
}

double resolve_force(ForceAxis axis, double level, const NetworkSpec& spec) {
    if (axis == ForceAxis::absolute) return level;
    const double s = spec.topology == Topology::crosshatch ? spec.node_spacing : assemble(spec).segment_length;
    const double e = spec.material.youngs_modulus();
    const double i = spec.material.second_moment();
    return axis == ForceAxis::buckling_number ? force_for_buckling_number(level, s, e, i)
                                              : force_for_deflection(level, e, i, s);
}

RunSpec SweepGrid::raw_point(std::size_t index) const {
    if (index >= point_count()) throw InvalidArgument("sweep point index out of range");
    RunSpec spec = base;
    auto take = [&index](const auto& axis, auto& field) {
        const std::size_t n = std::max<std::size_t>(axis.size(), 1);
        const std::size_t k = index % n;
        index /= n;
        if (!axis.empty()) field = axis[k];
    };
    // Innermost axis first.
    take(pretensions, spec.network.pretension);
    take(sizes, spec.network.count);
    take(spacings, spec.network.node_spacing);
    take(forces, spec.network.input_force_max);
    return spec;
}

double SweepGrid::force_level(std::size_t index) const { return raw_point(index).network.input_force_max; }

RunSpec SweepGrid::point(std::size_t index) const {
    RunSpec spec = raw_point(index);
    spec.network.input_force_max = resolve_force(force_axis, spec.network.input_force_max, spec.network);
    return spec;
}

std::size_t SweepTable::failures() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return !r.ok; }));
}

SweepTable run_sweep(const SweepGrid& grid) {
    grid.base.network.validate();
    grid.base.signal.validate();
    grid.base.evaluation.ridge.validate();
    const InputSignal input = generate_spline_input(grid.base.signal);
    const std::size_t n = grid.point_count();
    SweepTable table;
    table.tasks = grid.base.tasks;
    table.rows.resize(n);
    const int workers = grid.workers > 0 ? grid.workers : kernels::default_workers();

#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        SweepRow& row = table.rows[idx];
        const auto start = std::chrono::steady_clock::now();
        const RunSpec raw = grid.raw_point(idx);
        row.index = idx;
        row.topology = raw.network.topology;
        row.size = raw.network.count;
        row.spacing = raw.network.node_spacing;
        row.force_level = raw.network.input_force_max;
        row.pretension = raw.network.pretension;
        try {
            const RunSpec spec = grid.point(idx);
            spec.network.validate();
            row.force = spec.network.input_force_max;
            const double segment = assemble(spec.network).segment_length;
            row.buckling_number = buckling_number({spec.network.input_force_max, segment,
                                                   spec.network.material.youngs_modulus(),
                                                   spec.network.material.second_moment()});
            const ReservoirTrace trace = simulate_run(spec, input);
            row.report = evaluate_tasks(trace, spec.tasks, spec.evaluation);
            row.ok = true;
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
        }
        row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    return table;
}

}  // namespace fibernet
