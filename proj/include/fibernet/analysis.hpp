#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fibernet/network.hpp"
#include "fibernet/reservoir.hpp"
#include "fibernet/signals.hpp"
#include "fibernet/trace.hpp"

namespace fibernet {

// ---------------------------------------------------------------------------
// Closed-form predictors

/// Central load that deflects a simply supported span s by delta: 48 delta E I / s^3.
double force_for_deflection(double delta, double youngs_modulus, double second_moment, double spacing);

struct BucklingQuery {
    double input_force_max = 0.0;  // N
    double spacing = 0.0;          // m
    double youngs_modulus = 0.0;   // Pa
    double second_moment = 0.0;    // m^4
};

/// (F_max / 2) s^2 / (pi^2 E I); values >= 1 predict buckling of the flanking columns.
double buckling_number(const BucklingQuery& q);

/// Input force at which buckling_number reaches `b`.
double force_for_buckling_number(double b, double spacing, double youngs_modulus, double second_moment);

// ---------------------------------------------------------------------------
// Buckling detection on the nonlinear simulator

/// A node whose sideways deflection is monitored: its distance from the chord
/// through nodes chord_a and chord_b of the same fiber, relative to the
/// distance at the start of the probe.
struct WatchedNode {
    std::size_t fiber = 0;
    std::size_t node = 0;
    std::size_t chord_a = 0;
    std::size_t chord_b = 0;
};

/// Signed distance of `node` from the line through the chord nodes.
double chord_offset(const FilamentMesh& fiber, const WatchedNode& w);

struct BucklingProbe {
    /// Input level held at the end of the ramp. Negative pushes the actuation
    /// node against the clamped ends, i.e. compresses the flanking columns.
    double peak_input = -1.0;
    double force_max = 0.0;
    double ramp_time = 0.3;  // s
    double hold_time = 2.0;  // s
    /// Excursion (m) that counts as buckled; nullopt means 5% of the segment length.
    std::optional<double> threshold;
    /// Nodes whose transverse excursion is monitored; empty selects the
    /// default watch list of the assembly.
    std::vector<WatchedNode> watch;
};

struct BucklingResult {
    bool buckled = false;
    double max_excursion = 0.0;  // m
    double threshold = 0.0;      // m
};

/// Crosshatch: midpoints of the segments of the vertical fibers flanking the
/// actuation point that lie between the actuated row and the clamps. Column
/// fixture: its midpoint against the end-to-end chord. Polygon: every
/// midpoint against its segment chord.
std::vector<WatchedNode> default_watch_list(const NetworkAssembly& assembly);

/// Ramps the actuation to its peak, holds it, and reports the largest
/// excursion of the watched nodes from their baselines.
BucklingResult detect_buckling(const NetworkAssembly& assembly, const BucklingProbe& probe,
                               SimOptions options = {});

/// Single pinned-roller column of length `span` lying on the x axis, loaded
/// axially at its roller end through the actuation site.
NetworkAssembly column_assembly(double span, int n_elements, const MaterialParams& material);

/// Quasi-static midpoint deflection of a simply supported fiber under a
/// central transverse load, found by dynamic relaxation.
double static_midpoint_deflection(double span, int n_elements, const MaterialParams& material, double load);

// ---------------------------------------------------------------------------
// Readout feature groups

enum class FeatureGroup {
    crossings_x,
    crossings_y,
    h_mid_x,
    h_mid_y,
    v_mid_x,
    v_mid_y,
    midpoint_lateral,
    near_actuation,
    near_springs,
    all,
};

std::string_view to_string(FeatureGroup g);
FeatureGroup parse_feature_group(std::string_view s);
const std::vector<FeatureGroup>& elementary_groups();

struct GroupParams {
    double radius_segments = 2.0;  // near_actuation graph radius
    double band_segments = 1.0;    // near_springs band width
    double segment_length = 0.0;   // m; <= 0 takes the trace's segment length
};

std::vector<std::size_t> select_features(std::span<const FeatureColumn> columns, FeatureGroup group,
                                         const GroupParams& params);

// ---------------------------------------------------------------------------
// Task evaluation

enum class TaskKind { legendre, memory, narma, features };

struct Task {
    TaskKind kind = TaskKind::legendre;
    int narma_order = 0;
    FeatureGroup group = FeatureGroup::all;

    std::string label() const;
    bool operator==(const Task&) const = default;
};

Task parse_task(std::string_view s);

struct FeatureGroupResult {
    FeatureGroup group = FeatureGroup::all;
    std::size_t columns_used = 0;
    std::size_t columns_total = 0;
    double c_nl = 0.0;
    double c_m = 0.0;
    double c_nl_ratio = 0.0;
    double c_m_ratio = 0.0;
};

struct CapacityReport {
    std::optional<NonlinearResult> nonlinear;
    std::optional<MemoryResult> memory;
    std::vector<NarmaResult> narma;
    std::vector<FeatureGroupResult> features;
};

struct EvaluationSettings {
    RidgeConfig ridge;
    NarmaConfig narma;  // order is overridden per task
    GroupParams groups;
    double memory_horizon = 1.0;
    double memory_lag_step = 0.02;
};

CapacityReport evaluate_tasks(const ReservoirTrace& trace, const std::vector<Task>& tasks,
                              const EvaluationSettings& settings);

/// C_nl and C_m of each group next to the all-columns baseline.
std::vector<FeatureGroupResult> compare_feature_groups(const ReservoirTrace& trace,
                                                       const std::vector<FeatureGroup>& groups,
                                                       const EvaluationSettings& settings);

// ---------------------------------------------------------------------------
// Single runs and sweeps

struct RunSpec {
    NetworkSpec network;
    SignalSpec signal;
    EvaluationSettings evaluation;
    std::vector<Task> tasks{{TaskKind::legendre}, {TaskKind::memory}};
    double settle_tolerance = 1e-10;  // J
    double settle_max_time = 30.0;    // s
    double perturbation = 1e-6;       // m
    SimOptions sim;
};

/// assemble -> settle -> perturb -> simulate under `input`.
ReservoirTrace simulate_run(const RunSpec& spec, const InputSignal& input);

/// How the values on the force axis are read.
enum class ForceAxis {
    absolute,         // input_force_max in N
    buckling_number,  // B at the point's segment length
    deflection,       // central deflection (m) at the point's segment length
};

std::string_view to_string(ForceAxis f);
ForceAxis parse_force_axis(std::string_view s);

/// input_force_max for `level` read on `axis`, using the assembled segment length.
double resolve_force(ForceAxis axis, double level, const NetworkSpec& spec);

struct SweepGrid {
    RunSpec base;
    ForceAxis force_axis = ForceAxis::absolute;
    std::vector<double> forces;       // read according to force_axis
    std::vector<double> spacings;     // m
    std::vector<int> sizes;           // N (fibers per direction / vertices)
    std::vector<double> pretensions;  // N
    int workers = 0;                  // 0 = default_workers()

    std::size_t point_count() const;
    /// Grid point `index` in row-major order over (force, spacing, size, pretension),
    /// with the force level left unresolved.
    RunSpec raw_point(std::size_t index) const;
    /// Force level on the force axis for point `index`.
    double force_level(std::size_t index) const;
    RunSpec point(std::size_t index) const;
};

struct SweepRow {
    std::size_t index = 0;
    Topology topology = Topology::crosshatch;
    int size = 0;
    double spacing = 0.0;
    double force_level = 0.0;
    double force = 0.0;
    double pretension = 0.0;
    double buckling_number = 0.0;
    bool ok = false;
    std::string error;
    CapacityReport report;
    double wall_seconds = 0.0;
};

struct SweepTable {
    std::vector<Task> tasks;
    std::vector<SweepRow> rows;

    std::size_t failures() const;
};

SweepTable run_sweep(const SweepGrid& grid);

}  // namespace fibernet
