#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "fibernet/filament.hpp"
#include "fibernet/signals.hpp"

namespace fibernet {

enum class ReadoutKind { crossing, h_midpoint, v_midpoint };
enum class ReadoutZone { near_actuation, near_springs, interior };
enum class Axis { x, y };

std::string_view to_string(ReadoutKind kind);
std::string_view to_string(ReadoutZone zone);
std::string_view to_string(Axis axis);
ReadoutKind parse_readout_kind(std::string_view s);
ReadoutZone parse_readout_zone(std::string_view s);
Axis parse_axis(std::string_view s);

/// A material point whose planar displacement is part of the reservoir state.
struct ReadoutPoint {
    std::size_t fiber_id = 0;
    std::size_t node_id = 0;
    ReadoutKind kind = ReadoutKind::crossing;
    ReadoutZone zone = ReadoutZone::interior;
    Vec2 baseline_position = Vec2::Zero();
    /// Shortest path along fibers to the actuation node (m).
    double distance_to_actuation = 0.0;
    /// Arc length to the nearest tensioned fiber end among fibers through the point (m).
    double distance_to_tensioned_end = 0.0;
};

/// Metadata for one trace column.
struct FeatureColumn {
    std::size_t point = 0;  // index into the readout registry
    ReadoutPoint readout;
    Axis component = Axis::x;

    std::string name() const;
};

/// Time-indexed readout displacements together with the drive that produced them.
struct ReservoirTrace {
    std::vector<double> times;
    Eigen::MatrixXd features;  // rows = samples, cols = 2 * readout points
    std::vector<FeatureColumn> feature_meta;
    InputSignal input;
    /// Length of the span the buckling predictor refers to (m); 0 when unknown.
    double segment_length = 0.0;

    std::size_t rows() const noexcept { return times.size(); }
    std::size_t cols() const noexcept { return static_cast<std::size_t>(features.cols()); }
    double sample_rate() const noexcept { return input.sample_rate; }
    /// Throws SchemaError when the shape invariants do not hold.
    void validate() const;
};

/// Feature columns in registry order: [x, y] per readout point.
std::vector<FeatureColumn> feature_columns(const std::vector<ReadoutPoint>& readouts);

/// Keeps every factor-th row of the trace and of its input.
ReservoirTrace decimate(const ReservoirTrace& trace, std::size_t factor);

/// Trace restricted to the given columns (order preserved).
ReservoirTrace select_columns(const ReservoirTrace& trace, const std::vector<std::size_t>& columns);

}  // namespace fibernet
