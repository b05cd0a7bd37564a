#include "fibernet/trace.hpp"

#include <array>
#include <string>

#include "fibernet/error.hpp"

namespace fibernet {

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::string_view, N>& names, const char* what) {
    for (std::size_t i = 0; i < N; ++i)
        if (names[i] == s) return static_cast<E>(i);
    throw SchemaError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

constexpr std::array<std::string_view, 3> kKindNames{"crossing", "h_midpoint", "v_midpoint"};
constexpr std::array<std::string_view, 3> kZoneNames{"near_actuation", "near_springs", "interior"};
constexpr std::array<std::string_view, 2> kAxisNames{"x", "y"};

}  // namespace

std::string_view to_string(ReadoutKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }
std::string_view to_string(ReadoutZone zone) { return kZoneNames[static_cast<std::size_t>(zone)]; }
std::string_view to_string(Axis axis) { return kAxisNames[static_cast<std::size_t>(axis)]; }

ReadoutKind parse_readout_kind(std::string_view s) {
    return parse_enum<ReadoutKind>(s, kKindNames, "readout kind");
}
ReadoutZone parse_readout_zone(std::string_view s) {
    return parse_enum<ReadoutZone>(s, kZoneNames, "readout zone");
}
Axis parse_axis(std::string_view s) { return parse_enum<Axis>(s, kAxisNames, "axis"); }

std::string FeatureColumn::name() const {
    return std::string(to_string(readout.kind)) + "_" + std::to_string(point) + "_" +
           std::string(to_string(component));
}

void ReservoirTrace::validate() const {
    if (static_cast<std::size_t>(features.rows()) != times.size())
        throw SchemaError("trace: feature rows do not match time stamps");
    if (input.samples.size() != times.size())
        throw SchemaError("trace: input length does not match trace length");
    if (feature_meta.size() != cols())
        throw SchemaError("trace: column metadata does not match feature columns");
    if (!(input.sample_rate > 0.0)) throw SchemaError("trace: sample rate must be positive");
}

std::vector<FeatureColumn> feature_columns(const std::vector<ReadoutPoint>& readouts) {
    std::vector<FeatureColumn> cols;
    cols.reserve(2 * readouts.size());
    for (std::size_t i = 0; i < readouts.size(); ++i) {
        cols.push_back({i, readouts[i], Axis::x});
        cols.push_back({i, readouts[i], Axis::y});
    }
    return cols;
}

ReservoirTrace decimate(const ReservoirTrace& trace, std::size_t factor) {
    if (factor < 1) throw InvalidArgument("decimate: factor must be >= 1");
    ReservoirTrace out;
    out.feature_meta = trace.feature_meta;
    out.segment_length = trace.segment_length;
    out.input = decimate(trace.input, factor);
    const std::size_t n = (trace.rows() + factor - 1) / factor;
    out.times.resize(n);
    out.features.resize(static_cast<Eigen::Index>(n), trace.features.cols());
    for (std::size_t i = 0; i < n; ++i) {
        out.times[i] = trace.times[i * factor];
        out.features.row(static_cast<Eigen::Index>(i)) =
            trace.features.row(static_cast<Eigen::Index>(i * factor));
    }
    return out;
}

ReservoirTrace select_columns(const ReservoirTrace& trace, const std::vector<std::size_t>& columns) {
    ReservoirTrace out;
    out.times = trace.times;
    out.input = trace.input;
    out.segment_length = trace.segment_length;
    out.features.resize(trace.features.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (columns[j] >= trace.cols()) throw InvalidArgument("select_columns: column out of range");
        out.features.col(static_cast<Eigen::Index>(j)) =
            trace.features.col(static_cast<Eigen::Index>(columns[j]));
        out.feature_meta.push_back(trace.feature_meta[columns[j]]);
    }
    return out;
}

}  // namespace fibernet
