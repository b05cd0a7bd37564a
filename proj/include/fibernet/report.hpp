#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fibernet/analysis.hpp"

namespace fibernet {

inline constexpr const char* kVersion = "0.1.0";

/// Fields that identify a run. Timestamps and wall-clock figures are kept out
/// of here so reports stay byte-identical across repeated runs.
struct Provenance {
    std::string command;
    std::uint64_t seed = 0;
};

/// `config_json` is embedded verbatim as the "config" member ("null" if empty).
std::string capacity_report_json(const CapacityReport& report, const Provenance& provenance,
                                 const std::string& config_json);

/// Long format: task,parameter,metric,value.
std::string capacity_report_csv(const CapacityReport& report);

std::vector<std::string> sweep_header(const std::vector<Task>& tasks);
std::string sweep_csv(const SweepTable& table);
std::string sweep_json(const SweepTable& table, const Provenance& provenance, const std::string& config_json);
/// index,wall_seconds per row.
std::string sweep_timing_csv(const SweepTable& table);

/// Quotes a CSV cell when it holds a separator, quote or newline.
std::string csv_cell(const std::string& s);

/// Splits CSV text into rows of cells, honouring quoted cells.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

// Figures written next to the reports. Each returns the SVG text.
std::string legendre_svg(const NonlinearResult& r);
std::string memory_svg(const MemoryResult& r);
std::string narma_svg(const NarmaResult& r);
std::string features_svg(const std::vector<FeatureGroupResult>& groups);

struct SweepFigures {
    std::vector<std::pair<std::string, std::string>> files;  // name, svg
};

/// Heatmaps of C_nl and C_m over (force, spacing) with the B = 1 and
/// equal-deflection curves overlaid, plus capacity against B.
SweepFigures sweep_svgs(const SweepTable& table, const SweepGrid& grid, double reference_deflection = 0.0133);

}  // namespace fibernet
