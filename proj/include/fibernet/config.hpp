#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fibernet/analysis.hpp"
#include "fibernet/io.hpp"

namespace fibernet {

struct SweepAxes {
    ForceAxis force_axis = ForceAxis::absolute;
    std::vector<double> forces;
    std::vector<double> spacings;
    std::vector<int> sizes;
    std::vector<double> pretensions;

    bool empty() const noexcept {
        return forces.empty() && spacings.empty() && sizes.empty() && pretensions.empty();
    }
};

struct RunConfig {
    RunSpec run;
    std::optional<SweepAxes> sweep;
    std::filesystem::path output_dir = "out";
    TraceFormat format = TraceFormat::binary;
    int workers = 0;  // 0 = FIBERNET_WORKERS or the OpenMP default

    SweepGrid grid() const;
};

/// Parses and fully validates a YAML config. Errors carry `source:line:col`
/// and the dotted field path. Unknown keys are rejected.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// YAML text that parses back to the same config.
std::string emit_config(const RunConfig& config);
/// The same content as a JSON object (for report sidecars).
std::string config_json(const RunConfig& config);

}  // namespace fibernet
