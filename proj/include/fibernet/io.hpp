#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fibernet/trace.hpp"

namespace fibernet {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

enum class TraceFormat { binary, csv };

TraceFormat parse_trace_format(std::string_view s);

/// Files written for one trace: features, input series, metadata sidecar.
struct TraceFiles {
    std::filesystem::path features;
    std::filesystem::path input;
    std::filesystem::path metadata;
};

TraceFiles trace_files(const std::filesystem::path& directory, TraceFormat format);

/// `metadata_extra` is merged into the sidecar JSON (e.g. a config echo).
TraceFiles write_trace(const std::filesystem::path& directory, const ReservoirTrace& trace,
                       TraceFormat format, const std::string& metadata_extra_json = "{}");

/// Reads a trace back given its metadata sidecar or its directory.
ReservoirTrace read_trace(const std::filesystem::path& path);

}  // namespace fibernet
