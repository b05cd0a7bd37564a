#include "fibernet/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fibernet/error.hpp"

namespace fibernet {

using nlohmann::json;

namespace {

constexpr std::array<char, 8> kMagic{'F', 'N', 'T', 'R', 'A', 'C', 'E', '1'};

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t pos) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + static_cast<std::size_t>(i)])) << (8 * i);
    return v;
}

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_double(const std::string& s, const std::string& where) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    while (first != last && *first == ' ') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) throw SchemaError(where + ": cannot parse number '" + s + "'");
    return v;
}

json column_json(const FeatureColumn& c) {
    return {{"name", c.name()},
            {"point", c.point},
            {"fiber", c.readout.fiber_id},
            {"node", c.readout.node_id},
            {"kind", std::string(to_string(c.readout.kind))},
            {"zone", std::string(to_string(c.readout.zone))},
            {"component", std::string(to_string(c.component))},
            {"baseline", {c.readout.baseline_position.x(), c.readout.baseline_position.y()}},
            {"distance_to_actuation", c.readout.distance_to_actuation},
            {"distance_to_tensioned_end", c.readout.distance_to_tensioned_end}};
}

FeatureColumn column_from_json(const json& j) {
    try {
        FeatureColumn c;
        c.point = j.at("point").get<std::size_t>();
        c.readout.fiber_id = j.at("fiber").get<std::size_t>();
        c.readout.node_id = j.at("node").get<std::size_t>();
        c.readout.kind = parse_readout_kind(j.at("kind").get<std::string>());
        c.readout.zone = parse_readout_zone(j.at("zone").get<std::string>());
        c.component = parse_axis(j.at("component").get<std::string>());
        c.readout.baseline_position = Vec2(j.at("baseline").at(0).get<double>(), j.at("baseline").at(1).get<double>());
        c.readout.distance_to_actuation = j.at("distance_to_actuation").get<double>();
        c.readout.distance_to_tensioned_end = j.at("distance_to_tensioned_end").get<double>();
        return c;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("trace metadata column: ") + e.what());
    }
}

}  // namespace

std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw ConfigError("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

TraceFormat parse_trace_format(std::string_view s) {
    if (s == "binary") return TraceFormat::binary;
    if (s == "csv") return TraceFormat::csv;
    throw ConfigError("unknown trace format '" + std::string(s) + "' (expected csv or binary)");
}

TraceFiles trace_files(const std::filesystem::path& directory, TraceFormat format) {
    return {directory / (format == TraceFormat::binary ? "trace.bin" : "trace.csv"),
            directory / "input.csv", directory / "trace.meta.json"};
}

TraceFiles write_trace(const std::filesystem::path& directory, const ReservoirTrace& trace,
                       TraceFormat format, const std::string& metadata_extra_json) {
    trace.validate();
    const TraceFiles files = trace_files(directory, format);
    const auto rows = static_cast<Eigen::Index>(trace.rows());
    const auto cols = trace.features.cols();

    std::string body;
    if (format == TraceFormat::binary) {
        body.reserve(24 + static_cast<std::size_t>(rows * cols) * 8);
        body.append(kMagic.data(), kMagic.size());
        put_u64(body, static_cast<std::uint64_t>(rows));
        put_u64(body, static_cast<std::uint64_t>(cols));
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) put_u64(body, std::bit_cast<std::uint64_t>(trace.features(r, c)));
    } else {
        body = "time_s";
        for (const auto& c : trace.feature_meta) body += "," + c.name();
        body += "\n";
        for (Eigen::Index r = 0; r < rows; ++r) {
            body += format_double(trace.times[static_cast<std::size_t>(r)]);
            for (Eigen::Index c = 0; c < cols; ++c) body += "," + format_double(trace.features(r, c));
            body += "\n";
        }
    }
    write_file_atomic(files.features, body);
    write_signal_csv(files.input, trace.input);

    json meta = json::parse(metadata_extra_json);
    const SignalSpec& s = trace.input.spec;
    meta["format"] = format == TraceFormat::binary ? "binary" : "csv";
    meta["features_file"] = files.features.filename().string();
    meta["input_file"] = files.input.filename().string();
    meta["rows"] = rows;
    meta["cols"] = cols;
    meta["sample_rate"] = trace.input.sample_rate;
    meta["segment_length"] = trace.segment_length;
    meta["input_spec"] = {{"seed", s.seed},
                          {"knot_rate", s.knot_rate},
                          {"duration", s.duration},
                          {"sample_rate", s.sample_rate},
                          {"amplitude", s.amplitude}};
    json columns = json::array();
    for (const auto& c : trace.feature_meta) columns.push_back(column_json(c));
    meta["columns"] = std::move(columns);
    write_file_atomic(files.metadata, meta.dump(2) + "\n");
    return files;
}

ReservoirTrace read_trace(const std::filesystem::path& path) {
    const std::filesystem::path meta_path =
        std::filesystem::is_directory(path) ? path / "trace.meta.json" : path;
    const std::filesystem::path dir = meta_path.parent_path();
    json meta;
    try {
        meta = json::parse(read_file(meta_path));
    } catch (const json::parse_error& e) {
        throw SchemaError("trace metadata '" + meta_path.string() + "': " + e.what());
    }

    ReservoirTrace trace;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::string format;
    std::string features_file;
    std::string input_file;
    try {
        rows = meta.at("rows").get<std::size_t>();
        cols = meta.at("cols").get<std::size_t>();
        format = meta.at("format").get<std::string>();
        features_file = meta.at("features_file").get<std::string>();
        input_file = meta.at("input_file").get<std::string>();
        trace.segment_length = meta.value("segment_length", 0.0);
        const json& s = meta.at("input_spec");
        trace.input.spec = {s.at("seed").get<std::uint64_t>(), s.at("knot_rate").get<double>(),
                            s.at("duration").get<double>(), s.at("sample_rate").get<double>(),
                            s.at("amplitude").get<double>()};
        trace.input.sample_rate = meta.at("sample_rate").get<double>();
        for (const json& c : meta.at("columns")) trace.feature_meta.push_back(column_from_json(c));
    } catch (const json::exception& e) {
        throw SchemaError("trace metadata '" + meta_path.string() + "': " + e.what());
    }
    if (trace.feature_meta.size() != cols) throw SchemaError("trace metadata: column list does not match cols");

    trace.features.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    trace.times.resize(rows);
    const std::string body = read_file(dir / features_file);
    if (format == "binary") {
        if (body.size() != 24 + rows * cols * 8 || std::memcmp(body.data(), kMagic.data(), kMagic.size()) != 0)
            throw SchemaError("trace binary: bad header or size");
        if (get_u64(body, 8) != rows || get_u64(body, 16) != cols)
            throw SchemaError("trace binary: shape disagrees with metadata");
        std::size_t pos = 24;
        for (std::size_t r = 0; r < rows; ++r) {
            trace.times[r] = static_cast<double>(r) / trace.input.sample_rate;
            for (std::size_t c = 0; c < cols; ++c, pos += 8)
                trace.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    std::bit_cast<double>(get_u64(body, pos));
        }
    } else if (format == "csv") {
        std::istringstream in(body);
        std::string line;
        std::getline(in, line);
        if (split(line, ',').size() != cols + 1) throw SchemaError("trace csv: header has wrong column count");
        for (std::size_t r = 0; r < rows; ++r) {
            if (!std::getline(in, line)) throw SchemaError("trace csv: fewer rows than metadata states");
            const auto cells = split(line, ',');
            if (cells.size() != cols + 1) throw SchemaError("trace csv: row " + std::to_string(r) + " has wrong width");
            trace.times[r] = parse_double(cells[0], "trace csv");
            for (std::size_t c = 0; c < cols; ++c)
                trace.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    parse_double(cells[c + 1], "trace csv");
        }
    } else {
        throw SchemaError("trace metadata: unknown format '" + format + "'");
    }

    std::istringstream in(read_file(dir / input_file));
    std::string line;
    std::getline(in, line);
    if (line != "time_s,value") throw SchemaError("input csv: expected header 'time_s,value'");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != 2) throw SchemaError("input csv: expected two columns");
        trace.input.samples.push_back(parse_double(cells[1], "input csv"));
    }
    if (trace.input.samples.size() != rows)
        throw SchemaError("input csv: " + std::to_string(trace.input.samples.size()) +
                          " samples but trace has " + std::to_string(rows) + " rows");
    trace.validate();
    return trace;
}

}  // namespace fibernet
