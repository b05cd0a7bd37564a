#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "fibernet/io.hpp"
#include "fibernet/report.hpp"

using namespace fibernet;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "fibernet_cli_test";

struct Result {
    int code;
    std::string err;
};

Result run(const std::string& args) {
    const fs::path err = kWork / "stderr.txt";
    const std::string cmd = std::string(FIBERNET_CLI) + " " + args + " > /dev/null 2> " + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, fs::exists(err) ? read_file(err) : ""};
}

fs::path write_config(const std::string& name, const std::string& text) {
    fs::create_directories(kWork);
    const fs::path p = kWork / name;
    write_file_atomic(p, text);
    return p;
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

const char* kSmall =
    "network:\n  count: 2\n  input_force_max: 0.05\n"
    "signal:\n  duration: 10\n"
    "ridge:\n  washout: 1.0\n"
    "tasks: [legendre, memory]\n";

}  // namespace

TEST_CASE("invalid topology exits 1 and names the field") {
    const auto cfg = write_config("bad.yaml", "network:\n  topology: hexagonal\n");
    const Result r = run("simulate " + cfg.string() + " --out " + (kWork / "bad").string());
    CHECK(r.code == 1);
    CHECK(r.err.find("network.topology") != std::string::npos);
    CHECK(r.err.find(":2:") != std::string::npos);
    CHECK(!fs::exists(kWork / "bad" / "trace.meta.json"));
}

TEST_CASE("simulate then evaluate, reproducibly") {
    const auto cfg = write_config("small.yaml", kSmall);
    const fs::path out = kWork / "small";
    fs::remove_all(out);
    REQUIRE(run("simulate " + cfg.string() + " --out " + out.string() + " --format csv").code == 0);
    const ReservoirTrace t = read_trace(out);
    CHECK(t.rows() == 2500);
    CHECK(t.cols() == 32);
    CHECK(fs::exists(out / "config.yaml"));
    CHECK(fs::exists(out / "timing.json"));

    // The echoed config reproduces the run exactly.
    const fs::path again = kWork / "small_again";
    fs::remove_all(again);
    REQUIRE(run("simulate " + (out / "config.yaml").string() + " --out " + again.string()).code == 0);
    CHECK(read_trace(again).features == t.features);

    // Same output directory both times: the config echo records it.
    const fs::path e1 = kWork / "eval";
    const std::vector<std::string> files{"report.json", "report.csv", "legendre.svg", "memory.svg"};
    REQUIRE(run("evaluate " + out.string() + " --out " + e1.string()).code == 0);
    std::vector<std::string> first;
    for (const auto& f : files) {
        REQUIRE(fs::exists(e1 / f));
        first.push_back(read_file(e1 / f));
    }
    REQUIRE(run("evaluate " + out.string() + " --out " + e1.string()).code == 0);
    for (std::size_t i = 0; i < files.size(); ++i) CHECK(read_file(e1 / files[i]) == first[i]);
    const std::string csv = read_file(e1 / "report.csv");
    CHECK(csv.find("legendre,10,") != std::string::npos);
    CHECK(csv.find("legendre,,C_nl") != std::string::npos);

    const Result bad_task = run("evaluate " + out.string() + " --tasks legendre,ipc --out " + (kWork / "e3").string());
    CHECK(bad_task.code == 1);

    const Result feats =
        run("features " + out.string() + " --groups all,midpoint_lateral,all --no-svg --out " + (kWork / "f").string());
    CHECK(feats.code == 0);
    CHECK(feats.err.find("duplicate group 'all'") != std::string::npos);
    CHECK(feats.err.find("midpoint_lateral: 12 of 32 columns") != std::string::npos);
    CHECK(feats.err.find("all: 32 of 32 columns, C_nl ratio 1, C_m ratio 1") != std::string::npos);
}

TEST_CASE("a 3 x 3 sweep yields nine rows") {
    const auto cfg = write_config("sweep.yaml", std::string(kSmall) +
                                                    "sweep:\n  forces: [0.02, 0.05, 0.08]\n"
                                                    "  spacings: [0.08, 0.1, 0.12]\n");
    const fs::path out = kWork / "sweep";
    fs::remove_all(out);
    const Result r = run("sweep " + cfg.string() + " --workers 3 --out " + out.string());
    CHECK(r.code == 0);
    const std::string csv = read_file(out / "sweep.csv");
    CHECK(line_count(csv) == 10);
    CHECK(fs::exists(out / "heatmap_C_nl.svg"));
    CHECK(fs::exists(out / "capacity_vs_B.svg"));
    CHECK(read_file(out / "heatmap_C_nl.svg").find("B = 1") != std::string::npos);
}

TEST_CASE("failed sweep points exit 3 and stay in the table") {
    const auto cfg = write_config("partial.yaml", std::string(kSmall) +
                                                      "simulation:\n  settle_max_time: 0.02\n"
                                                      "sweep:\n  pretensions: [0.0, 0.01]\n");
    const fs::path out = kWork / "partial";
    fs::remove_all(out);
    const Result r = run("sweep " + cfg.string() + " --no-svg --out " + out.string());
    CHECK(r.code == 3);
    const auto rows = parse_csv(read_file(out / "sweep.csv"));
    REQUIRE(rows.size() == 3);
    CHECK(rows[1][8] == "ok");
    CHECK(rows[2][8] == "failed");
    CHECK(rows[2].back().find("settle") != std::string::npos);
}

TEST_CASE("numerical failure exits 2") {
    const auto cfg = write_config("stiff.yaml", std::string(kSmall) + "simulation:\n  settle_max_time: 0.02\n");
    const Result r = run("simulate " + cfg.string() + " --out " + (kWork / "stiff").string());
    CHECK(r.code == 2);
    CHECK(r.err.find("settle") != std::string::npos);
}

TEST_CASE("usage errors exit 1") {
    CHECK(run("").code == 1);
    CHECK(run("simulate").code == 1);
    CHECK(run("simulate " + (kWork / "missing.yaml").string()).code == 1);
    CHECK(run("--version").code == 0);
}
