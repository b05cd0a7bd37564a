#include "fibernet/config.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "fibernet/error.hpp"

namespace fibernet {

namespace {

using ojson = nlohmann::ordered_json;

std::string where(const std::string& source, const YAML::Mark& mark) {
    if (mark.is_null()) return source;
    return source + ":" + std::to_string(mark.line + 1) + ":" + std::to_string(mark.column + 1);
}

// One mapping of the config with its dotted path. Keys read through it are
// recorded so finish() can reject the rest.
class Section {
public:
    Section(YAML::Node node, std::string path, const std::string& source)
        : node_(std::move(node)), path_(std::move(path)), source_(source) {
        if (node_ && !node_.IsNull() && !node_.IsMap()) fail(node_, "expected a mapping");
    }

    bool present() const { return node_ && node_.IsMap(); }

    template <class T>
    void get(const char* key, T& out) {
        const YAML::Node v = lookup(key);
        if (!v) return;
        try {
            out = v.as<T>();
        } catch (const YAML::Exception&) {
            fail(v, field(key), "has the wrong type");
        }
    }

    template <class T>
    void get(const char* key, std::optional<T>& out) {
        const YAML::Node v = lookup(key);
        if (!v || v.IsNull()) return;
        T value{};
        get(key, value);
        out = value;
    }

    template <class T>
    void get_list(const char* key, std::vector<T>& out) {
        const YAML::Node v = lookup(key);
        if (!v) return;
        if (!v.IsSequence()) fail(v, field(key), "expected a list");
        out.clear();
        for (const YAML::Node& item : v) {
            try {
                out.push_back(item.as<T>());
            } catch (const YAML::Exception&) {
                fail(item, field(key), "list item has the wrong type");
            }
        }
    }

    /// Reads a string and maps it through `parse`, which may throw.
    template <class F>
    void get_enum(const char* key, F parse) {
        const YAML::Node v = lookup(key);
        if (!v) return;
        std::string text;
        try {
            text = v.as<std::string>();
        } catch (const YAML::Exception&) {
            fail(v, field(key), "expected a string");
        }
        try {
            parse(text);
        } catch (const std::exception& e) {
            fail(v, field(key), e.what());
        }
    }

    Section child(const char* key) { return {lookup(key), field(key), source_}; }

    YAML::Node raw(const char* key) { return lookup(key); }

    void finish() const {
        if (!present()) return;
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!used_.contains(key)) fail(kv.first, field(key.c_str()), "unknown key");
        }
    }

    std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

    [[noreturn]] void fail(const YAML::Node& at, const std::string& what) const {
        throw ConfigError(where(source_, at.Mark()) + ": " + (path_.empty() ? "" : "field '" + path_ + "': ") + what);
    }
    [[noreturn]] void fail(const YAML::Node& at, const std::string& name, const std::string& what) const {
        throw ConfigError(where(source_, at.Mark()) + ": field '" + name + "': " + what);
    }

private:
    YAML::Node lookup(const char* key) {
        used_.insert(key);
        if (!present()) return YAML::Node(YAML::NodeType::Undefined);
        const YAML::Node v = node_[key];
        return v ? v : YAML::Node(YAML::NodeType::Undefined);
    }

    YAML::Node node_;
    std::string path_;
    const std::string& source_;
    std::set<std::string> used_;
};

void read_material(Section sec, NetworkSpec& net) {
    double e = net.material.youngs_modulus();
    double rho = net.material.density();
    double d = net.material.diameter();
    double nu = net.material.viscous_damping();
    sec.get("youngs_modulus", e);
    sec.get("density", rho);
    sec.get("diameter", d);
    sec.get("viscous_damping", nu);
    sec.finish();
    try {
        net.material = MaterialParams(e, rho, d, nu);
    } catch (const std::exception& ex) {
        throw ConfigError(std::string("field 'network.material': ") + ex.what());
    }
}

void read_network(Section sec, NetworkSpec& net) {
    sec.get_enum("topology", [&](const std::string& s) { net.topology = parse_topology(s); });
    sec.get("count", net.count);
    sec.get("node_spacing", net.node_spacing);
    sec.get("pretension", net.pretension);
    sec.get("coupling_stiffness", net.coupling_stiffness);
    sec.get("coupling_damping", net.coupling_damping);
    sec.get("elements_per_segment", net.elements_per_segment);
    sec.get("actuation_fiber", net.actuation_fiber);
    sec.get("input_force_max", net.input_force_max);
    sec.get_enum("tension_mode", [&](const std::string& s) { net.tension_mode = parse_tension_mode(s); });
    sec.get("anchor_stiffness", net.anchor_stiffness);
    read_material(sec.child("material"), net);
    sec.finish();
}

void read_signal(Section sec, SignalSpec& s) {
    sec.get("seed", s.seed);
    sec.get("knot_rate", s.knot_rate);
    sec.get("duration", s.duration);
    sec.get("sample_rate", s.sample_rate);
    sec.get("amplitude", s.amplitude);
    sec.finish();
}

void read_evaluation(Section sec, EvaluationSettings& ev) {
    sec.get("memory_horizon", ev.memory_horizon);
    sec.get("memory_lag_step", ev.memory_lag_step);
    sec.get("near_actuation_radius", ev.groups.radius_segments);
    sec.get("near_springs_band", ev.groups.band_segments);
    Section narma = sec.child("narma");
    narma.get("a", ev.narma.a);
    narma.get("b", ev.narma.b);
    narma.get("c", ev.narma.c);
    narma.get("d", ev.narma.d);
    narma.get("lo", ev.narma.lo);
    narma.get("hi", ev.narma.hi);
    narma.get("evaluation_rate", ev.narma.evaluation_rate);
    narma.finish();
    sec.finish();
}

// Runs a validate() call, turning its complaint into a config error.
template <class F>
void check(const std::string& source, const char* section, F validate) {
    try {
        validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(source + ": section '" + section + "': " + e.what());
    }
}

ojson to_ojson(const RunConfig& c) {
    const RunSpec& r = c.run;
    const NetworkSpec& n = r.network;
    ojson net;
    net["topology"] = std::string(to_string(n.topology));
    net["count"] = n.count;
    net["node_spacing"] = n.node_spacing;
    net["pretension"] = n.pretension;
    if (n.coupling_stiffness) net["coupling_stiffness"] = *n.coupling_stiffness;
    if (n.coupling_damping) net["coupling_damping"] = *n.coupling_damping;
    net["elements_per_segment"] = n.elements_per_segment;
    if (n.actuation_fiber) net["actuation_fiber"] = *n.actuation_fiber;
    net["input_force_max"] = n.input_force_max;
    net["tension_mode"] = std::string(to_string(n.tension_mode));
    net["anchor_stiffness"] = n.anchor_stiffness;
    net["material"] = {{"youngs_modulus", n.material.youngs_modulus()},
                       {"density", n.material.density()},
                       {"diameter", n.material.diameter()},
                       {"viscous_damping", n.material.viscous_damping()}};

    const SignalSpec& s = r.signal;
    const EvaluationSettings& ev = r.evaluation;
    ojson tasks = ojson::array();
    for (const Task& t : r.tasks) tasks.push_back(t.label());

    ojson out;
    out["network"] = std::move(net);
    out["signal"] = {{"seed", s.seed},
                     {"knot_rate", s.knot_rate},
                     {"duration", s.duration},
                     {"sample_rate", s.sample_rate},
                     {"amplitude", s.amplitude}};
    out["ridge"] = {{"alpha", ev.ridge.alpha},
                    {"train_fraction", ev.ridge.train_fraction},
                    {"washout", ev.ridge.washout}};
    out["evaluation"] = {{"memory_horizon", ev.memory_horizon},
                         {"memory_lag_step", ev.memory_lag_step},
                         {"near_actuation_radius", ev.groups.radius_segments},
                         {"near_springs_band", ev.groups.band_segments},
                         {"narma",
                          {{"a", ev.narma.a},
                           {"b", ev.narma.b},
                           {"c", ev.narma.c},
                           {"d", ev.narma.d},
                           {"lo", ev.narma.lo},
                           {"hi", ev.narma.hi},
                           {"evaluation_rate", ev.narma.evaluation_rate}}}};
    out["simulation"] = {{"safety", r.sim.safety},
                         {"parallel_forces", r.sim.parallel_forces},
                         {"settle_tolerance", r.settle_tolerance},
                         {"settle_max_time", r.settle_max_time},
                         {"perturbation", r.perturbation}};
    out["tasks"] = std::move(tasks);
    if (c.sweep) {
        ojson sw;
        sw["force_axis"] = std::string(to_string(c.sweep->force_axis));
        if (!c.sweep->forces.empty()) sw["forces"] = c.sweep->forces;
        if (!c.sweep->spacings.empty()) sw["spacings"] = c.sweep->spacings;
        if (!c.sweep->sizes.empty()) sw["sizes"] = c.sweep->sizes;
        if (!c.sweep->pretensions.empty()) sw["pretensions"] = c.sweep->pretensions;
        out["sweep"] = std::move(sw);
    }
    out["output"] = {{"directory", c.output_dir.generic_string()},
                     {"format", c.format == TraceFormat::binary ? "binary" : "csv"}};
    out["workers"] = c.workers;
    return out;
}

void emit_yaml(const ojson& j, YAML::Emitter& out) {
    switch (j.type()) {
        case ojson::value_t::object:
            out << YAML::BeginMap;
            for (const auto& [k, v] : j.items()) {
                out << YAML::Key << k << YAML::Value;
                emit_yaml(v, out);
            }
            out << YAML::EndMap;
            break;
        case ojson::value_t::array:
            out << YAML::Flow << YAML::BeginSeq;
            for (const auto& v : j) emit_yaml(v, out);
            out << YAML::EndSeq;
            break;
        case ojson::value_t::number_float: out << format_double(j.get<double>()); break;
        case ojson::value_t::number_integer: out << j.get<std::int64_t>(); break;
        case ojson::value_t::number_unsigned: out << j.get<std::uint64_t>(); break;
        case ojson::value_t::boolean: out << j.get<bool>(); break;
        case ojson::value_t::string: out << j.get<std::string>(); break;
        default: out << YAML::Null; break;
    }
}

}  // namespace

SweepGrid RunConfig::grid() const {
    SweepGrid g;
    g.base = run;
    g.workers = workers;
    if (sweep) {
        g.force_axis = sweep->force_axis;
        g.forces = sweep->forces;
        g.spacings = sweep->spacings;
        g.sizes = sweep->sizes;
        g.pretensions = sweep->pretensions;
    }
    return g;
}

RunConfig parse_config(const std::string& text, const std::string& source) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(where(source, e.mark) + ": " + e.msg);
    }
    RunConfig cfg;
    Section top(root, "", source);
    read_network(top.child("network"), cfg.run.network);
    read_signal(top.child("signal"), cfg.run.signal);

    Section ridge = top.child("ridge");
    ridge.get("alpha", cfg.run.evaluation.ridge.alpha);
    ridge.get("train_fraction", cfg.run.evaluation.ridge.train_fraction);
    ridge.get("washout", cfg.run.evaluation.ridge.washout);
    ridge.finish();

    read_evaluation(top.child("evaluation"), cfg.run.evaluation);

    Section sim = top.child("simulation");
    sim.get("safety", cfg.run.sim.safety);
    sim.get("parallel_forces", cfg.run.sim.parallel_forces);
    sim.get("settle_tolerance", cfg.run.settle_tolerance);
    sim.get("settle_max_time", cfg.run.settle_max_time);
    sim.get("perturbation", cfg.run.perturbation);
    sim.finish();

    if (const YAML::Node tasks = top.raw("tasks")) {
        if (!tasks.IsSequence()) top.fail(tasks, "tasks", "expected a list");
        cfg.run.tasks.clear();
        for (const YAML::Node& t : tasks) {
            try {
                const Task task = parse_task(t.as<std::string>());
                if (std::find(cfg.run.tasks.begin(), cfg.run.tasks.end(), task) == cfg.run.tasks.end())
                    cfg.run.tasks.push_back(task);
            } catch (const YAML::Exception&) {
                top.fail(t, "tasks", "expected a string");
            } catch (const std::exception& e) {
                top.fail(t, "tasks", e.what());
            }
        }
    }

    Section sweep = top.child("sweep");
    if (sweep.present()) {
        SweepAxes axes;
        sweep.get_enum("force_axis", [&](const std::string& s) { axes.force_axis = parse_force_axis(s); });
        sweep.get_list("forces", axes.forces);
        sweep.get_list("spacings", axes.spacings);
        sweep.get_list("sizes", axes.sizes);
        sweep.get_list("pretensions", axes.pretensions);
        sweep.finish();
        if (axes.empty()) throw ConfigError(source + ": field 'sweep': at least one axis must be non-empty");
        cfg.sweep = std::move(axes);
    }

    Section output = top.child("output");
    std::string dir = cfg.output_dir.generic_string();
    output.get("directory", dir);
    cfg.output_dir = dir;
    output.get_enum("format", [&](const std::string& s) { cfg.format = parse_trace_format(s); });
    output.finish();

    top.get("workers", cfg.workers);
    top.finish();
    if (cfg.workers < 0) throw ConfigError(source + ": field 'workers': must be >= 0");

    check(source, "network", [&] { cfg.run.network.validate(); });
    check(source, "signal", [&] { cfg.run.signal.validate(); });
    check(source, "ridge", [&] { cfg.run.evaluation.ridge.validate(); });
    check(source, "evaluation", [&] { cfg.run.evaluation.narma.validate(); });
    check(source, "simulation", [&] {
        if (!(cfg.run.sim.safety > 0.0 && cfg.run.sim.safety <= 1.0))
            throw InvalidArgument("safety must lie in (0, 1]");
        if (!(cfg.run.settle_tolerance > 0.0) || !(cfg.run.settle_max_time > 0.0))
            throw InvalidArgument("settle_tolerance and settle_max_time must be positive");
        if (cfg.run.perturbation < 0.0) throw InvalidArgument("perturbation must be >= 0");
    });
    if (cfg.sweep) {
        check(source, "sweep", [&] {
            cfg.grid().point(0).network.validate();
            for (int n : cfg.sweep->sizes) {
                NetworkSpec probe = cfg.run.network;
                probe.count = n;
                probe.validate();
            }
            for (double s : cfg.sweep->spacings)
                if (!(s > 0.0)) throw InvalidArgument("spacings must be positive");
            for (double f : cfg.sweep->forces)
                if (f < 0.0) throw InvalidArgument("force levels must be >= 0");
            for (double t : cfg.sweep->pretensions)
                if (t < 0.0) throw InvalidArgument("pretensions must be >= 0");
        });
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path), path.string()); }

std::string emit_config(const RunConfig& config) {
    YAML::Emitter out;
    emit_yaml(to_ojson(config), out);
    return std::string(out.c_str()) + "\n";
}

std::string config_json(const RunConfig& config) { return to_ojson(config).dump(2); }

}  // namespace fibernet
