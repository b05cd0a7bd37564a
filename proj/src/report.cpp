#include "fibernet/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "fibernet/io.hpp"
#include "fibernet/svg.hpp"

namespace fibernet {

namespace {

using ojson = nlohmann::ordered_json;

ojson provenance_json(const Provenance& p) {
    return {{"tool", "fibernet"}, {"version", kVersion}, {"command", p.command}, {"seed", p.seed}};
}

ojson config_member(const std::string& config_json) {
    return config_json.empty() ? ojson(nullptr) : ojson::parse(config_json);
}

ojson report_json(const CapacityReport& r) {
    ojson out = ojson::object();
    if (r.nonlinear) {
        ojson orders = ojson::array();
        for (const TaskScore& s : r.nonlinear->per_order)
            orders.push_back({{"order", static_cast<int>(s.parameter)}, {"train", s.train}, {"test", s.test}});
        out["nonlinear"] = {{"c_nl", r.nonlinear->c_nl}, {"per_order", std::move(orders)}};
    }
    if (r.memory) {
        ojson curve = ojson::array();
        for (const TaskScore& s : r.memory->curve)
            curve.push_back({{"lag", s.parameter}, {"train", s.train}, {"test", s.test}});
        out["memory"] = {{"c_m", r.memory->c_m}, {"curve", std::move(curve)}};
    }
    if (!r.narma.empty()) {
        ojson narma = ojson::array();
        for (const NarmaResult& n : r.narma)
            narma.push_back({{"order", n.order}, {"rmse", n.rmse}, {"idr", n.idr}, {"baseline_rmse", n.baseline_rmse}});
        out["narma"] = std::move(narma);
    }
    if (!r.features.empty()) {
        ojson groups = ojson::array();
        for (const FeatureGroupResult& g : r.features)
            groups.push_back({{"group", std::string(to_string(g.group))},
                              {"columns_used", g.columns_used},
                              {"columns_total", g.columns_total},
                              {"c_nl", g.c_nl},
                              {"c_m", g.c_m},
                              {"c_nl_ratio", g.c_nl_ratio},
                              {"c_m_ratio", g.c_m_ratio}});
        out["features"] = std::move(groups);
    }
    return out;
}

std::string join(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += csv_cell(cells[i]);
    }
    return line + "\n";
}

}  // namespace

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        any = true;
        if (quoted) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(cell));
            cell.clear();
        } else if (c == '\n') {
            row.push_back(std::move(cell));
            cell.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else if (c != '\r') {
            cell += c;
        }
    }
    if (any) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string capacity_report_json(const CapacityReport& report, const Provenance& provenance,
                                 const std::string& config_json) {
    ojson out;
    out["provenance"] = provenance_json(provenance);
    out["config"] = config_member(config_json);
    out["report"] = report_json(report);
    return out.dump(2) + "\n";
}

std::string capacity_report_csv(const CapacityReport& r) {
    std::string out = "task,parameter,metric,value\n";
    auto row = [&out](const std::string& task, const std::string& param, const std::string& metric, double v) {
        out += join({task, param, metric, format_double(v)});
    };
    if (r.nonlinear) {
        for (const TaskScore& s : r.nonlinear->per_order) {
            const std::string k = std::to_string(static_cast<int>(s.parameter));
            row("legendre", k, "train_capacity", s.train);
            row("legendre", k, "test_capacity", s.test);
        }
        row("legendre", "", "C_nl", r.nonlinear->c_nl);
    }
    if (r.memory) {
        for (const TaskScore& s : r.memory->curve) {
            row("memory", format_double(s.parameter), "train_capacity", s.train);
            row("memory", format_double(s.parameter), "test_capacity", s.test);
        }
        row("memory", "", "C_m", r.memory->c_m);
    }
    for (const NarmaResult& n : r.narma) {
        const std::string k = std::to_string(n.order);
        row("narma", k, "rmse", n.rmse);
        row("narma", k, "idr", n.idr);
        row("narma", k, "baseline_rmse", n.baseline_rmse);
    }
    for (const FeatureGroupResult& g : r.features) {
        const std::string name(to_string(g.group));
        row("features", name, "columns_used", static_cast<double>(g.columns_used));
        row("features", name, "columns_total", static_cast<double>(g.columns_total));
        row("features", name, "C_nl", g.c_nl);
        row("features", name, "C_m", g.c_m);
        row("features", name, "C_nl_ratio", g.c_nl_ratio);
        row("features", name, "C_m_ratio", g.c_m_ratio);
    }
    return out;
}

std::vector<std::string> sweep_header(const std::vector<Task>& tasks) {
    std::vector<std::string> h{"index", "topology", "size", "spacing_m", "force_level", "force_N",
                               "pretension_N", "buckling_number", "status", "C_nl", "C_m"};
    for (const Task& t : tasks) {
        switch (t.kind) {
            case TaskKind::legendre:
                for (int k = 1; k <= 10; ++k) h.push_back("legendre_" + std::to_string(k));
                break;
            case TaskKind::memory: break;
            case TaskKind::narma: {
                const std::string p = "narma" + std::to_string(t.narma_order);
                h.push_back(p + "_rmse");
                h.push_back(p + "_idr");
                h.push_back(p + "_baseline_rmse");
                break;
            }
            case TaskKind::features: {
                const std::string p = "features_" + std::string(to_string(t.group));
                h.push_back(p + "_C_nl");
                h.push_back(p + "_C_m");
                break;
            }
        }
    }
    h.push_back("error");
    return h;
}

std::string sweep_csv(const SweepTable& table) {
    std::string out = join(sweep_header(table.tasks));
    for (const SweepRow& r : table.rows) {
        const CapacityReport& rep = r.report;
        auto val = [&](double v) { return r.ok ? format_double(v) : std::string(); };
        std::vector<std::string> cells{std::to_string(r.index),      std::string(to_string(r.topology)),
                                       std::to_string(r.size),       format_double(r.spacing),
                                       format_double(r.force_level), val(r.force),
                                       format_double(r.pretension),  val(r.buckling_number),
                                       r.ok ? "ok" : "failed"};
        cells.push_back(r.ok && rep.nonlinear ? format_double(rep.nonlinear->c_nl) : "");
        cells.push_back(r.ok && rep.memory ? format_double(rep.memory->c_m) : "");
        std::size_t narma_k = 0;
        for (const Task& t : table.tasks) {
            switch (t.kind) {
                case TaskKind::legendre:
                    for (int k = 0; k < 10; ++k)
                        cells.push_back(r.ok && rep.nonlinear ? val(rep.nonlinear->per_order[static_cast<std::size_t>(k)].test) : "");
                    break;
                case TaskKind::memory: break;
                case TaskKind::narma: {
                    const NarmaResult* n = r.ok && narma_k < rep.narma.size() ? &rep.narma[narma_k] : nullptr;
                    ++narma_k;
                    cells.push_back(n ? format_double(n->rmse) : "");
                    cells.push_back(n ? format_double(n->idr) : "");
                    cells.push_back(n ? format_double(n->baseline_rmse) : "");
                    break;
                }
                case TaskKind::features: {
                    const FeatureGroupResult* g = nullptr;
                    for (const auto& f : rep.features)
                        if (f.group == t.group) g = &f;
                    cells.push_back(r.ok && g ? format_double(g->c_nl) : "");
                    cells.push_back(r.ok && g ? format_double(g->c_m) : "");
                    break;
                }
            }
        }
        cells.push_back(r.error);
        out += join(cells);
    }
    return out;
}

std::string sweep_json(const SweepTable& table, const Provenance& provenance, const std::string& config_json) {
    ojson rows = ojson::array();
    for (const SweepRow& r : table.rows) {
        ojson row;
        row["index"] = r.index;
        row["topology"] = std::string(to_string(r.topology));
        row["size"] = r.size;
        row["spacing_m"] = r.spacing;
        row["force_level"] = r.force_level;
        row["force_N"] = r.force;
        row["pretension_N"] = r.pretension;
        row["buckling_number"] = r.buckling_number;
        row["status"] = r.ok ? "ok" : "failed";
        if (r.ok)
            row["report"] = report_json(r.report);
        else
            row["error"] = r.error;
        rows.push_back(std::move(row));
    }
    ojson tasks = ojson::array();
    for (const Task& t : table.tasks) tasks.push_back(t.label());
    ojson out;
    out["provenance"] = provenance_json(provenance);
    out["config"] = config_member(config_json);
    out["tasks"] = std::move(tasks);
    out["failures"] = table.failures();
    out["rows"] = std::move(rows);
    return out.dump(2) + "\n";
}

std::string sweep_timing_csv(const SweepTable& table) {
    std::string out = "index,wall_seconds\n";
    for (const SweepRow& r : table.rows) out += std::to_string(r.index) + "," + format_double(r.wall_seconds) + "\n";
    return out;
}

// ---------------------------------------------------------------------------

std::string legendre_svg(const NonlinearResult& r) {
    std::vector<std::string> labels;
    std::vector<double> values;
    for (const TaskScore& s : r.per_order) {
        labels.push_back("P" + std::to_string(static_cast<int>(s.parameter)));
        values.push_back(s.test);
    }
    char title[96];
    std::snprintf(title, sizeof title, "Legendre capacities (C_nl = %.4f)", r.c_nl);
    return svg::bar_chart({title, "polynomial order", "test capacity"}, labels, values);
}

std::string memory_svg(const MemoryResult& r) {
    svg::Series s{"c[u(t - tau)]", {}, {}};
    for (const TaskScore& t : r.curve) {
        s.x.push_back(t.parameter);
        s.y.push_back(t.test);
    }
    char title[96];
    std::snprintf(title, sizeof title, "Memory capacity curve (C_m = %.4f)", r.c_m);
    return svg::line_chart({title, "lag tau (s)", "test capacity"}, {s});
}

std::string narma_svg(const NarmaResult& r) {
    svg::Series target{"target", r.test_times, r.target};
    svg::Series prediction{"prediction", r.test_times, r.prediction};
    char title[96];
    std::snprintf(title, sizeof title, "NARMA-%d test split (RMSE %.4g, IDR %.4g)", r.order, r.rmse, r.idr);
    return svg::line_chart({title, "time (s)", "NARMA output"}, {target, prediction});
}

std::string features_svg(const std::vector<FeatureGroupResult>& groups) {
    std::vector<std::string> names;
    svg::Series nl{"C_nl ratio", {}, {}};
    svg::Series m{"C_m ratio", {}, {}};
    for (const FeatureGroupResult& g : groups) {
        names.push_back(std::string(to_string(g.group)) + " (" + std::to_string(g.columns_used) + ")");
        nl.y.push_back(g.c_nl_ratio);
        m.y.push_back(g.c_m_ratio);
    }
    return svg::grouped_bar_chart({"Feature groups against all columns", "group (columns used)", "ratio to all"},
                                  names, {nl, m});
}

namespace {

// Force level, read on `axis`, that corresponds to force `f` at span `s`.
double level_for_force(ForceAxis axis, double f, double s, const MaterialParams& m) {
    switch (axis) {
        case ForceAxis::absolute: return f;
        case ForceAxis::buckling_number:
            return buckling_number({f, s, m.youngs_modulus(), m.second_moment()});
        case ForceAxis::deflection: return f * s * s * s / (48.0 * m.youngs_modulus() * m.second_moment());
    }
    return f;
}

std::string suffix(const SweepGrid& g, std::size_t z, std::size_t p) {
    std::string out;
    if (g.sizes.size() > 1) out += "_N" + std::to_string(g.sizes[z]);
    if (g.pretensions.size() > 1) out += "_Ft" + format_double(g.pretensions[p]);
    return out;
}

}  // namespace

SweepFigures sweep_svgs(const SweepTable& table, const SweepGrid& grid, double reference_deflection) {
    SweepFigures out;
    const std::size_t nf = std::max<std::size_t>(grid.forces.size(), 1);
    const std::size_t ns = std::max<std::size_t>(grid.spacings.size(), 1);
    const std::size_t nz = std::max<std::size_t>(grid.sizes.size(), 1);
    const std::size_t np = std::max<std::size_t>(grid.pretensions.size(), 1);
    if (table.rows.size() != nf * ns * nz * np) return out;
    auto row_at = [&](std::size_t f, std::size_t s, std::size_t z, std::size_t p) -> const SweepRow& {
        return table.rows[((f * ns + s) * nz + z) * np + p];
    };
    const bool has_nl = std::any_of(table.tasks.begin(), table.tasks.end(), [](const Task& t) { return t.kind == TaskKind::legendre; });
    const bool has_m = std::any_of(table.tasks.begin(), table.tasks.end(), [](const Task& t) { return t.kind == TaskKind::memory; });

    if (grid.forces.size() > 1 && grid.spacings.size() > 1) {
        std::vector<double> xs = grid.spacings;
        std::vector<double> ys = grid.forces;
        const MaterialParams& m = grid.base.network.material;
        std::vector<svg::Series> overlays;
        if (grid.base.network.topology == Topology::crosshatch) {
            svg::Series b1{"B = 1", {}, {}};
            svg::Series eq{"deflection " + format_double(reference_deflection * 1000.0) + " mm", {}, {}};
            const double lo = *std::min_element(xs.begin(), xs.end());
            const double hi = *std::max_element(xs.begin(), xs.end());
            for (int k = 0; k <= 200; ++k) {
                const double s = lo + (hi - lo) * k / 200.0;
                b1.x.push_back(s);
                b1.y.push_back(level_for_force(grid.force_axis,
                                               force_for_buckling_number(1.0, s, m.youngs_modulus(), m.second_moment()), s, m));
                eq.x.push_back(s);
                eq.y.push_back(level_for_force(grid.force_axis,
                                               force_for_deflection(reference_deflection, m.youngs_modulus(), m.second_moment(), s), s, m));
            }
            overlays = {b1, eq};
        }
        const bool sorted = std::is_sorted(xs.begin(), xs.end()) && std::is_sorted(ys.begin(), ys.end());
        if (!sorted) overlays.clear();
        for (std::size_t z = 0; z < nz; ++z)
            for (std::size_t p = 0; p < np; ++p) {
                Eigen::MatrixXd nl(static_cast<Eigen::Index>(nf), static_cast<Eigen::Index>(ns));
                Eigen::MatrixXd mem = nl;
                for (std::size_t f = 0; f < nf; ++f)
                    for (std::size_t s = 0; s < ns; ++s) {
                        const SweepRow& r = row_at(f, s, z, p);
                        const double nan = std::numeric_limits<double>::quiet_NaN();
                        nl(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(s)) =
                            r.ok && r.report.nonlinear ? r.report.nonlinear->c_nl : nan;
                        mem(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(s)) =
                            r.ok && r.report.memory ? r.report.memory->c_m : nan;
                    }
                const std::string ylabel = "force level (" + std::string(to_string(grid.force_axis)) + ")";
                if (has_nl)
                    out.files.emplace_back("heatmap_C_nl" + suffix(grid, z, p) + ".svg",
                                           svg::heatmap({"Nonlinear capacity C_nl", "spacing (m)", ylabel}, xs, ys, nl, overlays));
                if (has_m)
                    out.files.emplace_back("heatmap_C_m" + suffix(grid, z, p) + ".svg",
                                           svg::heatmap({"Memory capacity C_m", "spacing (m)", ylabel}, xs, ys, mem, overlays));
            }
    }

    svg::Series nl{"C_nl", {}, {}};
    svg::Series mem{"C_m", {}, {}};
    for (const SweepRow& r : table.rows) {
        if (!r.ok) continue;
        if (r.report.nonlinear) {
            nl.x.push_back(r.buckling_number);
            nl.y.push_back(r.report.nonlinear->c_nl);
        }
        if (r.report.memory) {
            mem.x.push_back(r.buckling_number);
            mem.y.push_back(r.report.memory->c_m);
        }
    }
    std::vector<svg::Series> scatter;
    if (has_nl) scatter.push_back(nl);
    if (has_m) scatter.push_back(mem);
    if (!scatter.empty())
        out.files.emplace_back("capacity_vs_B.svg",
                               svg::scatter_chart({"Capacity against buckling number", "buckling number B", "capacity"},
                                                  scatter, 1.0));

    auto axis_chart = [&](const char* name, const char* xlabel, auto value_of, std::size_t count) {
        if (count < 2 || scatter.empty()) return;
        std::vector<svg::Series> series;
        for (const svg::Series& s : scatter) series.push_back({s.name, {}, {}});
        for (const SweepRow& r : table.rows) {
            if (!r.ok) continue;
            std::size_t k = 0;
            if (has_nl) {
                series[k].x.push_back(value_of(r));
                series[k++].y.push_back(r.report.nonlinear->c_nl);
            }
            if (has_m) {
                series[k].x.push_back(value_of(r));
                series[k].y.push_back(r.report.memory->c_m);
            }
        }
        out.files.emplace_back(name, svg::scatter_chart({std::string("Capacity against ") + xlabel, xlabel, "capacity"}, series));
    };
    axis_chart("capacity_vs_size.svg", "network size N", [](const SweepRow& r) { return static_cast<double>(r.size); },
               grid.sizes.size());
    axis_chart("capacity_vs_pretension.svg", "pretension (N)", [](const SweepRow& r) { return r.pretension; },
               grid.pretensions.size());
    return out;
}

}  // namespace fibernet
