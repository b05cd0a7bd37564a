#include "fibernet/network.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <random>
#include <string>

#include <Eigen/Geometry>

#include "fibernet/error.hpp"
#include "fibernet/kernels.hpp"

namespace fibernet {

std::string_view to_string(Topology t) { return t == Topology::crosshatch ? "crosshatch" : "polygon"; }

Topology parse_topology(std::string_view s) {
    if (s == "crosshatch") return Topology::crosshatch;
    if (s == "polygon") return Topology::polygon;
    throw ConfigError("unknown topology '" + std::string(s) + "' (expected crosshatch or polygon)");
}

std::string_view to_string(TensionMode m) {
    return m == TensionMode::constant_force ? "constant_force" : "spring_anchor";
}

TensionMode parse_tension_mode(std::string_view s) {
    if (s == "constant_force") return TensionMode::constant_force;
    if (s == "spring_anchor") return TensionMode::spring_anchor;
    throw ConfigError("unknown tension mode '" + std::string(s) + "'");
}

void NetworkSpec::validate() const {
    if (topology == Topology::crosshatch && count < 2)
        throw InvalidArgument("crosshatch needs at least 2 fibers per direction");
    if (topology == Topology::polygon && count < 4)
        throw InvalidArgument("polygon needs at least 4 vertices");
    if (!(node_spacing > 0.0)) throw InvalidArgument("node spacing must be positive");
    if (elements_per_segment < 4 || elements_per_segment % 2 != 0)
        throw InvalidArgument("elements_per_segment must be even and >= 4");
    if (!(pretension >= 0.0)) throw InvalidArgument("pretension must be non-negative");
    if (coupling_stiffness && !(*coupling_stiffness > 0.0))
        throw InvalidArgument("coupling stiffness must be positive");
    if (coupling_damping && !(*coupling_damping >= 0.0))
        throw InvalidArgument("coupling damping must be non-negative");
    if (!(input_force_max >= 0.0)) throw InvalidArgument("input force must be non-negative");
    if (!(anchor_stiffness >= 0.0)) throw InvalidArgument("anchor stiffness must be non-negative");
    if (actuation_fiber) {
        const int limit = topology == Topology::crosshatch ? count : count * (count - 3) / 2;
        if (*actuation_fiber < 0 || *actuation_fiber >= limit)
            throw InvalidArgument("actuation fiber index out of range");
    }
}

std::size_t NetworkAssembly::node_count() const {
    std::size_t n = 0;
    for (const auto& f : fibers) n += f.node_count();
    return n;
}

namespace {

constexpr double kCoincidenceTol = 1e-9;

void add_tension(NetworkAssembly& a, const NetworkSpec& spec, std::size_t fiber) {
    const FilamentMesh& f = a.fibers[fiber];
    const std::size_t last = f.node_count() - 1;
    TensionLoad load;
    load.fiber = fiber;
    load.node = last;
    load.direction = (f.positions[last] - f.positions[last - 1]).normalized();
    load.magnitude = spec.pretension;
    load.anchor_position = f.positions[last];
    load.anchor_stiffness =
        spec.tension_mode == TensionMode::spring_anchor ? spec.anchor_stiffness : 0.0;
    a.tension_loads.push_back(load);
}

// Shortest fiber-path distance from the actuation node to every mesh node;
// bonds join nodes at zero cost.
std::vector<std::vector<double>> distances_from_actuation(const NetworkAssembly& a) {
    std::vector<std::size_t> offset(a.fibers.size() + 1, 0);
    for (std::size_t f = 0; f < a.fibers.size(); ++f) offset[f + 1] = offset[f] + a.fibers[f].node_count();
    const std::size_t n = offset.back();
    std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
    for (std::size_t f = 0; f < a.fibers.size(); ++f) {
        const auto& rest = a.fibers[f].rest_lengths;
        for (std::size_t k = 0; k < rest.size(); ++k) {
            adj[offset[f] + k].push_back({offset[f] + k + 1, rest[k]});
            adj[offset[f] + k + 1].push_back({offset[f] + k, rest[k]});
        }
    }
    for (const Coupling& c : a.couplings) {
        adj[offset[c.fiber_a] + c.node_a].push_back({offset[c.fiber_b] + c.node_b, 0.0});
        adj[offset[c.fiber_b] + c.node_b].push_back({offset[c.fiber_a] + c.node_a, 0.0});
    }
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    const std::size_t src = offset[a.actuation.fiber] + a.actuation.node;
    dist[src] = 0.0;
    queue.push({0.0, src});
    while (!queue.empty()) {
        const auto [d, u] = queue.top();
        queue.pop();
        if (d > dist[u]) continue;
        for (const auto& [v, w] : adj[u]) {
            if (d + w < dist[v]) {
                dist[v] = d + w;
                queue.push({dist[v], v});
            }
        }
    }
    std::vector<std::vector<double>> out(a.fibers.size());
    for (std::size_t f = 0; f < a.fibers.size(); ++f)
        out[f].assign(dist.begin() + static_cast<std::ptrdiff_t>(offset[f]),
                      dist.begin() + static_cast<std::ptrdiff_t>(offset[f + 1]));
    return out;
}

// Arc length from each node to its fiber's tensioned end.
std::vector<std::vector<double>> distances_to_tension(const NetworkAssembly& a) {
    std::vector<std::vector<double>> out(a.fibers.size());
    for (std::size_t f = 0; f < a.fibers.size(); ++f) {
        const auto& rest = a.fibers[f].rest_lengths;
        out[f].assign(rest.size() + 1, 0.0);
        for (std::size_t k = rest.size(); k-- > 0;) out[f][k] = out[f][k + 1] + rest[k];
    }
    return out;
}

// Fills distance fields and the default zone of every readout point.
void annotate_readouts(NetworkAssembly& a) {
    const auto to_act = distances_from_actuation(a);
    auto to_end = distances_to_tension(a);
    // A crossing belongs to every bonded fiber: take the nearest tensioned end.
    for (const Coupling& c : a.couplings) {
        const double m = std::min(to_end[c.fiber_a][c.node_a], to_end[c.fiber_b][c.node_b]);
        to_end[c.fiber_a][c.node_a] = m;
        to_end[c.fiber_b][c.node_b] = m;
    }
    // Star-bonded clusters need a second pass to reach the centre's partners.
    for (const Coupling& c : a.couplings) {
        const double m = std::min(to_end[c.fiber_a][c.node_a], to_end[c.fiber_b][c.node_b]);
        to_end[c.fiber_a][c.node_a] = m;
        to_end[c.fiber_b][c.node_b] = m;
    }
    const double s = a.segment_length;
    const double slack = 1e-9 * s;
    for (ReadoutPoint& p : a.readouts) {
        p.distance_to_actuation = to_act[p.fiber_id][p.node_id];
        p.distance_to_tensioned_end = to_end[p.fiber_id][p.node_id];
        if (p.distance_to_actuation <= 2.0 * s + slack)
            p.zone = ReadoutZone::near_actuation;
        else if (p.distance_to_tensioned_end <= 1.0 * s + slack)
            p.zone = ReadoutZone::near_springs;
        else
            p.zone = ReadoutZone::interior;
        p.baseline_position = a.fibers[p.fiber_id].positions[p.node_id];
    }
}

void resolve_coupling_constants(NetworkAssembly& a, const NetworkSpec& spec, double reference_segment) {
    a.coupling_stiffness = spec.coupling_stiffness.value_or(
        100.0 * spec.material.axial_stiffness() / reference_segment);
    if (spec.coupling_damping) {
        a.coupling_damping = *spec.coupling_damping;
        return;
    }
    // Critical damping of the lightest bonded pair.
    double m_red = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> masses;
    masses.reserve(a.fibers.size());
    for (const auto& f : a.fibers) masses.push_back(lumped_masses(f));
    for (const Coupling& c : a.couplings) {
        const double ma = masses[c.fiber_a][c.node_a];
        const double mb = masses[c.fiber_b][c.node_b];
        m_red = std::min(m_red, ma * mb / (ma + mb));
    }
    a.coupling_damping = std::isfinite(m_red) ? 2.0 * std::sqrt(a.coupling_stiffness * m_red) : 0.0;
}

NetworkAssembly assemble_crosshatch(const NetworkSpec& spec) {
    const auto n = static_cast<std::size_t>(spec.count);
    const auto eps = static_cast<std::size_t>(spec.elements_per_segment);
    const double s = spec.node_spacing;
    const double length = static_cast<double>(n + 1) * s;
    const int n_el = static_cast<int>((n + 1) * eps);

    NetworkAssembly a;
    a.horizontal_count = n;
    a.segment_length = s;
    a.input_force_max = spec.input_force_max;
    for (std::size_t i = 0; i < n; ++i)
        a.fibers.push_back(build_filament(length, n_el, spec.material,
                                          Vec2(0.0, static_cast<double>(i + 1) * s), Vec2::UnitX()));
    for (std::size_t j = 0; j < n; ++j)
        a.fibers.push_back(build_filament(length, n_el, spec.material,
                                          Vec2(static_cast<double>(j + 1) * s, 0.0), Vec2::UnitY()));
    for (std::size_t f = 0; f < 2 * n; ++f) {
        a.fibers[f].clamp(0);
        add_tension(a, spec, f);
    }

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a.couplings.push_back({i, (j + 1) * eps, n + j, (i + 1) * eps});

    // Registry order: crossings row-major, horizontal midpoints, vertical midpoints.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            a.readouts.push_back({.fiber_id = i, .node_id = (j + 1) * eps, .kind = ReadoutKind::crossing});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k <= n; ++k)
            a.readouts.push_back({.fiber_id = i, .node_id = k * eps + eps / 2, .kind = ReadoutKind::h_midpoint});
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k <= n; ++k)
            a.readouts.push_back(
                {.fiber_id = n + j, .node_id = k * eps + eps / 2, .kind = ReadoutKind::v_midpoint});

    const std::size_t act = spec.actuation_fiber ? static_cast<std::size_t>(*spec.actuation_fiber)
                                                 : (n + 1) / 2 - 1;
    a.actuation = {act, static_cast<std::size_t>(n_el) / 2, Vec2::UnitY()};

    resolve_coupling_constants(a, spec, s);
    return a;
}

struct Intersection {
    Vec2 point;
    std::size_t chord_p, chord_q;
    double t_p, t_q;
};

NetworkAssembly assemble_polygon(const NetworkSpec& spec) {
    const auto n = static_cast<std::size_t>(spec.count);
    const auto eps = static_cast<std::size_t>(spec.elements_per_segment);
    const double radius = spec.node_spacing;

    std::vector<Vec2> vertex(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double theta = std::numbers::pi / 2.0 + 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        vertex[k] = radius * Vec2(std::cos(theta), std::sin(theta));
    }
    struct Chord {
        Vec2 a, b;
    };
    std::vector<Chord> chords;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 2; j < n; ++j)
            if (!(i == 0 && j == n - 1)) chords.push_back({vertex[i], vertex[j]});

    // Proper intersections (interiors only; shared vertices are fiber ends).
    std::vector<Intersection> hits;
    for (std::size_t p = 0; p < chords.size(); ++p) {
        for (std::size_t q = p + 1; q < chords.size(); ++q) {
            const Vec2 r = chords[p].b - chords[p].a;
            const Vec2 d = chords[q].b - chords[q].a;
            const double denom = r.x() * d.y() - r.y() * d.x();
            if (std::abs(denom) < 1e-14 * radius * radius) continue;
            const Vec2 w = chords[q].a - chords[p].a;
            const double tp = (w.x() * d.y() - w.y() * d.x()) / denom;
            const double tq = (w.x() * r.y() - w.y() * r.x()) / denom;
            constexpr double kEnd = 1e-9;
            if (tp <= kEnd || tp >= 1.0 - kEnd || tq <= kEnd || tq >= 1.0 - kEnd) continue;
            hits.push_back({chords[p].a + tp * r, p, q, tp, tq});
        }
    }

    // Merge concurrent intersections into crossing clusters.
    struct Cluster {
        Vec2 point;
        std::vector<std::pair<std::size_t, double>> members;  // chord, parameter
    };
    std::vector<Cluster> clusters;
    auto add_member = [](Cluster& c, std::size_t chord, double t) {
        for (const auto& m : c.members)
            if (m.first == chord) return;
        c.members.push_back({chord, t});
    };
    for (const Intersection& h : hits) {
        Cluster* target = nullptr;
        for (Cluster& c : clusters)
            if ((c.point - h.point).norm() < kCoincidenceTol) {
                target = &c;
                break;
            }
        if (!target) {
            clusters.push_back({h.point, {}});
            target = &clusters.back();
        }
        add_member(*target, h.chord_p, h.t_p);
        add_member(*target, h.chord_q, h.t_q);
    }
    std::sort(clusters.begin(), clusters.end(), [](const Cluster& l, const Cluster& r) {
        if (std::abs(l.point.y() - r.point.y()) > kCoincidenceTol) return l.point.y() > r.point.y();
        return l.point.x() < r.point.x();
    });
    for (Cluster& c : clusters) std::sort(c.members.begin(), c.members.end());

    // Per-chord breakpoints: ends plus every crossing parameter.
    std::vector<std::vector<double>> breaks(chords.size(), std::vector<double>{0.0, 1.0});
    for (const Cluster& c : clusters)
        for (const auto& [chord, t] : c.members) breaks[chord].push_back(t);
    for (auto& b : breaks) std::sort(b.begin(), b.end());

    NetworkAssembly a;
    a.input_force_max = spec.input_force_max;
    double segment_sum = 0.0;
    std::size_t segment_count = 0;
    for (std::size_t c = 0; c < chords.size(); ++c) {
        const Vec2 dir_full = chords[c].b - chords[c].a;
        const double length = dir_full.norm();
        std::vector<double> stations;
        for (std::size_t k = 0; k + 1 < breaks[c].size(); ++k) {
            const double s0 = breaks[c][k] * length;
            const double s1 = breaks[c][k + 1] * length;
            segment_sum += s1 - s0;
            ++segment_count;
            for (std::size_t e = 0; e < eps; ++e)
                stations.push_back(s0 + (s1 - s0) * static_cast<double>(e) / static_cast<double>(eps));
        }
        stations.push_back(length);
        a.fibers.push_back(build_filament_at(stations, spec.material, chords[c].a, dir_full / length));
        a.fibers.back().clamp(0);
        add_tension(a, spec, c);
    }
    a.segment_length = segment_sum / static_cast<double>(segment_count);

    auto node_of = [&](std::size_t chord, double t) {
        const auto it = std::find(breaks[chord].begin(), breaks[chord].end(), t);
        return static_cast<std::size_t>(it - breaks[chord].begin()) * eps;
    };
    for (const Cluster& cl : clusters) {
        const auto [c0, t0] = cl.members.front();
        const std::size_t n0 = node_of(c0, t0);
        for (std::size_t m = 1; m < cl.members.size(); ++m) {
            const auto [c1, t1] = cl.members[m];
            const std::size_t n1 = node_of(c1, t1);
            const double gap = (a.fibers[c0].positions[n0] - a.fibers[c1].positions[n1]).norm();
            if (gap > kCoincidenceTol)
                throw AssemblyError("chords " + std::to_string(c0) + " and " + std::to_string(c1) +
                                    " do not share a node at their crossing (gap " +
                                    std::to_string(gap) + " m)");
            a.couplings.push_back({c0, n0, c1, n1});
        }
        a.readouts.push_back({.fiber_id = c0, .node_id = n0, .kind = ReadoutKind::crossing});
    }
    std::vector<ReadoutPoint> h_mid, v_mid;
    for (std::size_t c = 0; c < chords.size(); ++c) {
        const Vec2 dir = chords[c].b - chords[c].a;
        const bool horizontal = std::abs(dir.x()) >= std::abs(dir.y());
        for (std::size_t k = 0; k + 1 < breaks[c].size(); ++k) {
            ReadoutPoint p{.fiber_id = c, .node_id = k * eps + eps / 2,
                           .kind = horizontal ? ReadoutKind::h_midpoint : ReadoutKind::v_midpoint};
            (horizontal ? h_mid : v_mid).push_back(p);
        }
    }
    a.readouts.insert(a.readouts.end(), h_mid.begin(), h_mid.end());
    a.readouts.insert(a.readouts.end(), v_mid.begin(), v_mid.end());

    // Actuate the chord whose midpoint is nearest the centroid (lowest index on ties).
    std::size_t act = 0;
    if (spec.actuation_fiber) {
        act = static_cast<std::size_t>(*spec.actuation_fiber);
    } else {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < chords.size(); ++c) {
            const double d = (0.5 * (chords[c].a + chords[c].b)).norm();
            if (d < best - 1e-12 * radius) {
                best = d;
                act = c;
            }
        }
    }
    const Vec2 mid = 0.5 * (chords[act].a + chords[act].b);
    const FilamentMesh& af = a.fibers[act];
    std::size_t act_node = 1;
    for (std::size_t k = 1; k + 1 < af.node_count(); ++k)
        if ((af.positions[k] - mid).norm() < (af.positions[act_node] - mid).norm()) act_node = k;
    const Vec2 axis = (chords[act].b - chords[act].a).normalized();
    a.actuation = {act, act_node, Vec2(-axis.y(), axis.x())};
    // Span between the breakpoints around the actuation node.
    {
        const auto& b = breaks[act];
        const double length = (chords[act].b - chords[act].a).norm();
        for (std::size_t k = 0; k + 1 < b.size(); ++k)
            if (act_node >= k * eps && act_node <= (k + 1) * eps) {
                a.segment_length = (b[k + 1] - b[k]) * length;
                break;
            }
    }

    resolve_coupling_constants(a, spec, segment_sum / static_cast<double>(segment_count));
    return a;
}

}  // namespace

NetworkAssembly assemble(const NetworkSpec& spec) {
    spec.validate();
    NetworkAssembly a = spec.topology == Topology::crosshatch ? assemble_crosshatch(spec)
                                                              : assemble_polygon(spec);
    for (const Coupling& c : a.couplings) {
        const double gap =
            (a.fibers[c.fiber_a].positions[c.node_a] - a.fibers[c.fiber_b].positions[c.node_b]).norm();
        if (gap > kCoincidenceTol)
            throw AssemblyError("bonded nodes on fibers " + std::to_string(c.fiber_a) + " and " +
                                std::to_string(c.fiber_b) + " are " + std::to_string(gap) + " m apart");
    }
    annotate_readouts(a);
    return a;
}

std::vector<Points> coupling_forces(const NetworkAssembly& assembly) {
    std::vector<Points> f;
    f.reserve(assembly.fibers.size());
    for (const auto& fiber : assembly.fibers) f.emplace_back(fiber.node_count(), Vec2::Zero());
    for (const Coupling& c : assembly.couplings) {
        const auto& fa = assembly.fibers[c.fiber_a];
        const auto& fb = assembly.fibers[c.fiber_b];
        const Vec2 pull = assembly.coupling_stiffness * (fb.positions[c.node_b] - fa.positions[c.node_a]) +
                          assembly.coupling_damping * (fb.velocities[c.node_b] - fa.velocities[c.node_a]);
        f[c.fiber_a][c.node_a] += pull;
        f[c.fiber_b][c.node_b] -= pull;
    }
    return f;
}

std::vector<Points> actuation_force(const NetworkAssembly& assembly, double u, double force_max) {
    if (!std::isfinite(u)) throw InvalidArgument("actuation input must be finite");
    std::vector<Points> f;
    f.reserve(assembly.fibers.size());
    for (const auto& fiber : assembly.fibers) f.emplace_back(fiber.node_count(), Vec2::Zero());
    f[assembly.actuation.fiber][assembly.actuation.node] = force_max * u * assembly.actuation.direction;
    return f;
}

Eigen::VectorXd readout_state(const NetworkAssembly& assembly) {
    Eigen::VectorXd state(static_cast<Eigen::Index>(assembly.feature_count()));
    for (std::size_t i = 0; i < assembly.readouts.size(); ++i) {
        const ReadoutPoint& p = assembly.readouts[i];
        const Vec2 d = assembly.fibers[p.fiber_id].positions[p.node_id] - p.baseline_position;
        state(static_cast<Eigen::Index>(2 * i)) = d.x();
        state(static_cast<Eigen::Index>(2 * i + 1)) = d.y();
    }
    return state;
}

double network_stable_dt(const NetworkAssembly& assembly, double safety) {
    if (!(safety > 0.0 && safety <= 1.0)) throw InvalidArgument("network_stable_dt: safety must lie in (0, 1]");
    double dt = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> masses;
    masses.reserve(assembly.fibers.size());
    for (const auto& f : assembly.fibers) {
        dt = std::min(dt, stable_dt(f, safety));
        // Flexural limit of the explicit scheme: l^2 / (2 sqrt(EI / rho A)).
        const double l_min = *std::min_element(f.rest_lengths.begin(), f.rest_lengths.end());
        const double a = std::sqrt(f.material.bending_stiffness() / f.material.linear_density());
        dt = std::min(dt, safety * l_min * l_min / (2.0 * a));
        masses.push_back(lumped_masses(f));
    }
    if (assembly.couplings.empty()) return dt;

    // Gershgorin bound on each bond: nodes shared by several bonds stiffen together.
    std::vector<std::vector<int>> degree;
    for (const auto& f : assembly.fibers) degree.emplace_back(f.node_count(), 0);
    for (const Coupling& c : assembly.couplings) {
        ++degree[c.fiber_a][c.node_a];
        ++degree[c.fiber_b][c.node_b];
    }
    const double k = assembly.coupling_stiffness;
    const double c = assembly.coupling_damping;
    for (const Coupling& cp : assembly.couplings) {
        const double lambda = degree[cp.fiber_a][cp.node_a] / masses[cp.fiber_a][cp.node_a] +
                              degree[cp.fiber_b][cp.node_b] / masses[cp.fiber_b][cp.node_b];
        const double omega = std::sqrt(k * lambda);
        const double zeta = c * lambda / (2.0 * omega);
        const double limit = 2.0 / omega * (std::sqrt(1.0 + zeta * zeta) - zeta);
        dt = std::min(dt, 0.5 * limit);
    }
    return dt;
}

NetworkSimulator::NetworkSimulator(NetworkAssembly assembly, SimOptions options)
    : assembly_(std::move(assembly)), options_(options) {
    for (const auto& f : assembly_.fibers) {
        f.validate();
        masses_.push_back(lumped_masses(f));
        forces_.emplace_back(f.node_count(), Vec2::Zero());
    }
    dt_ = network_stable_dt(assembly_, options_.safety);
    Eigen::AlignedBox2d box;
    for (const auto& f : assembly_.fibers)
        for (const Vec2& p : f.positions) box.extend(p);
    excursion_limit_ = 10.0 * std::max(box.diagonal().norm(), 1e-3);
}

void NetworkSimulator::set_dt(double dt) {
    const double limit = network_stable_dt(assembly_, 1.0);
    if (!(dt > 0.0) || dt > limit)
        throw StabilityError("time step " + std::to_string(dt) + " s outside (0, " + std::to_string(limit) + "] s");
    dt_ = dt;
}

void NetworkSimulator::compute_forces(double u, double force_max) {
    std::vector<kernels::RodSlice> rods;
    rods.reserve(assembly_.fibers.size());
    for (std::size_t f = 0; f < assembly_.fibers.size(); ++f) {
        const FilamentMesh& m = assembly_.fibers[f];
        rods.push_back({m.positions, m.rest_lengths, m.material.axial_stiffness(),
                        m.material.bending_stiffness(), forces_[f]});
    }
    if (options_.parallel_forces)
        kernels::omp::rod_forces(rods);
    else
        kernels::serial::rod_forces(rods);

    const double k = assembly_.coupling_stiffness;
    const double c = assembly_.coupling_damping;
    for (const Coupling& cp : assembly_.couplings) {
        const FilamentMesh& fa = assembly_.fibers[cp.fiber_a];
        const FilamentMesh& fb = assembly_.fibers[cp.fiber_b];
        const Vec2 pull = k * (fb.positions[cp.node_b] - fa.positions[cp.node_a]) +
                          c * (fb.velocities[cp.node_b] - fa.velocities[cp.node_a]);
        forces_[cp.fiber_a][cp.node_a] += pull;
        forces_[cp.fiber_b][cp.node_b] -= pull;
    }
    for (const TensionLoad& t : assembly_.tension_loads) {
        Vec2 f = t.magnitude * t.direction;
        if (t.anchor_stiffness > 0.0)
            f -= t.anchor_stiffness * (assembly_.fibers[t.fiber].positions[t.node] - t.anchor_position);
        forces_[t.fiber][t.node] += f;
    }
    if (u != 0.0 && force_max != 0.0)
        forces_[assembly_.actuation.fiber][assembly_.actuation.node] +=
            (force_max * u) * assembly_.actuation.direction;
}

void NetworkSimulator::advance(int substeps, double u0, double u1, double force_max) {
    const double dt = dt_;
    const double half = 0.5 * dt;
    for (int s = 0; s < substeps; ++s) {
        for (auto& f : assembly_.fibers) {
            const std::size_t n = f.node_count();
            for (std::size_t i = 0; i < n; ++i) f.positions[i] += half * f.velocities[i];
        }
        const double u = u0 + (u1 - u0) * (static_cast<double>(s) + 0.5) / static_cast<double>(substeps);
        compute_forces(u, force_max);
        for (std::size_t fi = 0; fi < assembly_.fibers.size(); ++fi) {
            FilamentMesh& f = assembly_.fibers[fi];
            const double nu = f.material.viscous_damping();
            const auto& m = masses_[fi];
            const auto& force = forces_[fi];
            const std::size_t n = f.node_count();
            for (std::size_t i = 0; i < n; ++i) {
                const std::uint8_t c = f.constraints[i];
                if (c == kPinned) continue;
                Vec2& v = f.velocities[i];
                v += (dt / m[i]) * (force[i] - nu * m[i] * v);
                if (c & kFixX) v.x() = 0.0;
                if (c & kFixY) v.y() = 0.0;
                f.positions[i] += half * v;
            }
        }
        ++steps_;
        time_ += dt;
    }
    check_state();
}

void NetworkSimulator::check_state() const {
    for (const auto& f : assembly_.fibers)
        for (std::size_t i = 0; i < f.node_count(); ++i) {
            const Vec2& p = f.positions[i];
            if (!p.allFinite() || !f.velocities[i].allFinite() || p.norm() > excursion_limit_)
                throw DivergenceError("network state diverged", steps_);
        }
}

double NetworkSimulator::kinetic_energy() const {
    double ke = 0.0;
    for (std::size_t fi = 0; fi < assembly_.fibers.size(); ++fi) {
        const auto& f = assembly_.fibers[fi];
        for (std::size_t i = 0; i < f.node_count(); ++i)
            ke += 0.5 * masses_[fi][i] * f.velocities[i].squaredNorm();
    }
    return ke;
}

double NetworkSimulator::elastic_energy() const {
    double e = 0.0;
    for (const auto& f : assembly_.fibers)
        e += kernels::rod_elastic_energy(f.positions, f.rest_lengths, f.material.axial_stiffness(),
                                         f.material.bending_stiffness());
    for (const Coupling& c : assembly_.couplings) {
        const Vec2 d = assembly_.fibers[c.fiber_b].positions[c.node_b] -
                       assembly_.fibers[c.fiber_a].positions[c.node_a];
        e += 0.5 * assembly_.coupling_stiffness * d.squaredNorm();
    }
    return e;
}

NetworkAssembly settle(const NetworkAssembly& assembly, double tolerance, double max_time,
                       SimOptions options) {
    if (!(tolerance > 0.0) || !(max_time > 0.0))
        throw InvalidArgument("settle: tolerance and max_time must be positive");
    bool damped = assembly.coupling_damping > 0.0;
    for (const auto& f : assembly.fibers) damped = damped || f.material.viscous_damping() > 0.0;
    if (!damped) throw InvalidArgument("settle: network has no damping");

    bool loaded = false;
    for (const auto& t : assembly.tension_loads) loaded = loaded || t.magnitude != 0.0;
    NetworkSimulator sim(assembly, options);
    if (loaded || sim.kinetic_energy() > 0.0) {
        const int substeps = std::max(1, static_cast<int>(std::ceil(0.01 / sim.dt())));
        int quiet = 0;
        while (quiet < 2) {
            if (sim.time() >= max_time)
                throw NonConvergence("settle: kinetic energy " + std::to_string(sim.kinetic_energy()) +
                                         " J still above tolerance after " + std::to_string(max_time) + " s",
                                     sim.kinetic_energy());
            sim.advance(substeps, 0.0, 0.0, 0.0);
            quiet = sim.kinetic_energy() < tolerance ? quiet + 1 : 0;
        }
    }
    NetworkAssembly out = std::move(sim).release();
    for (ReadoutPoint& p : out.readouts) p.baseline_position = out.fibers[p.fiber_id].positions[p.node_id];
    out.settled = true;
    return out;
}

void perturb(NetworkAssembly& assembly, double amplitude, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    auto draw = [&] { return amplitude * (2.0 * static_cast<double>(gen() >> 11) * 0x1.0p-53 - 1.0); };
    for (auto& f : assembly.fibers)
        for (std::size_t i = 0; i < f.node_count(); ++i) {
            const std::uint8_t c = f.constraints[i];
            const double dx = draw();
            const double dy = draw();
            if (!(c & kFixX)) f.positions[i].x() += dx;
            if (!(c & kFixY)) f.positions[i].y() += dy;
        }
}

ReservoirTrace simulate(const NetworkAssembly& assembly, const InputSignal& input, double force_max,
                        SimOptions options) {
    if (!assembly.settled) throw InvalidArgument("simulate: assembly has not been settled");
    if (input.samples.empty()) throw InvalidArgument("simulate: empty input");
    NetworkSimulator sim(assembly, options);
    const double interval = 1.0 / input.sample_rate;
    const int substeps = std::max(1, static_cast<int>(std::ceil(interval / sim.dt() - 1e-9)));
    sim.set_dt(interval / substeps);

    ReservoirTrace trace;
    trace.input = input;
    trace.segment_length = assembly.segment_length;
    trace.feature_meta = feature_columns(assembly.readouts);
    const std::size_t n = input.samples.size();
    trace.times.resize(n);
    trace.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(assembly.feature_count()));
    trace.times[0] = 0.0;
    trace.features.row(0) = readout_state(sim.assembly()).transpose();
    for (std::size_t k = 0; k + 1 < n; ++k) {
        sim.advance(substeps, input.samples[k], input.samples[k + 1], force_max);
        trace.times[k + 1] = input.time(k + 1);
        trace.features.row(static_cast<Eigen::Index>(k + 1)) = readout_state(sim.assembly()).transpose();
    }
    return trace;
}

}  // namespace fibernet
