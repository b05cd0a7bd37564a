#include "fibernet/filament.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fibernet/error.hpp"
#include "fibernet/kernels.hpp"

namespace fibernet {

MaterialParams::MaterialParams(double youngs_modulus, double density, double diameter,
                               double viscous_damping)
    : youngs_modulus_(youngs_modulus),
      density_(density),
      diameter_(diameter),
      viscous_damping_(viscous_damping) {
    if (!(youngs_modulus > 0.0) || !(density > 0.0) || !(diameter > 0.0))
        throw InvalidArgument("material: Young's modulus, density and diameter must be positive");
    if (!(viscous_damping >= 0.0))
        throw InvalidArgument("material: viscous damping must be non-negative");
    area_ = std::numbers::pi * diameter * diameter / 4.0;
    second_moment_ = std::numbers::pi * std::pow(diameter, 4) / 64.0;
}

MaterialParams MaterialParams::reference() { return {100e6, 1000.0, 2e-3, kDefaultDamping}; }

double MaterialParams::wave_speed() const noexcept { return std::sqrt(youngs_modulus_ / density_); }

MaterialParams MaterialParams::with_damping(double viscous_damping) const {
    return {youngs_modulus_, density_, diameter_, viscous_damping};
}

void FilamentMesh::constrain(std::size_t node, std::uint8_t mask) {
    constraints[node] |= mask;
    if (mask & kFixX) velocities[node].x() = 0.0;
    if (mask & kFixY) velocities[node].y() = 0.0;
}

void FilamentMesh::validate() const {
    if (positions.size() < 3) throw InvalidArgument("filament needs at least 3 nodes");
    if (velocities.size() != positions.size() || constraints.size() != positions.size())
        throw InvalidArgument("filament per-node arrays disagree in length");
    if (rest_lengths.size() + 1 != positions.size())
        throw InvalidArgument("filament element count must equal node count - 1");
    for (double l : rest_lengths)
        if (!(l > 0.0)) throw InvalidArgument("filament rest lengths must be positive");
}

FilamentMesh build_filament(double length, int n_elements, const MaterialParams& material,
                            const Vec2& origin, const Vec2& direction) {
    if (!(length > 0.0)) throw InvalidArgument("filament length must be positive");
    if (n_elements < 2) throw InvalidArgument("filament needs at least 2 elements");
    std::vector<double> stations(static_cast<std::size_t>(n_elements) + 1);
    for (int i = 0; i <= n_elements; ++i) stations[static_cast<std::size_t>(i)] = length * i / n_elements;
    FilamentMesh mesh = build_filament_at(stations, material, origin, direction);
    std::fill(mesh.rest_lengths.begin(), mesh.rest_lengths.end(), length / n_elements);
    return mesh;
}

FilamentMesh build_filament_at(std::span<const double> stations, const MaterialParams& material,
                               const Vec2& origin, const Vec2& direction) {
    if (stations.size() < 3) throw InvalidArgument("filament needs at least 2 elements");
    if (stations.front() != 0.0) throw InvalidArgument("filament stations must start at 0");
    const double dnorm = direction.norm();
    if (!(std::abs(dnorm - 1.0) < 1e-9)) throw InvalidArgument("filament direction must be a unit vector");

    FilamentMesh mesh;
    mesh.material = material;
    const std::size_t n = stations.size();
    mesh.positions.resize(n);
    mesh.velocities.assign(n, Vec2::Zero());
    mesh.constraints.assign(n, kFree);
    mesh.rest_lengths.resize(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        mesh.positions[i] = origin + stations[i] * direction;
        if (i > 0) {
            const double l = stations[i] - stations[i - 1];
            if (!(l > 0.0)) throw InvalidArgument("filament stations must increase strictly");
            mesh.rest_lengths[i - 1] = l;
        }
    }
    return mesh;
}

std::vector<double> lumped_masses(const FilamentMesh& mesh) {
    std::vector<double> m(mesh.node_count(), 0.0);
    const double rho_a = mesh.material.linear_density();
    for (std::size_t k = 0; k < mesh.element_count(); ++k) {
        const double half = 0.5 * rho_a * mesh.rest_lengths[k];
        m[k] += half;
        m[k + 1] += half;
    }
    return m;
}

Points internal_forces(const FilamentMesh& mesh) {
    Points f(mesh.node_count(), Vec2::Zero());
    kernels::add_rod_forces(mesh.positions, mesh.rest_lengths, mesh.material.axial_stiffness(),
                            mesh.material.bending_stiffness(), f);
    return f;
}

Energy energy(const FilamentMesh& mesh) {
    Energy e;
    const auto m = lumped_masses(mesh);
    for (std::size_t i = 0; i < mesh.node_count(); ++i)
        e.kinetic += 0.5 * m[i] * mesh.velocities[i].squaredNorm();
    e.elastic = kernels::rod_elastic_energy(mesh.positions, mesh.rest_lengths,
                                            mesh.material.axial_stiffness(),
                                            mesh.material.bending_stiffness());
    return e;
}

double stable_dt(const FilamentMesh& mesh, double safety) {
    if (!(safety > 0.0 && safety <= 1.0)) throw InvalidArgument("stable_dt: safety must lie in (0, 1]");
    const double l_min = *std::min_element(mesh.rest_lengths.begin(), mesh.rest_lengths.end());
    return safety * l_min / mesh.material.wave_speed();
}

FilamentMesh step(const FilamentMesh& mesh, std::span<const Vec2> external, double dt,
                  std::int64_t step_index) {
    if (!(dt > 0.0)) throw InvalidArgument("step: dt must be positive");
    const double limit = stable_dt(mesh, 1.0);
    if (dt > limit)
        throw StabilityError("step: dt " + std::to_string(dt) + " s exceeds stability bound " +
                             std::to_string(limit) + " s");
    FilamentMesh next = mesh;
    const auto masses = lumped_masses(mesh);
    Points scratch;
    advance(next, external, dt, masses, scratch, step_index);
    return next;
}

void advance(FilamentMesh& mesh, std::span<const Vec2> external, double dt,
             std::span<const double> masses, Points& scratch, std::int64_t step_index) {
    const std::size_t n = mesh.node_count();
    if (!external.empty() && external.size() != n)
        throw InvalidArgument("step: external force count must match node count");
    const double half = 0.5 * dt;
    const double nu = mesh.material.viscous_damping();

    for (std::size_t i = 0; i < n; ++i)
        if (mesh.constraints[i] != kPinned) mesh.positions[i] += half * mesh.velocities[i];
    // Fixed axes keep zero velocity, so the drift above leaves them in place.

    scratch.assign(n, Vec2::Zero());
    kernels::add_rod_forces(mesh.positions, mesh.rest_lengths, mesh.material.axial_stiffness(),
                            mesh.material.bending_stiffness(), scratch);

    bool finite = true;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t c = mesh.constraints[i];
        if (c == kPinned) continue;
        Vec2 f = scratch[i] - nu * masses[i] * mesh.velocities[i];
        if (!external.empty()) f += external[i];
        Vec2& v = mesh.velocities[i];
        v += (dt / masses[i]) * f;
        if (c & kFixX) v.x() = 0.0;
        if (c & kFixY) v.y() = 0.0;
        mesh.positions[i] += half * v;
        finite = finite && mesh.positions[i].allFinite() && v.allFinite();
    }
    if (!finite) throw DivergenceError("filament state became non-finite", step_index);
}

}  // namespace fibernet
