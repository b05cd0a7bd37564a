#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace fibernet {

using Vec2 = Eigen::Vector2d;
using Points = std::vector<Vec2>;

/// Fiber material. Area and second moment of area are derived once at
/// construction; the fields are immutable afterwards.
class MaterialParams {
public:
    MaterialParams(double youngs_modulus, double density, double diameter,
                   double viscous_damping = kDefaultDamping);

    /// 2 mm diameter, 100 MPa, 1000 kg/m^3, 5 1/s damping.
    static MaterialParams reference();

    double youngs_modulus() const noexcept { return youngs_modulus_; }
    double density() const noexcept { return density_; }
    double diameter() const noexcept { return diameter_; }
    double viscous_damping() const noexcept { return viscous_damping_; }

    double area() const noexcept { return area_; }
    double second_moment() const noexcept { return second_moment_; }
    double axial_stiffness() const noexcept { return youngs_modulus_ * area_; }
    double bending_stiffness() const noexcept { return youngs_modulus_ * second_moment_; }
    double linear_density() const noexcept { return density_ * area_; }
    /// Axial wave speed sqrt(E / rho).
    double wave_speed() const noexcept;

    MaterialParams with_damping(double viscous_damping) const;

    static constexpr double kDefaultDamping = 5.0;

    bool operator==(const MaterialParams&) const = default;

private:
    double youngs_modulus_;
    double density_;
    double diameter_;
    double viscous_damping_;
    double area_;
    double second_moment_;
};

/// Per-node kinematic constraint, as a mask of fixed axes.
enum Constraint : std::uint8_t {
    kFree = 0,
    kFixX = 1,
    kFixY = 2,
    kPinned = kFixX | kFixY,
};

/// A planar discretized fiber: a polyline of nodes joined by elements.
struct FilamentMesh {
    Points positions;
    Points velocities;
    std::vector<double> rest_lengths;
    MaterialParams material = MaterialParams::reference();
    std::vector<std::uint8_t> constraints;

    std::size_t node_count() const noexcept { return positions.size(); }
    std::size_t element_count() const noexcept { return rest_lengths.size(); }
    bool is_clamped(std::size_t node) const { return constraints[node] == kPinned; }
    void clamp(std::size_t node) { constrain(node, kPinned); }
    /// Adds `mask` to the node's fixed axes and zeroes the matching velocity.
    void constrain(std::size_t node, std::uint8_t mask);
    /// Throws InvalidArgument when the structural invariants are broken.
    void validate() const;
};

struct Energy {
    double kinetic = 0.0;
    double elastic = 0.0;
    double total() const noexcept { return kinetic + elastic; }
};

FilamentMesh build_filament(double length, int n_elements, const MaterialParams& material,
                            const Vec2& origin, const Vec2& direction);

/// Straight fiber with nodes at the given arc-length stations, which must
/// start at 0 and increase strictly. Used where crossings dictate the grid.
FilamentMesh build_filament_at(std::span<const double> stations, const MaterialParams& material,
                               const Vec2& origin, const Vec2& direction);

/// Lumped nodal masses, rho * A * (half of each adjacent rest length).
std::vector<double> lumped_masses(const FilamentMesh& mesh);

/// Stretching plus bending forces; throws DegeneracyError on a collapsed element.
Points internal_forces(const FilamentMesh& mesh);

Energy energy(const FilamentMesh& mesh);

double stable_dt(const FilamentMesh& mesh, double safety);

/// One damped position-Verlet step. `external` is empty or one force per node.
FilamentMesh step(const FilamentMesh& mesh, std::span<const Vec2> external, double dt,
                  std::int64_t step_index = 0);

/// In-place form of step() for long runs. `masses` must come from lumped_masses().
void advance(FilamentMesh& mesh, std::span<const Vec2> external, double dt,
             std::span<const double> masses, Points& scratch, std::int64_t step_index = 0);

}  // namespace fibernet
