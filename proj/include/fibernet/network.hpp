#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "fibernet/filament.hpp"
#include "fibernet/signals.hpp"
#include "fibernet/trace.hpp"

namespace fibernet {

enum class Topology { crosshatch, polygon };
enum class TensionMode { constant_force, spring_anchor };

std::string_view to_string(Topology t);
Topology parse_topology(std::string_view s);
std::string_view to_string(TensionMode m);
TensionMode parse_tension_mode(std::string_view s);

struct NetworkSpec {
    Topology topology = Topology::crosshatch;
    int count = 4;              // fibers per direction (crosshatch) or polygon vertices
    double node_spacing = 0.1;  // crossing pitch (crosshatch) or circumradius (polygon), m
    MaterialParams material = MaterialParams::reference();
    double pretension = 0.01;   // N
    /// N/m; nullopt resolves to 100 EA / segment length.
    std::optional<double> coupling_stiffness;
    /// N s/m; nullopt resolves to critical damping of the bonded pair.
    std::optional<double> coupling_damping;
    int elements_per_segment = 4;
    /// Index among the horizontal fibers (crosshatch) or chords (polygon);
    /// nullopt picks the central one.
    std::optional<int> actuation_fiber;
    double input_force_max = 0.85;  // N
    TensionMode tension_mode = TensionMode::constant_force;
    double anchor_stiffness = 52.5;  // N/m, spring_anchor mode only

    void validate() const;
};

struct Coupling {
    std::size_t fiber_a, node_a, fiber_b, node_b;
};

/// End load keeping a fiber in tension. In spring-anchor mode the force is
/// magnitude * direction - anchor_stiffness * (x - x_initial).
struct TensionLoad {
    std::size_t fiber = 0;
    std::size_t node = 0;
    Vec2 direction = Vec2::UnitX();
    double magnitude = 0.0;
    double anchor_stiffness = 0.0;
    Vec2 anchor_position = Vec2::Zero();
};

struct ActuationSite {
    std::size_t fiber = 0;
    std::size_t node = 0;
    Vec2 direction = Vec2::UnitY();
};

struct NetworkAssembly {
    std::vector<FilamentMesh> fibers;
    std::vector<Coupling> couplings;
    std::vector<TensionLoad> tension_loads;
    ActuationSite actuation;
    std::vector<ReadoutPoint> readouts;
    double coupling_stiffness = 0.0;
    double coupling_damping = 0.0;
    /// Span between the two crossings around the actuation point (m).
    double segment_length = 0.0;
    double input_force_max = 0.0;
    /// Crosshatch only: fibers [0, N) are horizontal, [N, 2N) vertical.
    std::size_t horizontal_count = 0;
    bool settled = false;

    std::size_t node_count() const;
    std::size_t feature_count() const { return 2 * readouts.size(); }
};

NetworkAssembly assemble(const NetworkSpec& spec);

/// Per-fiber, per-node bond forces (spring on positions, damper on velocities).
std::vector<Points> coupling_forces(const NetworkAssembly& assembly);

/// Per-fiber, per-node external force from the actuator: F_max * u along the
/// actuation direction at the actuation node only.
std::vector<Points> actuation_force(const NetworkAssembly& assembly, double u, double force_max);

/// Displacements of every readout point from its baseline: [x0, y0, x1, y1, ...].
Eigen::VectorXd readout_state(const NetworkAssembly& assembly);

/// Largest time step the network integrator accepts, given the CFL safety
/// applied to fibers. Bonds use a fixed 0.5 fraction of their own limit.
double network_stable_dt(const NetworkAssembly& assembly, double safety);

struct SimOptions {
    double safety = 0.1;
    /// Use the OpenMP rod-force kernel inside each step.
    bool parallel_forces = false;
};

/// Time stepper over a whole assembly. Holds the assembly by value.
class NetworkSimulator {
public:
    explicit NetworkSimulator(NetworkAssembly assembly, SimOptions options = {});

    const NetworkAssembly& assembly() const noexcept { return assembly_; }
    NetworkAssembly release() && { return std::move(assembly_); }

    double dt() const noexcept { return dt_; }
    /// Overrides the step; must not exceed network_stable_dt(assembly, 1).
    void set_dt(double dt);
    double time() const noexcept { return time_; }
    std::int64_t steps() const noexcept { return steps_; }

    /// Advances `substeps` steps with the input ramped linearly from u0 to u1.
    void advance(int substeps, double u0, double u1, double force_max);

    double kinetic_energy() const;
    double elastic_energy() const;

private:
    void compute_forces(double u, double force_max);
    void check_state() const;

    NetworkAssembly assembly_;
    SimOptions options_;
    std::vector<std::vector<double>> masses_;
    std::vector<Points> forces_;
    double dt_ = 0.0;
    double time_ = 0.0;
    std::int64_t steps_ = 0;
    double excursion_limit_ = 0.0;
};

/// Runs the network with pretension and no input until kinetic energy stays
/// below `tolerance` (J); records readout baselines.
NetworkAssembly settle(const NetworkAssembly& assembly, double tolerance = 1e-10,
                       double max_time = 30.0, SimOptions options = {});

/// Seeded symmetry-breaking offset, uniform in [-amplitude, amplitude] per free axis.
void perturb(NetworkAssembly& assembly, double amplitude, std::uint64_t seed);

/// Drives a settled assembly with u(t) (linearly interpolated between samples)
/// and records one readout row per input sample.
ReservoirTrace simulate(const NetworkAssembly& assembly, const InputSignal& input, double force_max,
                        SimOptions options = {});

}  // namespace fibernet
