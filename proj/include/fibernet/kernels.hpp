#pragma once

// Hot loops shared by the simulator and the readout trainer. Each kernel has
// a plain serial reference and an OpenMP variant; tests hold them equal and
// bench/ measures the difference.

#include <span>
#include <vector>

#include <Eigen/Core>

#include "fibernet/filament.hpp"

namespace fibernet::kernels {

/// Adds stretching and bending forces of one straight-at-rest rod to `forces`.
/// Throws DegeneracyError when an element is shorter than kMinElementLength.
void add_rod_forces(std::span<const Vec2> x, std::span<const double> rest, double axial_stiffness,
                    double bending_stiffness, std::span<Vec2> forces);

double rod_elastic_energy(std::span<const Vec2> x, std::span<const double> rest,
                          double axial_stiffness, double bending_stiffness);

inline constexpr double kMinElementLength = 1e-9;

/// Mutable view of one fiber for the network force pass.
struct RodSlice {
    std::span<const Vec2> x;
    std::span<const double> rest;
    double axial_stiffness;
    double bending_stiffness;
    std::span<Vec2> forces;
};

namespace serial {

/// Zeroes and fills every slice's force buffer.
void rod_forces(std::span<const RodSlice> rods);

/// Upper and lower triangle of X^T X, naive triple loop.
Eigen::MatrixXd gram(const Eigen::Ref<const Eigen::MatrixXd>& x);

}  // namespace serial

namespace omp {

void rod_forces(std::span<const RodSlice> rods);

/// X^T X computed in column blocks, one block per task.
Eigen::MatrixXd gram(const Eigen::Ref<const Eigen::MatrixXd>& x);

}  // namespace omp

/// Worker count used when a caller passes 0: FIBERNET_WORKERS, else the
/// OpenMP default.
int default_workers();

}  // namespace fibernet::kernels
