#include "fibernet/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fibernet/error.hpp"

namespace fibernet::kernels {

namespace {

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

[[noreturn]] void throw_degenerate(std::size_t element, double length) {
    throw DegeneracyError("element " + std::to_string(element) + " collapsed to length " +
                          std::to_string(length) + " m");
}

// Curvature measure of the turning angle phi between consecutive edges:
// psi = 2 tan(phi / 2) = 2 (e1 x e2) / (|e1||e2| + e1 . e2).
inline double turning_measure(const Vec2& e1, const Vec2& e2, double l1, double l2) {
    const double denom = l1 * l2 + e1.dot(e2);
    return 2.0 * cross(e1, e2) / denom;
}

}  // namespace

void add_rod_forces(std::span<const Vec2> x, std::span<const double> rest, double axial_stiffness,
                    double bending_stiffness, std::span<Vec2> forces) {
    const std::size_t n_el = rest.size();
    Vec2 e_prev = Vec2::Zero();
    double l_prev = 0.0;
    for (std::size_t k = 0; k < n_el; ++k) {
        const Vec2 e = x[k + 1] - x[k];
        const double l = e.norm();
        if (!(l >= kMinElementLength)) throw_degenerate(k, l);

        // Stretch: E = 1/2 (EA / l0) (l - l0)^2.
        const double tension = axial_stiffness * (l - rest[k]) / rest[k];
        const Vec2 f_axial = (tension / l) * e;
        forces[k] += f_axial;
        forces[k + 1] -= f_axial;

        if (k > 0) {
            // Bending at node k between e_prev and e: E = 1/2 EI psi^2 / lbar.
            const double denom = l_prev * l + e_prev.dot(e);
            if (!(denom > 1e-300)) throw_degenerate(k, 0.0);
            const double c = cross(e_prev, e);
            const double psi = 2.0 * c / denom;
            const double lbar = 0.5 * (rest[k - 1] + rest[k]);
            const double g = bending_stiffness * psi / lbar;

            const Vec2 dc_de1(e.y(), -e.x());
            const Vec2 dc_de2(-e_prev.y(), e_prev.x());
            const Vec2 dd_de1 = (l / l_prev) * e_prev + e;
            const Vec2 dd_de2 = (l_prev / l) * e + e_prev;
            const double inv_d2 = 1.0 / (denom * denom);
            const Vec2 dpsi_de1 = 2.0 * (dc_de1 * denom - c * dd_de1) * inv_d2;
            const Vec2 dpsi_de2 = 2.0 * (dc_de2 * denom - c * dd_de2) * inv_d2;

            forces[k - 1] += g * dpsi_de1;
            forces[k] -= g * (dpsi_de1 - dpsi_de2);
            forces[k + 1] -= g * dpsi_de2;
        }
        e_prev = e;
        l_prev = l;
    }
}

double rod_elastic_energy(std::span<const Vec2> x, std::span<const double> rest,
                          double axial_stiffness, double bending_stiffness) {
    double stretch = 0.0;
    double bend = 0.0;
    const std::size_t n_el = rest.size();
    for (std::size_t k = 0; k < n_el; ++k) {
        const Vec2 e = x[k + 1] - x[k];
        const double l = e.norm();
        const double dl = l - rest[k];
        stretch += 0.5 * axial_stiffness / rest[k] * dl * dl;
        if (k > 0) {
            const Vec2 e_prev = x[k] - x[k - 1];
            const double psi = turning_measure(e_prev, e, e_prev.norm(), l);
            const double lbar = 0.5 * (rest[k - 1] + rest[k]);
            bend += 0.5 * bending_stiffness * psi * psi / lbar;
        }
    }
    return stretch + bend;
}

namespace serial {

void rod_forces(std::span<const RodSlice> rods) {
    for (const RodSlice& rod : rods) {
        std::fill(rod.forces.begin(), rod.forces.end(), Vec2::Zero());
        add_rod_forces(rod.x, rod.rest, rod.axial_stiffness, rod.bending_stiffness, rod.forces);
    }
}

Eigen::MatrixXd gram(const Eigen::Ref<const Eigen::MatrixXd>& x) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            double s = 0.0;
            for (Eigen::Index r = 0; r < n; ++r) s += x(r, i) * x(r, j);
            g(i, j) = s;
            g(j, i) = s;
        }
    }
    return g;
}

}  // namespace serial

namespace omp {

void rod_forces(std::span<const RodSlice> rods) {
    const auto n = static_cast<std::ptrdiff_t>(rods.size());
    // Exceptions cannot cross the parallel region; collect and rethrow.
    std::exception_ptr failure;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const RodSlice& rod = rods[static_cast<std::size_t>(i)];
        try {
            std::fill(rod.forces.begin(), rod.forces.end(), Vec2::Zero());
            add_rod_forces(rod.x, rod.rest, rod.axial_stiffness, rod.bending_stiffness,
                           rod.forces);
        } catch (...) {
#pragma omp critical(fibernet_rod_forces)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
}

Eigen::MatrixXd gram(const Eigen::Ref<const Eigen::MatrixXd>& x) {
    const Eigen::Index p = x.cols();
    Eigen::MatrixXd g(p, p);
    constexpr Eigen::Index kBlock = 32;
    const Eigen::Index n_blocks = (p + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(dynamic)
    for (Eigen::Index b = 0; b < n_blocks; ++b) {
        const Eigen::Index c0 = b * kBlock;
        const Eigen::Index w = std::min(kBlock, p - c0);
        // Rows [0, c0 + w) of this column block: upper triangle plus the diagonal block.
        g.block(0, c0, c0 + w, w).noalias() = x.leftCols(c0 + w).transpose() * x.middleCols(c0, w);
    }
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = j + 1; i < p; ++i) g(i, j) = g(j, i);
    return g;
}

}  // namespace omp

int default_workers() {
    if (const char* env = std::getenv("FIBERNET_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<int>(v);
    }
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace fibernet::kernels
