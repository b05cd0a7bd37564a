#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance binary.

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fibernet/filament.hpp"

namespace fibernet::testing {

// Gaussian elimination with partial pivoting on a dense copy.
inline std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
        x[i] = s / a[i][i];
    }
    return x;
}

// (X^T X + alpha I)^-1 X^T z over rows [r0, r1), with X and z centered on
// those rows when `center` is set.
inline std::vector<double> ridge_oracle(const Eigen::MatrixXd& x, const std::vector<double>& z, std::size_t r0,
                                        std::size_t r1, double alpha, bool center) {
    const auto p = static_cast<std::size_t>(x.cols());
    const auto at = [&](std::size_t r, std::size_t c) {
        return x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    };
    const double n = static_cast<double>(r1 - r0);
    std::vector<double> mx(p, 0.0);
    double mz = 0.0;
    if (center) {
        for (std::size_t r = r0; r < r1; ++r) {
            for (std::size_t j = 0; j < p; ++j) mx[j] += at(r, j) / n;
            mz += z[r] / n;
        }
    }
    std::vector<std::vector<double>> a(p, std::vector<double>(p, 0.0));
    std::vector<double> b(p, 0.0);
    for (std::size_t r = r0; r < r1; ++r)
        for (std::size_t i = 0; i < p; ++i) {
            const double xi = at(r, i) - mx[i];
            b[i] += xi * (z[r] - mz);
            for (std::size_t j = 0; j < p; ++j) a[i][j] += xi * (at(r, j) - mx[j]);
        }
    for (std::size_t i = 0; i < p; ++i) a[i][i] += alpha;
    return solve(a, b);
}

inline double rel_diff(const Eigen::VectorXd& w, const std::vector<double>& ref) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const double d = w(static_cast<Eigen::Index>(i)) - ref[i];
        num += d * d;
        den += ref[i] * ref[i];
    }
    return std::sqrt(num / den);
}

// Central differences of the elastic energy, the force oracle.
inline Points fd_forces(const FilamentMesh& mesh, double h) {
    Points f(mesh.node_count(), Vec2::Zero());
    FilamentMesh m = mesh;
    for (std::size_t i = 0; i < mesh.node_count(); ++i)
        for (int a = 0; a < 2; ++a) {
            const double x0 = m.positions[i][a];
            m.positions[i][a] = x0 + h;
            const double ep = energy(m).elastic;
            m.positions[i][a] = x0 - h;
            const double em = energy(m).elastic;
            m.positions[i][a] = x0;
            f[i][a] = -(ep - em) / (2.0 * h);
        }
    return f;
}

inline double norm(const Points& p) {
    double s = 0.0;
    for (const Vec2& v : p) s += v.squaredNorm();
    return std::sqrt(s);
}

inline double diff_norm(const Points& a, const Points& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]).squaredNorm();
    return std::sqrt(s);
}

}  // namespace fibernet::testing
