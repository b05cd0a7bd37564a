#include <doctest.h>

#include <random>

#include <omp.h>

#include "fibernet/error.hpp"
#include "fibernet/kernels.hpp"

using namespace fibernet;

namespace {

struct Rods {
    std::vector<Points> x;
    std::vector<std::vector<double>> rest;
    std::vector<Points> forces;

    std::vector<kernels::RodSlice> slices() {
        std::vector<kernels::RodSlice> s;
        for (std::size_t i = 0; i < x.size(); ++i)
            s.push_back({x[i], rest[i], 314.159, 7.854e-5, forces[i]});
        return s;
    }
};

Rods random_rods(std::uint64_t seed, int count) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> len(3, 40);
    std::uniform_real_distribution<double> jiggle(-1e-3, 1e-3);
    Rods r;
    for (int i = 0; i < count; ++i) {
        const int n = len(rng);
        Points x;
        std::vector<double> rest;
        for (int k = 0; k < n; ++k) {
            x.emplace_back(0.01 * k + jiggle(rng), 0.05 * i + jiggle(rng));
            if (k > 0) rest.push_back(0.01);
        }
        r.x.push_back(x);
        r.rest.push_back(rest);
        r.forces.emplace_back(x.size(), Vec2::Constant(99.0));
    }
    return r;
}

Eigen::MatrixXd random_matrix(std::uint64_t seed, Eigen::Index rows, Eigen::Index cols) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = d(rng);
    return m;
}

}  // namespace

TEST_CASE("parallel rod forces equal the serial reference bitwise") {
    Rods a = random_rods(1, 64);
    Rods b = a;
    kernels::serial::rod_forces(a.slices());
    kernels::omp::rod_forces(b.slices());
    for (std::size_t i = 0; i < a.forces.size(); ++i)
        for (std::size_t k = 0; k < a.forces[i].size(); ++k) CHECK(a.forces[i][k] == b.forces[i][k]);
}

TEST_CASE("parallel rod forces propagate degeneracy errors") {
    Rods r = random_rods(2, 16);
    r.x[5][2] = r.x[5][1];
    CHECK_THROWS_AS(kernels::omp::rod_forces(r.slices()), DegeneracyError);
}

TEST_CASE("gram kernels agree with the dense product") {
    for (const auto& [rows, cols] : {std::pair{50, 1}, std::pair{200, 31}, std::pair{300, 33}, std::pair{500, 112}}) {
        const Eigen::MatrixXd x = random_matrix(static_cast<std::uint64_t>(rows * cols), rows, cols);
        const Eigen::MatrixXd ref = kernels::serial::gram(x);
        const Eigen::MatrixXd par = kernels::omp::gram(x);
        const Eigen::MatrixXd dense = x.transpose() * x;
        CHECK((ref - dense).norm() <= 1e-12 * dense.norm());
        CHECK((par - ref).norm() <= 1e-12 * ref.norm());
        CHECK((par - par.transpose()).norm() == 0.0);
    }
}

TEST_CASE("parallel gram does not depend on the thread count") {
    const Eigen::MatrixXd x = random_matrix(9, 400, 150);
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const Eigen::MatrixXd one = kernels::omp::gram(x);
    omp_set_num_threads(4);
    const Eigen::MatrixXd four = kernels::omp::gram(x);
    omp_set_num_threads(saved);
    CHECK(one == four);
}

TEST_CASE("default worker count honours FIBERNET_WORKERS") {
    setenv("FIBERNET_WORKERS", "3", 1);
    CHECK(kernels::default_workers() == 3);
    setenv("FIBERNET_WORKERS", "junk", 1);
    CHECK(kernels::default_workers() >= 1);
    unsetenv("FIBERNET_WORKERS");
    CHECK(kernels::default_workers() >= 1);
}
