#include <doctest.h>

#include <cmath>
#include <numbers>
#include <filesystem>
#include <random>
#include <sstream>

#include "lvstab/errors.hpp"
#include "lvstab/grid.hpp"
#include "lvstab/io.hpp"

using namespace lvstab;
using std::numbers::pi;

TEST_CASE("build_grid spacing and node coordinates") {
    const Grid g = build_grid(Domain::interval(0.0, pi, 3));
    CHECK(g.size() == 3);
    CHECK(g.spacing(0) == doctest::Approx(pi / 4).epsilon(1e-15));
    CHECK(g.coordinate(0, 0) == doctest::Approx(pi / 4).epsilon(1e-15));
    CHECK(g.coordinate(1, 0) == doctest::Approx(pi / 2).epsilon(1e-15));
    CHECK(g.coordinate(2, 0) == doctest::Approx(3 * pi / 4).epsilon(1e-15));

    const Grid r = build_grid(Domain::rectangle(0.0, 1.0, 0.0, 2.0, 4, 8));
    CHECK(r.size() == 32);
    CHECK(r.cell_volume() == doctest::Approx(0.2 * (2.0 / 9.0)));
    // x runs fastest
    CHECK(r.node(1, 0) == 1);
    CHECK(r.node(0, 1) == 4);
    CHECK(r.coordinate(r.node(2, 3), 0) == doctest::Approx(0.6));
    CHECK(r.coordinate(r.node(2, 3), 1) == doctest::Approx(4.0 * 2.0 / 9.0));
}

TEST_CASE("build_grid rejects bad domains") {
    CHECK_THROWS_WITH_AS(build_grid(Domain::interval(0.0, 1.0, 2)), doctest::Contains("resolution too small"),
                         InvalidArgument);
    CHECK_THROWS_AS(build_grid(Domain::interval(1.0, 1.0, 5)), InvalidArgument);
    CHECK_THROWS_AS(build_grid(Domain::rectangle(0.0, 1.0, 0.0, -1.0, 5, 5)), InvalidArgument);
    CHECK_THROWS_AS(build_grid(Domain::rectangle(0.0, 1.0, 0.0, 1.0, 5, 2)), InvalidArgument);
}

TEST_CASE("1D operator is the 3-point stencil plus the weight") {
    const Grid g = build_grid(Domain::interval(0.0, pi, 3));
    const double h = pi / 4;
    const WeightedOperator op = assemble_operator(g, Field::zeros(g));
    const Eigen::MatrixXd m(op.matrix());
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double want = i == j ? -2.0 / (h * h) : (std::abs(i - j) == 1 ? 1.0 / (h * h) : 0.0);
            CHECK(m(i, j) == doctest::Approx(want).epsilon(1e-15));
        }
    }
    const WeightedOperator shifted = assemble_operator(g, Field::constant(g, 0.75));
    const Eigen::MatrixXd diff = Eigen::MatrixXd(shifted.matrix()) - m;
    CHECK((diff - 0.75 * Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("2D 5-point stencil on the unit square") {
    const Grid g = build_grid(Domain::rectangle(0.0, 1.0, 0.0, 1.0, 3, 3));
    const double h = 0.25;
    const SparseMatrix m = assemble_operator(g, Field::zeros(g)).matrix();
    CHECK(m.rows() == 9);
    int off = 0;
    for (Eigen::Index col = 0; col < m.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(m, col); it; ++it) {
            if (it.row() == it.col()) {
                CHECK(it.value() == doctest::Approx(-4.0 / (h * h)));
            } else {
                CHECK(it.value() == doctest::Approx(1.0 / (h * h)));
                ++off;
                // neighbours differ by one step along exactly one axis
                const int di = std::abs(g.axis_index(it.row(), 0) - g.axis_index(it.col(), 0));
                const int dj = std::abs(g.axis_index(it.row(), 1) - g.axis_index(it.col(), 1));
                CHECK(di + dj == 1);
            }
        }
    }
    CHECK(off == 24);
}

TEST_CASE("operator symmetry and shift identity for random weights") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-5.0, 5.0);
    for (const Domain& d : {Domain::interval(0.0, 2.0, 17), Domain::rectangle(0.0, 1.0, 0.0, 3.0, 6, 9)}) {
        const Grid g = build_grid(d);
        for (int trial = 0; trial < 10; ++trial) {
            const Field m = Field::sample(g, [&](double, double) { return dist(rng); });
            const SparseMatrix a = assemble_operator(g, m).matrix();
            const SparseMatrix at = a.transpose();
            CHECK(Eigen::MatrixXd(a - at).cwiseAbs().maxCoeff() == 0.0);

            const double m0 = dist(rng);
            const SparseMatrix shifted = assemble_operator(g, Field(g, m.values().array() + m0)).matrix();
            const Eigen::MatrixXd expect =
                Eigen::MatrixXd(a) + m0 * Eigen::MatrixXd::Identity(a.rows(), a.cols());
            // Two roundings on the diagonal: (d + m) + m0 versus d + (m + m0).
            const double scale = Eigen::MatrixXd(a).cwiseAbs().maxCoeff() + std::abs(m0);
            CHECK((Eigen::MatrixXd(shifted) - expect).cwiseAbs().maxCoeff() <= 4e-16 * scale);
        }
    }
}

TEST_CASE("grid mismatch is rejected") {
    const Grid g1 = build_grid(Domain::interval(0.0, pi, 10));
    const Grid g2 = build_grid(Domain::interval(0.0, pi, 11));
    CHECK_THROWS_AS(assemble_operator(g1, Field::zeros(g2)), GridMismatch);
    CHECK_THROWS_AS(l2_inner(Field::zeros(g1), Field::zeros(g2)), GridMismatch);
    CHECK_THROWS_AS(Field(g1, Vector::Zero(3)), GridMismatch);
}

TEST_CASE("l2 norm and inner product") {
    const Grid g = build_grid(Domain::interval(0.0, pi, 200));
    CHECK(l2_norm(Field::zeros(g)) == 0.0);

    const Field s = Field::sample(g, [](double x, double) { return std::sin(x); });
    // trapezoid limit of the integral of sin^2 over (0, pi)
    CHECK(std::abs(l2_norm(s) * l2_norm(s) - pi / 2) <= 1e-3);
    CHECK(l2_inner(s, s) == doctest::Approx(l2_norm(s) * l2_norm(s)).epsilon(1e-14));

    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 20; ++trial) {
        const Field f = Field::sample(g, [&](double, double) { return nd(rng); });
        const Field h = Field::sample(g, [&](double, double) { return nd(rng); });
        const Field k = Field::sample(g, [&](double, double) { return nd(rng); });
        const double alpha = nd(rng);
        CHECK(l2_inner(f, h) == doctest::Approx(l2_inner(h, f)).epsilon(1e-13));
        const Field combo(g, alpha * f.values() + h.values());
        CHECK(l2_inner(combo, k) ==
              doctest::Approx(alpha * l2_inner(f, k) + l2_inner(h, k)).epsilon(1e-12).scale(l2_norm(k)));
    }
}

TEST_CASE("discrete Dirichlet Laplacian spectrum matches the closed form") {
    // The sampled sine modes are exact eigenvectors of the 3-point stencil; the
    // cancellation-free Rayleigh quotient recovers each eigenvalue to rounding.
    for (int n : {3, 50, 200}) {
        const Grid g = build_grid(Domain::interval(0.0, pi, n));
        const SparseMatrix lap = laplacian(g);
        for (int k = 1; k <= std::min(5, n); ++k) {
            const Field mode = Field::sample(g, [k](double x, double) { return std::sin(k * x); });
            const double closed = dirichlet_eigenvalue_1d(k, pi, n);
            const double quotient = dirichlet_energy(mode) / (l2_norm(mode) * l2_norm(mode));
            CHECK(std::abs(quotient - closed) / closed <= 1e-12);
            const double residual = (lap * mode.values() + closed * mode.values()).norm() / mode.values().norm();
            CHECK(residual <= 1e-12 * 4.0 / (g.spacing(0) * g.spacing(0)));
        }
    }
}

TEST_CASE("apply_laplacian agrees with the sparse matrix") {
    const Grid g = build_grid(Domain::rectangle(0.0, 2.0, 0.0, 1.0, 7, 5));
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    const Field f = Field::sample(g, [&](double, double) { return nd(rng); });
    const Vector a = laplacian(g) * f.values();
    const Vector b = apply_laplacian(g, f.values());
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12 * a.cwiseAbs().maxCoeff());
    CHECK(dirichlet_energy(f) == doctest::Approx(-f.values().dot(a) * g.cell_volume()).epsilon(1e-12));
}

TEST_CASE("cubic interpolation is exact for cubics vanishing at the ends") {
    const Grid g = build_grid(Domain::interval(0.0, 2.0, 9));
    const auto p = [](double x) { return x * (2.0 - x) * (x + 1.0); };
    const Field f = Field::sample(g, [&](double x, double) { return p(x); });
    for (double x : {0.0, 0.05, 0.3, 1.0, 1.37, 1.99, 2.0}) CHECK(interpolate_1d(f, x) == doctest::Approx(p(x)));
    CHECK_THROWS_AS(interpolate_1d(f, 2.5), InvalidArgument);
}

TEST_CASE("field CSV layout") {
    const Grid g = build_grid(Domain::interval(0.0, pi, 3));
    const Field f = Field::sample(g, [](double x, double) { return x; });
    std::ostringstream out;
    write_field_csv(out, f);
    const std::string text = out.str();
    CHECK(text.rfind("index,coord1,value\n0,7.8539816339744828e-01,7.8539816339744828e-01\n", 0) == 0);

    const Grid r = build_grid(Domain::rectangle(0.0, 1.0, 0.0, 1.0, 3, 3));
    std::ostringstream out2;
    write_field_csv(out2, Field::constant(r, 1.0));
    CHECK(out2.str().rfind("index,coord1,coord2,value\n0,2.5000000000000000e-01,2.5000000000000000e-01,1.0000000000000000e+00\n", 0) == 0);
}

TEST_CASE("field CSV round trip is bit exact and checks the grid") {
    const Grid g = build_grid(Domain::rectangle(0.0, 1.0, 0.0, 2.0, 5, 4));
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    const Field f = Field::sample(g, [&](double, double) { return nd(rng); });
    const auto path = std::filesystem::temp_directory_path() / "lvstab_field_roundtrip.csv";
    write_field_csv(path, f);
    const Field back = read_field_csv(path, g);
    CHECK((back.values() - f.values()).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(read_field_csv(path, build_grid(Domain::rectangle(0.0, 1.0, 0.0, 2.0, 5, 5))),
                    InvalidArgument);
    CHECK_THROWS_AS(read_field_csv(path, build_grid(Domain::rectangle(0.0, 1.5, 0.0, 2.0, 5, 4))),
                    InvalidArgument);
    std::filesystem::remove(path);
}
