#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "lvstab/errors.hpp"
#include "lvstab/linstab.hpp"

using namespace lvstab;
using std::numbers::pi;

namespace {

struct Setup {
    Grid grid;
    ModelParams params;
    LogisticSolution theta;
    SteadyState state;
    CoupledJacobian jac;

    Setup(const Grid& g, const Field& a, double b, double c)
        : grid(g),
          params{a, b, c},
          theta(solve_logistic(g, a)),
          state(synchronized_state(params, theta)),
          jac(assemble_jacobian(state.u, state.v, params, g)) {}

    Field weight(double s) const {
        return Field(grid, (params.a.values().array() - s * theta.theta.values().array()).matrix());
    }
};

Setup interval_setup(double b, double c, int n = 200) {
    const Grid g = build_grid(Domain::interval(0.0, pi, n));
    return Setup(g, Field::constant(g, 2.0), b, c);
}

// Independent oracle: dense nonsymmetric eigendecomposition of -J.
std::vector<Complex> dense_oracle(const CoupledJacobian& jac, int count) {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(-Eigen::MatrixXd(jac.matrix), false);
    std::vector<Complex> all(solver.eigenvalues().data(), solver.eigenvalues().data() + solver.eigenvalues().size());
    std::sort(all.begin(), all.end(), [](Complex x, Complex y) { return x.real() < y.real(); });
    all.resize(static_cast<std::size_t>(count));
    return all;
}

std::uint64_t ulp_distance(double x, double y) {
    std::int64_t ix = 0;
    std::int64_t iy = 0;
    std::memcpy(&ix, &x, sizeof x);
    std::memcpy(&iy, &y, sizeof y);
    return static_cast<std::uint64_t>(ix > iy ? ix - iy : iy - ix);
}

}  // namespace

TEST_CASE("s parameter") {
    CHECK(s_parameter(0.5, 1.0) == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const double c = std::pow(10.0, 4.0 * ud(rng) - 2.0);
        CHECK(ulp_distance(s_parameter(c / (2.0 * c + 1.0), c), 2.0) <= 4);
        const double b = std::clamp(ud(rng), 1e-6, 1.0 - 1e-6);
        CHECK(s_parameter(b, c) > 1.0);
    }
    const double edge = s_parameter(1.0 - 1e-6, 1e-6);
    CHECK(edge > 1.0);
    CHECK(edge < 1.0 + 1e-5);
    CHECK_THROWS_AS(s_parameter(1.0, 1.0), InvalidArgument);
}

TEST_CASE("mode ratios") {
    const ModeRatios r = mode_ratios(0.5, 1.0);
    CHECK(r.z1 == 0.5);
    CHECK(r.z2 == 0.25);
    CHECK_FALSE(r.degenerate);
    CHECK_FALSE(r.degenerate_band);
    for (double z : {r.z1, r.z2}) CHECK(std::abs(2.0 * z * z - 1.5 * z + 0.25) <= 1e-15);

    const ModeRatios d = mode_ratios(1.0 / 3.0, 1.0);
    CHECK(d.z1 == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(d.z2 == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(d.degenerate);
    CHECK(mode_ratios(0.333333333333, 1.0).degenerate);
    const ModeRatios band = mode_ratios(0.3334, 1.0);
    CHECK_FALSE(band.degenerate);
    CHECK(band.degenerate_band);

    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> ud(0.01, 0.99);
    for (int i = 0; i < 200; ++i) {
        const double b = ud(rng);
        const double c = 10.0 * ud(rng);
        const ModeRatios m = mode_ratios(b, c);
        const double lead = c * (1.0 + c);
        CHECK(m.z1 * m.z2 == doctest::Approx(b * (1.0 - b) / lead).epsilon(1e-14));
        CHECK(m.z1 + m.z2 == doctest::Approx((b + c) / lead).epsilon(1e-14));
        for (double z : {m.z1, m.z2}) {
            CHECK(std::abs(lead * z * z - (b + c) * z + b * (1.0 - b)) <= 1e-14 * std::max(1.0, lead));
        }
    }
}

TEST_CASE("Jacobian blocks at the synchronized state") {
    const Setup s = interval_setup(0.5, 1.0);
    const double alpha = s.state.alpha;
    const double beta = s.state.beta;
    const Vector& th = s.theta.theta.values();
    CHECK((s.jac.prey_weight().values() - (2.0 - (alpha + 1.0) * th.array()).matrix()).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((s.jac.predator_weight().values() - (2.0 - (beta + 1.0) * th.array()).matrix()).cwiseAbs().maxCoeff() <=
          1e-14);

    const auto n = static_cast<Eigen::Index>(s.grid.size());
    const Eigen::MatrixXd dense(s.jac.matrix);
    const Eigen::MatrixXd lap(laplacian(s.grid));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            CHECK(dense(i, n + j) == (i == j ? -0.5 * s.state.u.values()[i] : 0.0));
            CHECK(dense(n + i, j) == (i == j ? 1.0 * s.state.v.values()[i] : 0.0));
            if (i != j) {
                CHECK(dense(i, j) == lap(i, j));
                CHECK(dense(n + i, n + j) == lap(i, j));
            }
        }
    }
    CHECK_THROWS_AS(assemble_jacobian(s.state.u, Field::zeros(build_grid(Domain::interval(0.0, pi, 10))), s.params,
                                      s.grid),
                    GridMismatch);
}

TEST_CASE("coupled spectrum at the origin decouples") {
    const Grid g = build_grid(Domain::interval(0.0, pi, 200));
    const ModelParams params{Field::constant(g, 2.0), 0.5, 1.0};
    const CoupledJacobian jac = assemble_jacobian(Field::zeros(g), Field::zeros(g), params, g);
    const auto pairs = coupled_spectrum(jac, 6);
    const Spectrum scalar = eigenpairs(assemble_operator(g, params.a), 3);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(std::abs(pairs[i].mu.real() - scalar.pairs[i / 2].lambda) <= 1e-10);
        CHECK(std::abs(pairs[i].mu.imag()) <= 1e-10);
    }
    CHECK(pairs[0].mu.real() == doctest::Approx(-1.0).epsilon(1e-3));
}

TEST_CASE("coupled spectrum against the dense oracle") {
    const Setup s = interval_setup(0.5, 1.0);
    const auto pairs = coupled_spectrum(s.jac, 12);
    const auto oracle = dense_oracle(s.jac, 12);
    for (std::size_t i = 0; i < 12; ++i) {
        // the dense nonsymmetric solver carries backward error eps * ||J|| ~ 1e-11
        // amplified by the eigenvector conditioning of J
        CHECK(std::abs(pairs[i].mu.real() - oracle[i].real()) <= 1e-9 * std::max(1.0, std::abs(oracle[i].real())));
        CHECK(std::abs(pairs[i].mu.imag()) <= 1e-8);
        CHECK(pairs[i].residual <= 1e-10 * std::max(1.0, std::abs(pairs[i].mu)));
    }
    CoupledOptions dense;
    dense.method = CoupledMethod::dense;
    const auto direct = coupled_spectrum(s.jac, 12, dense);
    for (std::size_t i = 0; i < 12; ++i) CHECK(direct[i].mu.real() == doctest::Approx(oracle[i].real()).epsilon(1e-9));
    CHECK_THROWS_AS(coupled_spectrum(s.jac, 401), InvalidArgument);
}

TEST_CASE("mode families are exact eigenvectors without any coupled eigensolve") {
    for (const auto& [b, c] : {std::pair{0.5, 1.0}, std::pair{0.2, 3.0}, std::pair{0.9, 0.4}}) {
        const Setup s = interval_setup(b, c);
        const double sv = s_parameter(b, c);
        const Spectrum s_family = eigenpairs(assemble_operator(s.grid, s.weight(sv)), 6);
        const Spectrum two_family = eigenpairs(assemble_operator(s.grid, s.weight(2.0)), 6);
        const double factor = std::max(1.0 + c, 2.0);
        for (std::size_t i = 0; i < 6; ++i) {
            const auto& ps = s_family.pairs[i];
            const auto& p2 = two_family.pairs[i];
            CHECK(ansatz_residual(s.jac, ps, b, c) <= factor * ps.residual + 1e-11);
            CHECK(ansatz_residual(s.jac, p2, 1.0 - b, 1.0 + c) <= factor * p2.residual + 1e-11);
        }
    }
}

TEST_CASE("second ratio root pairs with the weight a - 2 theta, not a - s theta") {
    const Setup s = interval_setup(0.5, 1.0);
    const Spectrum s_family = eigenpairs(assemble_operator(s.grid, s.weight(5.0 / 3.0)), 3);
    for (const auto& p : s_family.pairs) CHECK(ansatz_residual(s.jac, p, 0.5, 2.0) > 1e-3);
}

TEST_CASE("verify: generic parameters") {
    const Setup s = interval_setup(0.5, 1.0);
    const StabilityReport r = verify_theorem(s.params, s.grid, 6);
    CHECK(r.verdict == Verdict::stable);
    CHECK(r.s_value == doctest::Approx(5.0 / 3.0));
    CHECK_FALSE(r.degenerate);
    REQUIRE(r.coupled_eigs.size() == 12);
    CHECK(r.max_rel_mismatch <= 1e-8);
    CHECK(r.max_imag <= 1e-8);
    for (double e : r.ratio_errors) CHECK(e <= 1e-8);
    const double lambda1 = principal_eigenpair(assemble_operator(s.grid, s.weight(5.0 / 3.0))).lambda;
    CHECK(r.mu1 == doctest::Approx(lambda1).epsilon(1e-10));
    CHECK(r.mu1 > 0.0);
    // both families appear, alternating at this resolution
    CHECK(r.predicted_family[0] == ModeFamily::s_weight);
    CHECK(r.predicted_family[1] == ModeFamily::two_weight);
    // the "each lambda_i(a - s theta) twice" reading does not hold
    CHECK(r.duplicated_claim_mismatch > 0.1);
}

TEST_CASE("verify: degenerate locus") {
    const Setup s = interval_setup(1.0 / 3.0, 1.0);
    const StabilityReport r = verify_theorem(s.params, s.grid, 6);
    CHECK(r.degenerate);
    CHECK(r.s_value == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(r.verdict == Verdict::stable);
    CHECK(r.max_rel_mismatch <= 1e-6);
    CHECK(r.duplicated_claim_mismatch <= 1e-6);
    CHECK(r.ratio_errors.empty());

    const Spectrum two = eigenpairs(assemble_operator(s.grid, s.weight(2.0)), 8);
    const auto pairs = coupled_spectrum(s.jac, 12);
    for (const auto& p : pairs) {
        const DegenerateReduction red = degenerate_reduction(s.jac, p, two);
        CHECK((red.vanishes || red.eigenspace_residual <= 1e-6));
    }
}

TEST_CASE("verify: subcritical and invalid input") {
    const Grid g = build_grid(Domain::interval(0.0, pi, 100));
    const StabilityReport r = verify_theorem(ModelParams{Field::constant(g, 0.5), 0.5, 1.0}, g, 3);
    CHECK(r.verdict == Verdict::inconclusive);
    CHECK(r.cause.find("no positive steady state") != std::string::npos);
    CHECK(r.lambda1_of_a > 0.0);
    CHECK_THROWS_AS(verify_theorem(ModelParams{Field::constant(g, 2.0), 1.5, 1.0}, g, 3), InvalidArgument);
    CHECK_THROWS_AS(verify_theorem(ModelParams{Field::constant(g, 2.0), 0.5, 1.0}, g, 0), InvalidArgument);
}

TEST_CASE("verify: spatially varying growth rate") {
    const Grid g = build_grid(Domain::interval(0.0, pi, 200));
    const Field a = Field::sample(g, [](double x, double) { return 1.5 + 0.5 * std::sin(x); });
    const Setup s(g, a, 0.3, 2.0);
    const StabilityReport r = verify_theorem(s.params, g, 5);
    CHECK(r.verdict == Verdict::stable);
    CHECK(r.max_rel_mismatch <= 1e-8);
    const Spectrum fam = eigenpairs(assemble_operator(g, s.weight(s_parameter(0.3, 2.0))), 5);
    for (const auto& p : fam.pairs) CHECK(ansatz_residual(s.jac, p, 0.3, 2.0) <= 3.0 * p.residual + 1e-11);
}

TEST_CASE("verify: two-dimensional square") {
    const Grid g = build_grid(Domain::rectangle(0.0, 1.0, 0.0, 1.0, 14, 14));
    const StabilityReport r = verify_theorem(ModelParams{Field::constant(g, 30.0), 0.6, 0.8}, g, 4);
    CHECK(r.verdict == Verdict::stable);
    CHECK(r.max_rel_mismatch <= 1e-8);
}

TEST_CASE("linearized stability over random parameters") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    const Grid g = build_grid(Domain::interval(0.0, pi, 60));
    const double lambda1 = dirichlet_eigenvalue_1d(1, pi, 60);
    int stable = 0;
    for (int i = 0; i < 50; ++i) {
        const double a = lambda1 + 0.1 + 5.0 * ud(rng);
        const double b = 0.02 + 0.96 * ud(rng);
        const double c = std::pow(10.0, 2.0 * ud(rng) - 1.0);
        const StabilityReport r = verify_theorem(ModelParams{Field::constant(g, a), b, c}, g, 3);
        CHECK(r.mu1 > 0.0);
        CHECK(r.s_value > 1.0);
        stable += r.verdict == Verdict::stable;
    }
    CHECK(stable == 50);
}
