#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lvstab/dynamics.hpp"
#include "lvstab/errors.hpp"
#include "lvstab/linstab.hpp"

using namespace lvstab;
using std::numbers::pi;

namespace {

struct Base {
    Grid grid = build_grid(Domain::interval(0.0, pi, 200));
    ModelParams params{Field::constant(grid, 2.0), 0.5, 1.0};
    LogisticSolution theta = solve_logistic(grid, params.a);
    SteadyState state = synchronized_state(params, theta);

    Spectrum family(double s, int k) const {
        const Field w(grid, (params.a.values().array() - s * theta.theta.values().array()).matrix());
        return eigenpairs(assemble_operator(grid, w), k);
    }
};

const Base& base() {
    static const Base b;
    return b;
}

Field plus(const Field& f, const Field& g, double scale) { return Field(f.grid(), f.values() + scale * g.values()); }

// Samples with t0 <= t <= t1, for fits over a chosen window.
Trajectory window(const Trajectory& traj, double t0, double t1) {
    Trajectory out{{}, {}, {}, traj.params, traj.dt};
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        if (traj.times[i] < t0 || traj.times[i] > t1) continue;
        out.times.push_back(traj.times[i]);
        out.u.push_back(traj.u[i]);
        out.v.push_back(traj.v[i]);
    }
    return out;
}

}  // namespace

TEST_CASE("zero data stays zero") {
    const Base& b = base();
    const Trajectory t = evolve(Field::zeros(b.grid), Field::zeros(b.grid), b.params, 1e-2, 1.0, 10);
    CHECK(t.times.size() == 11);
    CHECK(t.times.back() == doctest::Approx(1.0));
    for (std::size_t i = 0; i < t.times.size(); ++i) {
        CHECK(t.u[i].values().cwiseAbs().maxCoeff() == 0.0);
        CHECK(t.v[i].values().cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("synchronized state is a fixed point of the scheme") {
    const Base& b = base();
    const Trajectory one = evolve(b.state.u, b.state.v, b.params, 1e-3, 1e-3);
    const DistanceSample step = distances(one, b.state).back();
    // the discrete state solves the discrete system up to the Newton residual,
    // so one step moves it by about dt * residual
    CHECK(step.total <= 10.0 * (1e-3 * 1e-10 * b.state.beta + 1e-15));

    const Trajectory long_run = evolve(b.state.u, b.state.v, b.params, 1e-3, 10.0, 1000);
    CHECK(long_run.times.back() >= 10.0 - 1e-3);
    for (const auto& d : distances(long_run, b.state)) CHECK(d.total <= 1e-8);
}

TEST_CASE("random perturbation decays back to the steady state") {
    const Base& b = base();
    const Field u0 = random_perturbation(b.state.u, 1e-3, 1);
    const Field v0 = random_perturbation(b.state.v, 1e-3, 2);
    const Trajectory t = evolve(u0, v0, b.params, 1e-3, 25.0, 250);
    const auto d = distances(t, b.state);
    CHECK(d.front().total > 1e-4);
    CHECK(d.back().total <= 1e-6);
    for (const auto& f : t.u) CHECK(f.min() >= 0.0);
    for (const auto& f : t.v) CHECK(f.min() >= 0.0);
}

TEST_CASE("decay along the principal coupled mode matches mu_1") {
    const Base& b = base();
    const double mu1 = verify_theorem(b.params, b.grid, 3).mu1;
    const Field phi = b.family(s_parameter(0.5, 1.0), 1).pairs[0].phi;
    auto fit_with = [&](double dt) {
        const Trajectory t = evolve(plus(b.state.u, phi, 0.5e-3), plus(b.state.v, phi, 1.0e-3), b.params, dt, 20.0,
                                    static_cast<int>(std::lround(0.1 / dt)));
        return decay_rate(t, b.state);
    };
    const DecayFit fit = fit_with(1e-3);
    CHECK(std::abs(-fit.rate - mu1) <= 0.05 * mu1);
    CHECK(fit.r_squared >= 0.999);
    CHECK(fit.monotone);
    CHECK(fit.t_start == doctest::Approx(4.0));
    CHECK(fit.t_end == doctest::Approx(20.0));

    const DecayFit half = fit_with(5e-4);
    CHECK(std::abs(half.rate - fit.rate) <= 0.01 * std::abs(half.rate));
}

TEST_CASE("higher mode perturbation relaxes onto the principal rate") {
    const Base& b = base();
    const double mu1 = verify_theorem(b.params, b.grid, 3).mu1;
    const Spectrum s_family = b.family(s_parameter(0.5, 1.0), 2);
    const Field& high = s_family.pairs[1].phi;
    const Field& low = s_family.pairs[0].phi;
    // the second mode dominates until t ~ 1.5, the principal one after
    const Field du = plus(high.scaled(0.5e-3), low, 0.5e-5);
    const Field dv = plus(high.scaled(1.0e-3), low, 1.0e-5);
    const Trajectory t = evolve(plus(b.state.u, du, 1.0), plus(b.state.v, dv, 1.0), b.params, 1e-3, 12.0, 20);

    const DecayFit early = decay_rate(window(t, 0.0, 1.0), b.state);
    CHECK(-early.rate > 1.5 * mu1);
    CHECK(-early.rate <= 1.01 * s_family.pairs[1].lambda);

    const DecayFit late = decay_rate(window(t, 6.0, 12.0), b.state);
    CHECK(std::abs(-late.rate - mu1) <= 0.1 * mu1);
    CHECK(late.r_squared >= 0.999);
}

TEST_CASE("stationary trajectory has nothing to fit") {
    const Base& b = base();
    const Field u0 = plus(b.state.u, Field::constant(b.grid, 1.0), 1e-3);
    const Trajectory t = evolve(u0, b.state.v, b.params, 1e-3, 0.01);
    Trajectory frozen = t;
    for (auto& f : frozen.u) f = u0;
    for (auto& f : frozen.v) f = b.state.v;
    const DecayFit fit = decay_rate(frozen, b.state);
    CHECK(fit.r_squared == 0.0);
    CHECK(fit.rate == doctest::Approx(0.0).epsilon(1e-12));

    // converged to the rounding floor: too few usable samples
    const Trajectory settled = evolve(b.state.u, b.state.v, b.params, 1e-3, 0.01);
    CHECK_THROWS_AS(decay_rate(settled, b.state), InvalidArgument);
}

TEST_CASE("positivity is preserved for admissible steps") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    const Grid g = build_grid(Domain::interval(0.0, pi, 80));
    int completed = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const ModelParams params{Field::constant(g, 0.5 + 4.0 * ud(rng)), 0.05 + 0.9 * ud(rng), 0.1 + 4.0 * ud(rng)};
        const double scale = 3.0 * ud(rng);
        const Field u0 = Field::sample(g, [&](double, double) { return scale * ud(rng); });
        const Field v0 = Field::sample(g, [&](double, double) { return scale * ud(rng); });
        // the bound is rechecked every step; start with headroom since the
        // predator can grow above its initial maximum
        const double dt = 0.25 * admissible_dt(u0, v0, params);
        try {
            const Trajectory t = evolve(u0, v0, params, dt, 200 * dt, 20);
            for (const auto& f : t.u) CHECK(f.min() >= 0.0);
            for (const auto& f : t.v) CHECK(f.min() >= 0.0);
            ++completed;
        } catch (const InvalidArgument& e) {
            // the state grew past the admissible bound; that is a guard, not a sign violation
            CHECK(std::string(e.what()).find("admissible") != std::string::npos);
        }
    }
    CHECK(completed >= 15);
}

TEST_CASE("errors") {
    const Base& b = base();
    const Field negative = plus(b.state.u, Field::constant(b.grid, 1.0), -10.0);
    CHECK_THROWS_AS(evolve(negative, b.state.v, b.params, 1e-3, 1.0), InvalidArgument);
    CHECK_THROWS_AS(evolve(b.state.u, b.state.v, b.params, 1.0, 2.0), InvalidArgument);
    CHECK_THROWS_AS(evolve(b.state.u, b.state.v, b.params, -1e-3, 1.0), InvalidArgument);
    CHECK_THROWS_AS(evolve(b.state.u, b.state.v, b.params, 1e-3, 1.0, 0), InvalidArgument);
    const Grid other = build_grid(Domain::interval(0.0, pi, 20));
    CHECK_THROWS_AS(evolve(Field::zeros(other), b.state.v, b.params, 1e-3, 1.0), GridMismatch);

    const Trajectory short_run = evolve(random_perturbation(b.state.u, 1e-3, 3), b.state.v, b.params, 1e-3, 3e-3);
    CHECK_THROWS_AS(decay_rate(short_run, b.state), InvalidArgument);

    try {
        evolve(b.state.u, b.state.v, b.params, 0.2, 1.0);
        FAIL("expected InvalidArgument");
    } catch (const InvalidArgument& e) {
        CHECK(std::string(e.what()).find("admissible") != std::string::npos);
    }
}

TEST_CASE("random perturbation is seeded and clipped") {
    const Base& b = base();
    const Field p1 = random_perturbation(b.state.u, 1e-3, 42);
    const Field p2 = random_perturbation(b.state.u, 1e-3, 42);
    const Field p3 = random_perturbation(b.state.u, 1e-3, 43);
    CHECK(p1.values() == p2.values());
    CHECK(p1.values() != p3.values());
    CHECK(p1.min() >= 0.0);
    CHECK((p1.values() - b.state.u.values()).cwiseAbs().maxCoeff() <= 1e-3);
    const Field clipped = random_perturbation(Field::zeros(b.grid), 1.0, 5);
    CHECK(clipped.min() == 0.0);
    CHECK(clipped.max() > 0.0);
}
