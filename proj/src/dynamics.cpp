#include "lvstab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/SparseCholesky>
#include <fmt/format.h>

#include "lvstab/errors.hpp"

namespace lvstab {
namespace {

constexpr double kNormFloor = 1e-10;
constexpr double kTransientFraction = 0.2;

void require_nonnegative(const Field& f, const char* name) {
    if (f.min() < 0.0) throw InvalidArgument(fmt::format("evolve: initial {} has negative values", name));
}

double dist(const Field& x, const Field& ref) { return l2_norm(Field(x.grid(), x.values() - ref.values())); }

}  // namespace

double admissible_dt(const Field& u, const Field& v, const ModelParams& params) {
    const auto rate = params.a.values().array().abs() +
                      2.0 * u.values().array().max(v.values().array()) * (1.0 + params.b + params.c);
    const double worst = rate.maxCoeff();
    return worst > 0.0 ? 0.5 / worst : std::numeric_limits<double>::infinity();
}

Trajectory evolve(const Field& u0, const Field& v0, const ModelParams& params, double dt, double t_end,
                  int store_every) {
    require_same_grid(u0.grid(), v0.grid(), "evolve");
    require_same_grid(u0.grid(), params.a.grid(), "evolve");
    if (!(dt > 0.0) || !(t_end > 0.0)) throw InvalidArgument("evolve: dt and t_end must be positive");
    if (store_every < 1) throw InvalidArgument("evolve: store_every must be >= 1");
    require_nonnegative(u0, "u");
    require_nonnegative(v0, "v");

    const Grid& grid = u0.grid();
    SparseMatrix implicit = -dt * laplacian(grid);
    for (Eigen::Index i = 0; i < implicit.rows(); ++i) implicit.coeffRef(i, i) += 1.0;
    Eigen::SimplicialLLT<SparseMatrix> solver(implicit);
    if (solver.info() != Eigen::Success) throw Error("evolve: factorization of I - dt Lap failed");

    Trajectory traj{{0.0}, {u0}, {v0}, params, dt};
    const auto steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
    const auto a = params.a.values().array();
    Vector u = u0.values();
    Vector v = v0.values();

    for (long step = 1; step <= steps; ++step) {
        const double t_prev = static_cast<double>(step - 1) * dt;
        const double limit = admissible_dt(Field(grid, u), Field(grid, v), params);
        if (dt > limit) {
            throw InvalidArgument(
                fmt::format("evolve: dt = {} exceeds the admissible bound {:.6g} at t = {}", dt, limit, t_prev));
        }
        const Vector ru = (u.array() + dt * u.array() * (a - u.array() - params.b * v.array())).matrix();
        const Vector rv = (v.array() + dt * v.array() * (a - v.array() + params.c * u.array())).matrix();
        u = solver.solve(ru);
        v = solver.solve(rv);

        const double t = static_cast<double>(step) * dt;
        Eigen::Index node = 0;
        if (u.minCoeff(&node) < 0.0) {
            throw PositivityError(fmt::format("evolve: prey density negative at t = {}, node {}", t, node), t,
                                  static_cast<std::size_t>(node));
        }
        if (v.minCoeff(&node) < 0.0) {
            throw PositivityError(fmt::format("evolve: predator density negative at t = {}, node {}", t, node), t,
                                  static_cast<std::size_t>(node));
        }
        if (step % store_every == 0 || step == steps) {
            traj.times.push_back(t);
            traj.u.emplace_back(grid, u);
            traj.v.emplace_back(grid, v);
        }
    }
    return traj;
}

std::vector<DistanceSample> distances(const Trajectory& traj, const SteadyState& reference) {
    std::vector<DistanceSample> out;
    out.reserve(traj.times.size());
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const double du = dist(traj.u[i], reference.u);
        const double dv = dist(traj.v[i], reference.v);
        out.push_back(DistanceSample{traj.times[i], du, dv, std::hypot(du, dv)});
    }
    return out;
}

DecayFit decay_rate(const Trajectory& traj, const SteadyState& reference) {
    const std::vector<DistanceSample> samples = distances(traj, reference);
    const auto first = static_cast<std::size_t>(std::floor(kTransientFraction * static_cast<double>(samples.size())));

    std::vector<double> ts;
    std::vector<double> logs;
    for (std::size_t i = first; i < samples.size(); ++i) {
        if (samples[i].total < kNormFloor) continue;
        ts.push_back(samples[i].t);
        logs.push_back(std::log(samples[i].total));
    }
    if (ts.size() < 5) {
        throw InvalidArgument(fmt::format("decay_rate: only {} usable samples (need 5)", ts.size()));
    }

    const auto m = static_cast<double>(ts.size());
    double t_mean = 0.0;
    double y_mean = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        t_mean += ts[i];
        y_mean += logs[i];
    }
    t_mean /= m;
    y_mean /= m;
    double stt = 0.0;
    double sty = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        stt += (ts[i] - t_mean) * (ts[i] - t_mean);
        sty += (ts[i] - t_mean) * (logs[i] - y_mean);
        syy += (logs[i] - y_mean) * (logs[i] - y_mean);
    }
    const double rate = sty / stt;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double fit = y_mean + rate * (ts[i] - t_mean);
        ss_res += (logs[i] - fit) * (logs[i] - fit);
    }
    // A flat series has no variance to explain; report r^2 = 0 so callers see it.
    const double r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 0.0;

    bool monotone = true;
    for (std::size_t i = 1; i < logs.size(); ++i) monotone = monotone && logs[i] <= logs[i - 1];
    return DecayFit{rate, r_squared, ts.front(), ts.back(), static_cast<int>(ts.size()), monotone};
}

Field random_perturbation(const Field& f, double amplitude, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Vector values = f.values();
    for (Eigen::Index i = 0; i < values.size(); ++i) values[i] = std::max(0.0, values[i] + amplitude * dist(rng));
    return Field(f.grid(), std::move(values));
}

}  // namespace lvstab
