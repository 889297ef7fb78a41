#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lvstab/grid.hpp"
#include "lvstab/model.hpp"

namespace lvstab {

/// Stored samples of a time integration of the predator-prey system.
struct Trajectory {
    std::vector<double> times;
    std::vector<Field> u;
    std::vector<Field> v;
    ModelParams params;
    double dt;
    std::string method = "imex-euler";
};

/// Largest dt allowed at state (u, v):
/// dt * max_i(|a_i| + 2 max(u_i, v_i) (1 + b + c)) <= 0.5.
double admissible_dt(const Field& u, const Field& v, const ModelParams& params);

/// First-order IMEX integration: diffusion implicit (one cached factorization
/// of I - dt Lap shared by both species), reaction explicit. Samples are
/// stored at t = 0, every `store_every` steps, and at the final step.
///
/// Throws InvalidArgument for negative initial data or a step exceeding
/// admissible_dt, PositivityError if a density turns negative.
Trajectory evolve(const Field& u0, const Field& v0, const ModelParams& params, double dt, double t_end,
                  int store_every = 1);

struct DistanceSample {
    double t;
    double u_dist;
    double v_dist;
    double total;  ///< sqrt(u_dist^2 + v_dist^2)
};

std::vector<DistanceSample> distances(const Trajectory& traj, const SteadyState& reference);

struct DecayFit {
    /// Slope of log distance against time (negative when decaying).
    double rate;
    double r_squared;
    double t_start;
    double t_end;
    int samples;
    /// False when the distance increases somewhere in the fit window.
    bool monotone;
};

/// Least-squares fit of log distance over the stored samples, skipping the
/// first 20% and any sample with distance < 1e-10. Throws InvalidArgument
/// when fewer than 5 samples remain.
DecayFit decay_rate(const Trajectory& traj, const SteadyState& reference);

/// f + amplitude * U(-1, 1) per node, clipped at zero.
Field random_perturbation(const Field& f, double amplitude, std::uint64_t seed);

}  // namespace lvstab
