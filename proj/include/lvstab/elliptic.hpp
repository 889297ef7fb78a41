#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lvstab/grid.hpp"

namespace lvstab {

/// Positive solution of the logistic Dirichlet problem
///   Laplacian theta + theta (a - theta) = 0,  theta = 0 on the boundary.
struct LogisticSolution {
    Field theta;
    Field a;
    double residual_norm;
    int newton_iterations;
    /// lambda_1(a): principal eigenvalue of -(Laplacian + a); negative when supercritical.
    double lambda1_of_a;
    /// Residual norm after each Newton iteration (entry 0 is the initial guess).
    std::vector<double> residual_trace;
};

struct NewtonOptions {
    double tol = 1e-10;
    int max_iterations = 100;
    /// Step halvings allowed per iteration before the solve is declared failed.
    int max_halvings = 30;
    /// Warm start; defaults to t * phi_1 scaled so its maximum is max(a) / 2.
    std::optional<Field> initial_guess;
    /// Number of continuation stages in a (0 disables continuation).
    int continuation_steps = 0;
};

/// ||Laplacian theta + theta (a - theta)||_2.
double logistic_residual(const Field& theta, const Field& a);

/// Throws SubcriticalError when lambda_1(a) >= 0, ConvergenceError when Newton
/// fails (the exception carries the residual trace).
LogisticSolution solve_logistic(const Grid& grid, const Field& a, double tol = 1e-10);
LogisticSolution solve_logistic(const Grid& grid, const Field& a, const NewtonOptions& options);

/// Damped Newton iteration from an explicit start, without the subcriticality
/// gate. Used by solve_logistic and by the multi-start probe.
LogisticSolution newton_logistic(const Field& a, Field start, const NewtonOptions& options);

struct ProbeStart {
    std::string label;
    bool converged = false;
    bool positive = false;
    double residual = 0.0;
    int iterations = 0;
    /// Index into ProbeReport::solutions for converged positive starts, -1 otherwise.
    int solution_index = -1;
    std::string failure;
};

struct ProbeReport {
    std::vector<ProbeStart> starts;
    /// Distinct converged positive solutions (max-norm separation > distinct_threshold).
    std::vector<Field> solutions;
    double distinct_threshold = 1e-6;

    std::size_t distinct_count() const noexcept { return solutions.size(); }
};

/// Multi-start Newton corroboration of uniqueness of the positive solution.
/// Starts: constants in (0, max a], scaled principal eigenfunctions, and random
/// positive fields drawn from `seed`.
ProbeReport uniqueness_probe(const Grid& grid, const Field& a, int n_starts, double tol,
                             std::uint64_t seed = 0);

}  // namespace lvstab
