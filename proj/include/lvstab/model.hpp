#pragma once

#include "lvstab/elliptic.hpp"
#include "lvstab/grid.hpp"

namespace lvstab {

/// Growth rate a (shared by both species), predation rate b on the prey and
/// predator benefit c. Valid region: 0 < b < 1, c > 0.
struct ModelParams {
    Field a;
    double b;
    double c;

    /// Throws InvalidArgument outside the valid region.
    void validate() const;
};

/// Throws InvalidArgument unless 0 < b < 1 and c > 0.
void validate_predation(double b, double c);

struct RatioCoefficients {
    double alpha;  ///< (1 - b) / (1 + b c)
    double beta;   ///< (1 + c) / (1 + b c)
};

RatioCoefficients ratio_coefficients(double b, double c);

/// Synchronized equilibrium u = alpha theta, v = beta theta.
struct SteadyState {
    Field u;
    Field v;
    Field theta;
    double alpha;
    double beta;
};

SteadyState synchronized_state(const ModelParams& params, const LogisticSolution& theta);

/// Prey-only state (theta, 0).
SteadyState prey_only_state(const LogisticSolution& theta);
/// Predator-only state (0, theta).
SteadyState predator_only_state(const LogisticSolution& theta);

struct SystemResidual {
    double r_u;
    double r_v;
};

/// L2 norms of Laplacian u + u(a - u - b v) and Laplacian v + v(a - v + c u).
SystemResidual system_residual(const Field& u, const Field& v, const ModelParams& params);

}  // namespace lvstab
