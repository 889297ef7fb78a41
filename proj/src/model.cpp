#include "lvstab/model.hpp"

#include <cmath>

#include <fmt/format.h>

#include "lvstab/errors.hpp"

namespace lvstab {

void validate_predation(double b, double c) {
    if (!(b > 0.0 && b < 1.0)) throw InvalidArgument(fmt::format("b = {} outside the valid range 0 < b < 1", b));
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument(fmt::format("c = {} outside the valid range c > 0", c));
}

void ModelParams::validate() const { validate_predation(b, c); }

RatioCoefficients ratio_coefficients(double b, double c) {
    validate_predation(b, c);
    const double denom = 1.0 + b * c;
    return RatioCoefficients{(1.0 - b) / denom, (1.0 + c) / denom};
}

SteadyState synchronized_state(const ModelParams& params, const LogisticSolution& theta) {
    params.validate();
    require_same_grid(params.a.grid(), theta.theta.grid(), "synchronized_state");
    if (!(theta.theta.min() > 0.0)) {
        throw InvalidArgument("synchronized_state: theta is not strictly positive");
    }
    const auto [alpha, beta] = ratio_coefficients(params.b, params.c);
    return SteadyState{theta.theta.scaled(alpha), theta.theta.scaled(beta), theta.theta, alpha, beta};
}

SteadyState prey_only_state(const LogisticSolution& theta) {
    return SteadyState{theta.theta, Field::zeros(theta.theta.grid()), theta.theta, 1.0, 0.0};
}

SteadyState predator_only_state(const LogisticSolution& theta) {
    return SteadyState{Field::zeros(theta.theta.grid()), theta.theta, theta.theta, 0.0, 1.0};
}

SystemResidual system_residual(const Field& u, const Field& v, const ModelParams& params) {
    require_same_grid(u.grid(), v.grid(), "system_residual");
    require_same_grid(u.grid(), params.a.grid(), "system_residual");
    const Grid& grid = u.grid();
    const auto& a = params.a.values().array();
    const auto& uu = u.values().array();
    const auto& vv = v.values().array();
    const Vector ru = apply_laplacian(grid, u.values()) + (uu * (a - uu - params.b * vv)).matrix();
    const Vector rv = apply_laplacian(grid, v.values()) + (vv * (a - vv + params.c * uu)).matrix();
    const double w = grid.cell_volume();
    return SystemResidual{std::sqrt(ru.squaredNorm() * w), std::sqrt(rv.squaredNorm() * w)};
}

}  // namespace lvstab
