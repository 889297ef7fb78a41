#include "lvstab/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/SparseLU>
#include <fmt/format.h>

#include "lvstab/errors.hpp"
#include "lvstab/spectral.hpp"

namespace lvstab {
namespace {

// Spectral solves that only gate or seed Newton do not need the full default
// accuracy, and on very fine grids the 1e-10 residual is below rounding.
constexpr double kGateTolerance = 1e-8;
constexpr double kTrivialFraction = 1e-6;

Vector logistic_map(const Grid& grid, const Vector& theta, const Vector& a) {
    return apply_laplacian(grid, theta) + theta.cwiseProduct(a - theta);
}

double weighted_norm(const Grid& grid, const Vector& v) {
    return std::sqrt(v.squaredNorm() * grid.cell_volume());
}

// t * phi_1 with max = max(a) / 2, reduced to the small-amplitude branch
// estimate t = -lambda_1 <phi, phi> / <phi^3, 1> when that is smaller (near
// the bifurcation point max(a) / 2 overshoots and Newton drifts to zero).
Field default_guess(const Field& a, const EigenPair& principal) {
    const Field& phi = principal.phi;
    const double cubic = phi.values().array().cube().sum() * phi.grid().cell_volume();
    double t = 0.5 * a.max() / phi.max();
    if (cubic > 0.0) t = std::min(t, -principal.lambda * l2_inner(phi, phi) / cubic);
    return phi.scaled(t);
}

// Newton can reach the zero solution through positive iterates; its residual
// vanishes with the amplitude, so the tolerance alone does not exclude it.
bool is_trivial(const Vector& theta, const Field& a) {
    return theta.maxCoeff() <= kTrivialFraction * std::max(1.0, a.values().cwiseAbs().maxCoeff());
}

// Newton from the given start; if it fails, restart from the constant max(a),
// a supersolution from which the iteration decreases monotonically to the
// positive solution.
LogisticSolution newton_with_fallback(const Field& a, Field start, const NewtonOptions& options) {
    try {
        return newton_logistic(a, std::move(start), options);
    } catch (const ConvergenceError&) {
        const double top = a.max();
        if (!(top > 0.0)) throw;
        return newton_logistic(a, Field::constant(a.grid(), top), options);
    }
}

EigenPair principal_of(const Field& a) {
    EigenOptions options;
    options.tol = kGateTolerance;
    return principal_eigenpair(assemble_operator(a.grid(), a), options);
}

}  // namespace

double logistic_residual(const Field& theta, const Field& a) {
    require_same_grid(theta.grid(), a.grid(), "logistic_residual");
    return weighted_norm(theta.grid(), logistic_map(theta.grid(), theta.values(), a.values()));
}

LogisticSolution newton_logistic(const Field& a, Field start, const NewtonOptions& options) {
    require_same_grid(a.grid(), start.grid(), "newton_logistic");
    if (!(start.min() > 0.0)) throw InvalidArgument("newton_logistic: initial guess must be positive");
    const Grid& grid = a.grid();
    const SparseMatrix lap = laplacian(grid);

    Vector theta = start.values();
    Vector residual = logistic_map(grid, theta, a.values());
    double rho = weighted_norm(grid, residual);
    std::vector<double> trace{rho};

    Eigen::SparseLU<SparseMatrix> lu;
    int iteration = 0;
    while (rho > options.tol) {
        if (iteration == options.max_iterations) {
            throw ConvergenceError(
                fmt::format("Newton: no convergence in {} iterations (residual {:.3e})", iteration, rho), rho,
                trace);
        }
        SparseMatrix jac = lap;
        for (Eigen::Index k = 0; k < jac.rows(); ++k) jac.coeffRef(k, k) += a.values()[k] - 2.0 * theta[k];
        lu.compute(jac);
        if (lu.info() != Eigen::Success) {
            throw ConvergenceError("Newton: singular Jacobian", rho, trace);
        }
        const Vector step = lu.solve(-residual);

        double t = 1.0;
        bool accepted = false;
        for (int halving = 0; halving <= options.max_halvings; ++halving, t *= 0.5) {
            Vector candidate = theta + t * step;
            if (!(candidate.minCoeff() > 0.0)) continue;
            Vector cand_residual = logistic_map(grid, candidate, a.values());
            const double cand_rho = weighted_norm(grid, cand_residual);
            if (cand_rho < rho) {
                theta = std::move(candidate);
                residual = std::move(cand_residual);
                rho = cand_rho;
                accepted = true;
                break;
            }
        }
        ++iteration;
        trace.push_back(rho);
        if (!accepted) {
            throw ConvergenceError(
                fmt::format("Newton: damping floor reached at iteration {} (residual {:.3e})", iteration, rho),
                rho, trace);
        }
    }
    if (is_trivial(theta, a)) {
        throw ConvergenceError(
            fmt::format("Newton: converged to the trivial solution (max theta {:.3e})", theta.maxCoeff()), rho,
            trace);
    }
    return LogisticSolution{Field(grid, std::move(theta)), a, rho, iteration,
                            std::numeric_limits<double>::quiet_NaN(), std::move(trace)};
}

LogisticSolution solve_logistic(const Grid& grid, const Field& a, double tol) {
    NewtonOptions options;
    options.tol = tol;
    return solve_logistic(grid, a, options);
}

LogisticSolution solve_logistic(const Grid& grid, const Field& a, const NewtonOptions& options) {
    require_same_grid(grid, a.grid(), "solve_logistic");
    if (!(options.tol > 0.0)) throw InvalidArgument("solve_logistic: tolerance must be positive");

    const EigenPair principal = principal_of(a);
    if (principal.lambda >= 0.0) throw SubcriticalError(principal.lambda);

    LogisticSolution solution = [&] {
        if (options.initial_guess) return newton_with_fallback(a, *options.initial_guess, options);
        if (options.continuation_steps <= 0) return newton_with_fallback(a, default_guess(a, principal), options);

        // Shifting a by a constant keeps phi_1 and moves lambda_1 by the same
        // constant; start where lambda_1 is 10% of its target value.
        const double total_shift = -0.9 * principal.lambda;
        std::optional<Field> warm;
        for (int j = 0; j < options.continuation_steps; ++j) {
            const double shift = total_shift * (1.0 - static_cast<double>(j) / options.continuation_steps);
            const Field stage_a(grid, a.values().array() - shift);
            EigenPair stage_principal = principal;
            stage_principal.lambda += shift;
            Field start = warm ? *warm : default_guess(stage_a, stage_principal);
            warm = newton_with_fallback(stage_a, std::move(start), options).theta;
        }
        return newton_with_fallback(a, *warm, options);
    }();
    solution.lambda1_of_a = principal.lambda;
    return solution;
}

ProbeReport uniqueness_probe(const Grid& grid, const Field& a, int n_starts, double tol, std::uint64_t seed) {
    require_same_grid(grid, a.grid(), "uniqueness_probe");
    if (n_starts < 1) throw InvalidArgument("uniqueness_probe: need at least one start");

    ProbeReport report;
    const double scale = a.max() > 0.0 ? a.max() : 1.0;
    NewtonOptions newton;
    newton.tol = tol;

    std::optional<Field> phi1;
    try {
        phi1 = principal_of(a).phi;
    } catch (const Error&) {
        // The eigenfunction starts are replaced by constants below.
    }

    const int n_const = (n_starts + 2) / 3;
    const int n_eig = (n_starts - n_const + 1) / 2;
    const int n_rand = n_starts - n_const - n_eig;

    std::vector<std::pair<std::string, Field>> starts;
    for (int j = 0; j < n_const; ++j) {
        const double level = scale * (j + 1) / n_const;
        starts.emplace_back(fmt::format("constant:{:.6g}", level), Field::constant(grid, level));
    }
    for (int j = 0; j < n_eig; ++j) {
        const double level = scale * (j + 1) / n_eig;
        if (phi1) {
            starts.emplace_back(fmt::format("eigenfunction:{:.6g}", level), phi1->scaled(level / phi1->max()));
        } else {
            starts.emplace_back(fmt::format("constant:{:.6g}", level), Field::constant(grid, level));
        }
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int j = 0; j < n_rand; ++j) {
        Vector v(static_cast<Eigen::Index>(grid.size()));
        for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = scale * (1.0 - unit(rng));
        starts.emplace_back(fmt::format("random:{}", j), Field(grid, std::move(v)));
    }

    for (auto& [label, start] : starts) {
        ProbeStart outcome;
        outcome.label = label;
        try {
            LogisticSolution s = newton_logistic(a, std::move(start), newton);
            outcome.converged = true;
            outcome.residual = s.residual_norm;
            outcome.iterations = s.newton_iterations;
            outcome.positive = s.theta.min() > 0.0 && s.theta.max() > report.distinct_threshold;
            if (outcome.positive) {
                for (std::size_t i = 0; i < report.solutions.size(); ++i) {
                    const double gap = (report.solutions[i].values() - s.theta.values()).cwiseAbs().maxCoeff();
                    if (gap <= report.distinct_threshold) {
                        outcome.solution_index = static_cast<int>(i);
                        break;
                    }
                }
                if (outcome.solution_index < 0) {
                    outcome.solution_index = static_cast<int>(report.solutions.size());
                    report.solutions.push_back(std::move(s.theta));
                }
            }
        } catch (const ConvergenceError& e) {
            outcome.residual = e.last_residual();
            outcome.iterations = static_cast<int>(e.trace().size()) - 1;
            outcome.failure = e.what();
        }
        report.starts.push_back(std::move(outcome));
    }
    return report;
}

}  // namespace lvstab
