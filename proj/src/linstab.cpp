#include "lvstab/linstab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SparseLU>
#include <fmt/format.h>

#include "lvstab/errors.hpp"

namespace lvstab {
namespace {

using Matrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;

bool by_real_part(const CoupledEigenpair& x, const CoupledEigenpair& y) {
    if (x.mu.real() != y.mu.real()) return x.mu.real() < y.mu.real();
    return x.mu.imag() < y.mu.imag();
}

// Builds sorted, normalized eigenpairs from Ritz data and keeps the first `count`.
std::vector<CoupledEigenpair> select_pairs(const SparseMatrix& a, const Eigen::VectorXcd& values,
                                           const ComplexMatrix& vectors, int count) {
    std::vector<CoupledEigenpair> pairs;
    pairs.reserve(static_cast<std::size_t>(values.size()));
    for (Eigen::Index j = 0; j < values.size(); ++j) {
        ComplexVector x = vectors.col(j);
        x.normalize();
        const ComplexVector r = a.cast<Complex>() * x - values[j] * x;
        pairs.push_back(CoupledEigenpair{values[j], std::move(x), r.norm()});
    }
    std::sort(pairs.begin(), pairs.end(), by_real_part);
    pairs.resize(static_cast<std::size_t>(count));
    return pairs;
}

std::vector<CoupledEigenpair> dense_coupled(const SparseMatrix& a, int count) {
    Eigen::EigenSolver<Matrix> solver(Matrix(a), true);
    if (solver.info() != Eigen::Success) throw Error("coupled_spectrum: dense eigendecomposition failed");
    return select_pairs(a, solver.eigenvalues(), solver.eigenvectors(), count);
}

double relative_residual(const CoupledEigenpair& p) { return p.residual / std::max(1.0, std::abs(p.mu)); }

bool iterate_coupled(const SparseMatrix& a, int count, const CoupledOptions& options,
                     std::vector<CoupledEigenpair>& out, double& last_residual) {
    const Eigen::Index n = a.rows();
    const Eigen::Index p = std::min<Eigen::Index>(n, std::max(2 * count, count + 10));

    // Every eigenvalue lies right of this shift (Gershgorin), so the block
    // converges to the eigenvalues with smallest real part first.
    double shift = std::numeric_limits<double>::infinity();
    {
        Vector centre = Vector::Zero(n);
        Vector radius = Vector::Zero(n);
        for (Eigen::Index col = 0; col < a.outerSize(); ++col) {
            for (SparseMatrix::InnerIterator it(a, col); it; ++it) {
                if (it.row() == it.col()) centre[it.row()] = it.value();
                else radius[it.row()] += std::abs(it.value());
            }
        }
        shift = (centre - radius).minCoeff() - 1.0;
    }

    SparseMatrix shifted = a;
    for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) -= shift;
    Eigen::SparseLU<SparseMatrix> lu;
    lu.compute(shifted);
    if (lu.info() != Eigen::Success) throw Error("coupled_spectrum: shifted operator factorization failed");

    std::mt19937_64 rng(0xc0ffeeULL);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix q(n, p);
    for (Eigen::Index c = 0; c < p; ++c)
        for (Eigen::Index r = 0; r < n; ++r) q(r, c) = dist(rng);

    last_residual = std::numeric_limits<double>::infinity();
    for (int it = 0; it < options.max_iterations; ++it) {
        Eigen::HouseholderQR<Matrix> qr(lu.solve(q));
        q = qr.householderQ() * Matrix::Identity(n, p);
        const Matrix h = q.transpose() * (a * q);
        Eigen::EigenSolver<Matrix> small(h, true);
        if (small.info() != Eigen::Success) continue;
        const ComplexMatrix x = q.cast<Complex>() * small.eigenvectors();
        std::vector<CoupledEigenpair> pairs = select_pairs(a, small.eigenvalues(), x, count);
        double worst = 0.0;
        for (const auto& pair : pairs) worst = std::max(worst, relative_residual(pair));
        last_residual = worst;
        if (worst <= options.tol) {
            out = std::move(pairs);
            return true;
        }
    }
    return false;
}

Vector stack(const Field& top, const Field& bottom) {
    Vector x(static_cast<Eigen::Index>(top.size() + bottom.size()));
    x << top.values(), bottom.values();
    return x;
}

}  // namespace

Field CoupledJacobian::prey_weight() const {
    return Field(grid(), (params.a.values().array() - 2.0 * u.values().array() - params.b * v.values().array())
                             .matrix());
}

Field CoupledJacobian::predator_weight() const {
    return Field(grid(), (params.a.values().array() - 2.0 * v.values().array() + params.c * u.values().array())
                             .matrix());
}

CoupledJacobian assemble_jacobian(const Field& u, const Field& v, const ModelParams& params, const Grid& grid) {
    require_same_grid(grid, u.grid(), "assemble_jacobian (u)");
    require_same_grid(grid, v.grid(), "assemble_jacobian (v)");
    require_same_grid(grid, params.a.grid(), "assemble_jacobian (a)");

    CoupledJacobian jac{u, v, params, {}};
    const Field wu = jac.prey_weight();
    const Field wv = jac.predator_weight();
    const SparseMatrix lap = laplacian(grid);
    const auto n = static_cast<Eigen::Index>(grid.size());

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(2 * lap.nonZeros() + 2 * n));
    for (Eigen::Index col = 0; col < lap.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(lap, col); it; ++it) {
            const auto r = static_cast<int>(it.row());
            const auto c = static_cast<int>(it.col());
            const double diag_u = r == c ? wu.values()[r] : 0.0;
            const double diag_v = r == c ? wv.values()[r] : 0.0;
            triplets.emplace_back(r, c, it.value() + diag_u);
            triplets.emplace_back(r + n, c + n, it.value() + diag_v);
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        triplets.emplace_back(static_cast<int>(i), static_cast<int>(i + n), -params.b * u.values()[i]);
        triplets.emplace_back(static_cast<int>(i + n), static_cast<int>(i), params.c * v.values()[i]);
    }
    jac.matrix.resize(2 * n, 2 * n);
    jac.matrix.setFromTriplets(triplets.begin(), triplets.end());
    jac.matrix.makeCompressed();
    return jac;
}

double s_parameter(double b, double c) {
    validate_predation(b, c);
    return (2.0 + c - b) / (1.0 + b * c);
}

ModeRatios mode_ratios(double b, double c) {
    validate_predation(b, c);
    const double gap = std::abs(b - c / (2.0 * c + 1.0));
    return ModeRatios{b / c, (1.0 - b) / (1.0 + c), gap <= kDegenerateThreshold, gap <= kDegenerateBand};
}

std::vector<CoupledEigenpair> coupled_spectrum(const CoupledJacobian& jac, int count, double tol) {
    CoupledOptions options;
    options.tol = tol;
    return coupled_spectrum(jac, count, options);
}

std::vector<CoupledEigenpair> coupled_spectrum(const CoupledJacobian& jac, int count,
                                               const CoupledOptions& options) {
    const auto n = static_cast<std::size_t>(jac.matrix.rows());
    if (count < 1 || static_cast<std::size_t>(count) > n) {
        throw InvalidArgument(fmt::format("coupled_spectrum: count = {} outside [1, {}]", count, n));
    }
    const SparseMatrix a = -jac.matrix;
    if (options.method == CoupledMethod::dense) return dense_coupled(a, count);

    std::vector<CoupledEigenpair> pairs;
    double last = 0.0;
    if (iterate_coupled(a, count, options, pairs, last)) return pairs;
    if (options.dense_fallback && n < options.dense_fallback_limit) return dense_coupled(a, count);
    throw ConvergenceError(fmt::format("coupled_spectrum: no convergence in {} iterations (residual {:.3e})",
                                       options.max_iterations, last),
                           last);
}

double ansatz_residual(const CoupledJacobian& jac, const EigenPair& scalar, double prey_coeff,
                       double predator_coeff) {
    require_same_grid(jac.grid(), scalar.phi.grid(), "ansatz_residual");
    const Vector x = stack(scalar.phi.scaled(prey_coeff), scalar.phi.scaled(predator_coeff));
    return (jac.matrix * x + scalar.lambda * x).norm() / x.norm();
}

std::pair<Field, Field> real_components(const CoupledJacobian& jac, const ComplexVector& x) {
    Eigen::Index imax = 0;
    x.cwiseAbs().maxCoeff(&imax);
    const Complex phase = std::conj(x[imax]) / std::abs(x[imax]);
    const Vector re = (x * phase).real();
    const auto n = static_cast<Eigen::Index>(jac.block_size());
    return {Field(jac.grid(), re.head(n)), Field(jac.grid(), re.tail(n))};
}

DegenerateReduction degenerate_reduction(const CoupledJacobian& jac, const CoupledEigenpair& pair,
                                         const Spectrum& scalar_two) {
    const auto [phi, psi] = real_components(jac, pair.vector);
    const double c = jac.params.c;
    const Field xi(jac.grid(), (2.0 * c + 1.0) * phi.values() - psi.values());
    const double total = std::sqrt(l2_norm(phi) * l2_norm(phi) + l2_norm(psi) * l2_norm(psi));
    const double ratio = l2_norm(xi) / total;
    if (ratio <= 1e-6) return DegenerateReduction{true, ratio, 0.0};

    // Project the normalized xi onto the eigenfunctions whose eigenvalue is
    // closest to Re(mu), including near-ties within the cluster.
    const Field unit = xi.scaled(1.0 / l2_norm(xi));
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& p : scalar_two.pairs) nearest = std::min(nearest, std::abs(p.lambda - pair.mu.real()));
    Vector projection = Vector::Zero(unit.values().size());
    for (const auto& p : scalar_two.pairs) {
        if (std::abs(p.lambda - pair.mu.real()) <= nearest + 1e-6 * std::max(1.0, std::abs(p.lambda))) {
            projection += l2_inner(p.phi, unit) * p.phi.values();
        }
    }
    const double distance = l2_norm(Field(jac.grid(), unit.values() - projection));
    return DegenerateReduction{false, ratio, distance};
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::stable: return "stable";
        case Verdict::unstable: return "unstable";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

StabilityReport verify_theorem(const ModelParams& params, const Grid& grid, int k, double tol) {
    VerifyOptions options;
    options.k = k;
    options.eigen_tol = tol;
    return verify_theorem(params, grid, options);
}

StabilityReport verify_theorem(const ModelParams& params, const Grid& grid, const VerifyOptions& options) {
    params.validate();
    require_same_grid(grid, params.a.grid(), "verify_theorem");
    if (options.k < 1 || static_cast<std::size_t>(options.k) > grid.size()) {
        throw InvalidArgument(fmt::format("verify_theorem: k = {} outside [1, {}]", options.k, grid.size()));
    }

    StabilityReport report;
    report.s_value = s_parameter(params.b, params.c);
    const ModeRatios ratios = mode_ratios(params.b, params.c);
    report.z1 = ratios.z1;
    report.z2 = ratios.z2;
    report.degenerate = ratios.degenerate;
    report.degenerate_band = ratios.degenerate_band;
    report.mismatch_threshold =
        ratios.degenerate_band ? std::max(100.0 * options.eigen_tol, 1e-6) : 100.0 * options.eigen_tol;

    try {
        NewtonOptions newton;
        newton.tol = options.logistic_tol;
        const LogisticSolution theta = solve_logistic(grid, params.a, newton);
        report.theta_residual = theta.residual_norm;
        report.lambda1_of_a = theta.lambda1_of_a;
        const SteadyState state = synchronized_state(params, theta);
        const CoupledJacobian jac = assemble_jacobian(state.u, state.v, params, grid);

        const int count = 2 * options.k;
        const std::vector<CoupledEigenpair> coupled = coupled_spectrum(jac, count, options.eigen_tol);

        const int per_family = std::min<int>(count, static_cast<int>(grid.size()));
        const auto weight = [&](double s) {
            return Field(grid, (params.a.values().array() - s * theta.theta.values().array()).matrix());
        };
        const Spectrum s_family = eigenpairs(assemble_operator(grid, weight(report.s_value)), per_family,
                                             options.eigen_tol);
        const Spectrum two_family =
            ratios.degenerate ? s_family
                              : eigenpairs(assemble_operator(grid, weight(2.0)), per_family, options.eigen_tol);

        std::vector<std::pair<double, ModeFamily>> merged;
        for (const auto& p : s_family.pairs) merged.emplace_back(p.lambda, ModeFamily::s_weight);
        for (const auto& p : two_family.pairs) merged.emplace_back(p.lambda, ModeFamily::two_weight);
        std::stable_sort(merged.begin(), merged.end(),
                         [](const auto& x, const auto& y) { return x.first < y.first; });
        merged.resize(static_cast<std::size_t>(count));

        const auto rel = [](double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1e-8); };
        report.mu1 = coupled.front().mu.real();
        for (std::size_t j = 0; j < coupled.size(); ++j) {
            const auto& mu = coupled[j].mu;
            report.coupled_eigs.push_back(mu);
            report.predicted_eigs.push_back(merged[j].first);
            report.predicted_family.push_back(merged[j].second);
            report.rel_errors.push_back(rel(mu.real(), merged[j].first));
            report.max_rel_mismatch = std::max(report.max_rel_mismatch, report.rel_errors.back());
            report.max_imag = std::max(report.max_imag, std::abs(mu.imag()));
            report.mu1 = std::min(report.mu1, mu.real());
            const double duplicated = s_family.pairs[j / 2].lambda;
            report.duplicated_claim_mismatch = std::max(report.duplicated_claim_mismatch, rel(mu.real(), duplicated));

            if (!ratios.degenerate) {
                const auto [phi, psi] = real_components(jac, coupled[j].vector);
                const double z = l2_inner(phi, psi) / l2_inner(psi, psi);
                report.ratio_errors.push_back(
                    std::min(std::abs(z - ratios.z1) / ratios.z1, std::abs(z - ratios.z2) / ratios.z2));
            }
        }

        const double min_predicted = *std::min_element(report.predicted_eigs.begin(), report.predicted_eigs.end());
        if (report.max_rel_mismatch > report.mismatch_threshold) {
            report.verdict = Verdict::inconclusive;
            report.cause = fmt::format("coupled spectrum deviates from prediction (max relative mismatch {:.3e})",
                                       report.max_rel_mismatch);
        } else if (min_predicted > 0.0 && report.mu1 > 0.0) {
            report.verdict = Verdict::stable;
        } else {
            report.verdict = Verdict::unstable;
        }
    } catch (const SubcriticalError& e) {
        report.verdict = Verdict::inconclusive;
        report.lambda1_of_a = e.lambda1();
        report.cause = fmt::format("no positive steady state: {}", e.what());
    } catch (const Error& e) {
        report.verdict = Verdict::inconclusive;
        report.cause = e.what();
    }
    return report;
}

}  // namespace lvstab
