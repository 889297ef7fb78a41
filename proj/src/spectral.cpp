#include "lvstab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SparseCholesky>
#include <fmt/format.h>

#include "lvstab/errors.hpp"

namespace lvstab {
namespace {

using Matrix = Eigen::MatrixXd;

struct RawPairs {
    Vector values;
    Matrix vectors;  // columns, Euclidean-normalized
};

Matrix starting_block(Eigen::Index n, Eigen::Index p) {
    std::mt19937_64 rng(0x5eedULL);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix q(n, p);
    for (Eigen::Index c = 0; c < p; ++c)
        for (Eigen::Index r = 0; r < n; ++r) q(r, c) = dist(rng);
    q.col(0).setOnes();
    return q;
}

Matrix orthonormalize(const Matrix& y) {
    Eigen::HouseholderQR<Matrix> qr(y);
    return qr.householderQ() * Matrix::Identity(y.rows(), y.cols());
}

// Smallest k eigenpairs of the symmetric matrix a = -L(m) by block inverse
// iteration on (a - shift I) followed by Rayleigh-Ritz on the block.
// Returns false when max_iterations is exhausted; `last_residual` holds the
// worst relative residual of the wanted pairs.
bool iterate_symmetric(const SparseMatrix& a, double shift, int k, const EigenOptions& options,
                       RawPairs& out, double& last_residual) {
    const Eigen::Index n = a.rows();
    const Eigen::Index p = std::min<Eigen::Index>(n, std::max(2 * k, k + 8));

    SparseMatrix shifted = a;
    for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) -= shift;
    Eigen::SimplicialLDLT<SparseMatrix> solver(shifted);
    if (solver.info() != Eigen::Success) throw Error("eigenpairs: shifted operator factorization failed");

    Matrix q = orthonormalize(starting_block(n, p));
    last_residual = std::numeric_limits<double>::infinity();
    for (int it = 0; it < options.max_iterations; ++it) {
        q = orthonormalize(solver.solve(q));
        const Matrix aq = a * q;
        Matrix h = q.transpose() * aq;
        h = 0.5 * (h + h.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Matrix> small(h);
        const Matrix& y = small.eigenvectors();
        q = q * y;
        const Matrix ax = aq * y;

        double worst = 0.0;
        for (int j = 0; j < k; ++j) {
            const double theta = small.eigenvalues()[j];
            const double r = (ax.col(j) - theta * q.col(j)).norm();
            worst = std::max(worst, r / std::max(1.0, std::abs(theta)));
        }
        last_residual = worst;
        if (worst <= options.tol) {
            out.values = small.eigenvalues().head(k);
            out.vectors = q.leftCols(k);
            return true;
        }
    }
    return false;
}

RawPairs dense_pairs(const SparseMatrix& a, int k) {
    const Matrix dense = Matrix(a);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(dense);
    if (solver.info() != Eigen::Success) throw Error("eigenpairs: dense eigendecomposition failed");
    return RawPairs{solver.eigenvalues().head(k), solver.eigenvectors().leftCols(k)};
}

}  // namespace

std::vector<double> Spectrum::eigenvalues() const {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(p.lambda);
    return out;
}

double eigen_residual(const WeightedOperator& op, double lambda, const Field& phi) {
    require_same_grid(op.grid(), phi.grid(), "eigen_residual");
    return std::sqrt((op.matrix() * phi.values() + lambda * phi.values()).squaredNorm() *
                     op.grid().cell_volume());
}

double rayleigh_quotient(const WeightedOperator& op, const Field& phi) {
    require_same_grid(op.grid(), phi.grid(), "rayleigh_quotient");
    const double weighted =
        phi.values().cwiseProduct(phi.values()).dot(op.weight().values()) * op.grid().cell_volume();
    return (dirichlet_energy(phi) - weighted) / (l2_norm(phi) * l2_norm(phi));
}

Spectrum eigenpairs(const WeightedOperator& op, int k, double tol) {
    EigenOptions options;
    options.tol = tol;
    return eigenpairs(op, k, options);
}

Spectrum eigenpairs(const WeightedOperator& op, int k, const EigenOptions& options) {
    const Grid& grid = op.grid();
    if (k < 1 || static_cast<std::size_t>(k) > grid.size()) {
        throw InvalidArgument(fmt::format("eigenpairs: k = {} outside [1, {}]", k, grid.size()));
    }
    if (!(options.tol > 0.0)) throw InvalidArgument("eigenpairs: tolerance must be positive");

    const SparseMatrix a = -op.matrix();
    RawPairs raw;
    if (options.method == EigenMethod::dense) {
        raw = dense_pairs(a, k);
    } else {
        // lambda_1(m) >= lambda_1(0) - max m, so this shift keeps a - shift I positive definite.
        const double shift = principal_laplacian_eigenvalue(grid) - op.weight().max() - 1.0;
        double last = 0.0;
        if (!iterate_symmetric(a, shift, k, options, raw, last)) {
            if (options.dense_fallback && grid.size() < options.dense_fallback_limit) {
                raw = dense_pairs(a, k);
            } else {
                throw ConvergenceError(
                    fmt::format("eigenpairs: no convergence in {} iterations (residual {:.3e})",
                                options.max_iterations, last),
                    last);
            }
        }
    }

    Spectrum spectrum{{}, op.weight(), options.tol};
    spectrum.pairs.reserve(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        Vector v = raw.vectors.col(j);
        Eigen::Index imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        if (v[imax] < 0.0) v = -v;
        Field phi(grid, std::move(v));
        phi = phi.scaled(1.0 / l2_norm(phi));
        const double lambda = rayleigh_quotient(op, phi);
        const double residual = eigen_residual(op, lambda, phi);
        spectrum.pairs.push_back(EigenPair{lambda, std::move(phi), residual});
    }
    std::stable_sort(spectrum.pairs.begin(), spectrum.pairs.end(),
                     [](const EigenPair& x, const EigenPair& y) { return x.lambda < y.lambda; });
    return spectrum;
}

EigenPair principal_eigenpair(const WeightedOperator& op, double tol) {
    EigenOptions options;
    options.tol = tol;
    return principal_eigenpair(op, options);
}

EigenPair principal_eigenpair(const WeightedOperator& op, const EigenOptions& options) {
    Spectrum s = eigenpairs(op, 1, options);
    EigenPair pair = std::move(s.pairs.front());
    if (!(pair.phi.min() > 0.0)) {
        throw Error(fmt::format("principal eigenfunction is not positive (min value {:.3e})", pair.phi.min()));
    }
    return pair;
}

}  // namespace lvstab
