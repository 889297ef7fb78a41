#pragma once

#include <vector>

#include "lvstab/grid.hpp"

namespace lvstab {

/// Eigenpair of -L(m): L(m) phi = -lambda phi, with l2_norm(phi) = 1.
struct EigenPair {
    double lambda;
    Field phi;
    /// ||L(m) phi + lambda phi||_2
    double residual;
};

/// The k smallest eigenpairs of -L(m), ascending in lambda.
struct Spectrum {
    std::vector<EigenPair> pairs;
    Field weight;
    double tol;

    std::vector<double> eigenvalues() const;
};

enum class EigenMethod {
    iterative,  ///< shift-invert block iteration with Rayleigh-Ritz
    dense,      ///< full dense symmetric eigendecomposition
};

struct EigenOptions {
    double tol = 1e-10;
    int max_iterations = 500;
    EigenMethod method = EigenMethod::iterative;
    /// Retry densely when the iteration fails and the operator has fewer than
    /// dense_fallback_limit unknowns.
    bool dense_fallback = true;
    std::size_t dense_fallback_limit = 2000;
};

/// Smallest eigenvalue of -L(m) with a strictly positive eigenfunction.
/// Throws ConvergenceError if the iteration stalls, Error if the computed
/// eigenfunction is not positive.
EigenPair principal_eigenpair(const WeightedOperator& op, double tol = 1e-10);
EigenPair principal_eigenpair(const WeightedOperator& op, const EigenOptions& options);

/// Throws InvalidArgument when k exceeds the number of unknowns.
Spectrum eigenpairs(const WeightedOperator& op, int k, double tol = 1e-10);
Spectrum eigenpairs(const WeightedOperator& op, int k, const EigenOptions& options);

/// ||L(m) phi + lambda phi||_2 for an arbitrary candidate pair.
double eigen_residual(const WeightedOperator& op, double lambda, const Field& phi);

/// Rayleigh quotient -<L(m) phi, phi> / <phi, phi>, evaluated with the
/// cancellation-free difference form of the Laplacian term.
double rayleigh_quotient(const WeightedOperator& op, const Field& phi);

}  // namespace lvstab
