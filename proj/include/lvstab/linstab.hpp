#pragma once

#include <complex>
#include <string>
#include <vector>

#include "lvstab/elliptic.hpp"
#include "lvstab/grid.hpp"
#include "lvstab/model.hpp"
#include "lvstab/spectral.hpp"

namespace lvstab {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;

/// Linearization of the predator-prey system about (u, v):
///
///   [ Lap + diag(a - 2u - b v)      -b diag(u)            ]
///   [ c diag(v)                      Lap + diag(a - 2v + c u) ]
///
/// Unknowns are ordered prey block first, then predator block, each in grid
/// node order.
struct CoupledJacobian {
    Field u;
    Field v;
    ModelParams params;
    SparseMatrix matrix;

    const Grid& grid() const noexcept { return u.grid(); }
    std::size_t block_size() const noexcept { return u.size(); }
    /// a - 2u - b v
    Field prey_weight() const;
    /// a - 2v + c u
    Field predator_weight() const;
};

/// Throws GridMismatch when u, v, a and grid disagree.
CoupledJacobian assemble_jacobian(const Field& u, const Field& v, const ModelParams& params, const Grid& grid);

/// s = (2 + c - b) / (1 + b c), the weight multiplier of the first mode family.
double s_parameter(double b, double c);

struct ModeRatios {
    double z1;  ///< b / c, pairs with weight a - s theta
    double z2;  ///< (1 - b) / (1 + c), pairs with weight a - 2 theta
    bool degenerate;       ///< |b - c/(2c+1)| <= 1e-12
    bool degenerate_band;  ///< |b - c/(2c+1)| <= 1e-4 (includes the exact locus)
};

inline constexpr double kDegenerateThreshold = 1e-12;
inline constexpr double kDegenerateBand = 1e-4;

/// Closed-form roots of c(1+c) z^2 - (b+c) z + b(1-b) = 0.
ModeRatios mode_ratios(double b, double c);

struct CoupledEigenpair {
    Complex mu;  ///< J x = -mu x
    ComplexVector vector;
    double residual;  ///< ||J x + mu x|| / ||x||
};

enum class CoupledMethod { iterative, dense };

struct CoupledOptions {
    double tol = 1e-10;
    int max_iterations = 500;
    CoupledMethod method = CoupledMethod::iterative;
    bool dense_fallback = true;
    std::size_t dense_fallback_limit = 1000;
};

/// The `count` eigenvalues of -J with smallest real part, sorted ascending by
/// real part (ties by imaginary part). Shift-invert block iteration with a
/// shift left of the Gershgorin region and Rayleigh-Ritz on the block.
std::vector<CoupledEigenpair> coupled_spectrum(const CoupledJacobian& jac, int count, double tol = 1e-10);
std::vector<CoupledEigenpair> coupled_spectrum(const CoupledJacobian& jac, int count, const CoupledOptions& options);

/// Relative residual ||J (A phi, B phi) + lambda (A phi, B phi)|| / ||(A phi, B phi)||
/// for a scalar eigenpair; no eigensolver involved.
double ansatz_residual(const CoupledJacobian& jac, const EigenPair& scalar, double prey_coeff,
                       double predator_coeff);

/// Outcome of mapping a coupled eigenvector (phi, psi) to xi = (2c+1) phi - psi.
struct DegenerateReduction {
    bool vanishes;     ///< ||xi|| <= 1e-6 ||(phi, psi)||
    double xi_ratio;   ///< ||xi|| / ||(phi, psi)||
    /// Distance of xi / ||xi|| from the span of the supplied scalar
    /// eigenfunctions of Lap + a - 2 theta (0 when xi vanishes).
    double eigenspace_residual;
};

DegenerateReduction degenerate_reduction(const CoupledJacobian& jac, const CoupledEigenpair& pair,
                                         const Spectrum& scalar_two);

/// Phase-normalized real prey/predator components of a coupled eigenvector.
std::pair<Field, Field> real_components(const CoupledJacobian& jac, const ComplexVector& x);

enum class Verdict { stable, unstable, inconclusive };
std::string to_string(Verdict v);

enum class ModeFamily { s_weight, two_weight };

struct StabilityReport {
    double s_value = 0.0;
    double z1 = 0.0;
    double z2 = 0.0;
    bool degenerate = false;
    bool degenerate_band = false;
    std::vector<Complex> coupled_eigs;
    /// Sorted union of lambda_i(a - s theta) and lambda_i(a - 2 theta).
    std::vector<double> predicted_eigs;
    std::vector<ModeFamily> predicted_family;
    std::vector<double> rel_errors;
    double max_rel_mismatch = 0.0;
    double max_imag = 0.0;
    std::vector<double> ratio_errors;
    /// Mismatch against lambda_i(a - s theta) with every value listed twice.
    double duplicated_claim_mismatch = 0.0;
    double mu1 = 0.0;
    double mismatch_threshold = 0.0;
    double theta_residual = 0.0;
    double lambda1_of_a = 0.0;
    Verdict verdict = Verdict::inconclusive;
    std::string cause;
};

struct VerifyOptions {
    int k = 6;
    double eigen_tol = 1e-10;
    double logistic_tol = 1e-10;
};

/// Full pipeline: logistic solve, synchronized state, coupled spectrum (2k
/// values) and the predicted scalar spectrum. Solver failures produce an
/// inconclusive report with `cause` set; parameter violations throw.
StabilityReport verify_theorem(const ModelParams& params, const Grid& grid, const VerifyOptions& options);
StabilityReport verify_theorem(const ModelParams& params, const Grid& grid, int k, double tol = 1e-10);

}  // namespace lvstab
