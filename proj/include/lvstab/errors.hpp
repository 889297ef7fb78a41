#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace lvstab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input: bad domain, parameter out of range, malformed file.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Two fields or operators live on different grids.
class GridMismatch : public Error {
public:
    using Error::Error;
};

/// An iterative method ran out of iterations (or damping) before meeting its tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double last_residual,
                     std::vector<double> trace = {})
        : Error(what), last_residual_(last_residual), trace_(std::move(trace)) {}

    double last_residual() const noexcept { return last_residual_; }
    /// Residual history, one entry per iteration (may be empty).
    const std::vector<double>& trace() const noexcept { return trace_; }

private:
    double last_residual_;
    std::vector<double> trace_;
};

/// The logistic problem has no positive solution: lambda_1 of -(Laplacian + a) is >= 0.
class SubcriticalError : public Error {
public:
    explicit SubcriticalError(double lambda1);

    /// lambda_1(a), the principal eigenvalue of -(Laplacian + a).
    double lambda1() const noexcept { return lambda1_; }

private:
    double lambda1_;
};

/// A time integration produced a negative density.
class PositivityError : public Error {
public:
    PositivityError(const std::string& what, double time, std::size_t node)
        : Error(what), time_(time), node_(node) {}

    double time() const noexcept { return time_; }
    std::size_t node() const noexcept { return node_; }

private:
    double time_;
    std::size_t node_;
};

}  // namespace lvstab
