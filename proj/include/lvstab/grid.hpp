#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace lvstab {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

enum class DomainKind { interval, rectangle };

/// Box domain (interval or rectangle) with a uniform interior grid.
///
/// Only interior nodes are represented. Boundary nodes carry the homogeneous
/// Dirichlet value and never appear in fields or matrices.
struct Domain {
    DomainKind kind = DomainKind::interval;
    std::array<double, 2> lower{0.0, 0.0};
    std::array<double, 2> extent{1.0, 1.0};
    std::array<int, 2> resolution{3, 1};

    static Domain interval(double lo, double hi, int n);
    static Domain rectangle(double x_lo, double x_hi, double y_lo, double y_hi, int nx, int ny);

    int dimension() const noexcept { return kind == DomainKind::interval ? 1 : 2; }

    bool operator==(const Domain&) const = default;
};

/// Validated domain with derived spacing. Node ordering is lexicographic with
/// the x index running fastest: node = i + nx * j.
class Grid {
public:
    int dimension() const noexcept { return domain_.dimension(); }
    std::size_t size() const noexcept { return size_; }
    int resolution(int axis) const { return domain_.resolution.at(axis); }
    double spacing(int axis) const { return spacing_.at(axis); }
    double extent(int axis) const { return domain_.extent.at(axis); }
    /// Quadrature weight h_1 * ... * h_d.
    double cell_volume() const noexcept { return cell_volume_; }
    const Domain& domain() const noexcept { return domain_; }

    std::size_t node(int i, int j = 0) const noexcept {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(domain_.resolution[0]) * static_cast<std::size_t>(j);
    }
    /// Axis index (0-based, interior) of a node.
    int axis_index(std::size_t node, int axis) const noexcept;
    double coordinate(std::size_t node, int axis) const noexcept;

    bool operator==(const Grid& other) const noexcept { return domain_ == other.domain_; }

private:
    friend Grid build_grid(const Domain& domain);
    explicit Grid(const Domain& domain);

    Domain domain_;
    std::array<double, 2> spacing_{0.0, 0.0};
    double cell_volume_ = 0.0;
    std::size_t size_ = 0;
};

/// Throws InvalidArgument for non-positive extents or resolution < 3.
Grid build_grid(const Domain& domain);

/// Grid samples of a scalar function at interior nodes.
class Field {
public:
    Field(Grid grid, Vector values);

    static Field zeros(const Grid& grid);
    static Field constant(const Grid& grid, double value);
    /// Samples f(x, y) at every interior node (y = 0 in 1D).
    static Field sample(const Grid& grid, const std::function<double(double, double)>& f);

    const Grid& grid() const noexcept { return grid_; }
    const Vector& values() const noexcept { return values_; }
    Vector& values() noexcept { return values_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }
    double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }

    double min() const { return values_.minCoeff(); }
    double max() const { return values_.maxCoeff(); }

    Field scaled(double factor) const { return Field(grid_, factor * values_); }

private:
    Grid grid_;
    Vector values_;
};

/// Throws GridMismatch with `context` in the message unless both grids agree.
void require_same_grid(const Grid& a, const Grid& b, const std::string& context);

double l2_inner(const Field& f, const Field& g);
double l2_norm(const Field& f);

/// Discrete Dirichlet Laplacian (3-point in 1D, 5-point in 2D).
SparseMatrix laplacian(const Grid& grid);

/// Applies the discrete Laplacian matrix-free.
Vector apply_laplacian(const Grid& grid, const Vector& values);

/// -<Laplacian f, f> evaluated as a sum of squared differences (no cancellation),
/// including the quadrature weight.
double dirichlet_energy(const Field& f);

/// Discrete L(m) = Laplacian + diag(m) with Dirichlet elimination.
class WeightedOperator {
public:
    const Grid& grid() const noexcept { return weight_.grid(); }
    const Field& weight() const noexcept { return weight_; }
    const SparseMatrix& matrix() const noexcept { return matrix_; }

    Field apply(const Field& f) const;

private:
    friend WeightedOperator assemble_operator(const Grid& grid, const Field& weight);
    WeightedOperator(Field weight, SparseMatrix matrix)
        : weight_(std::move(weight)), matrix_(std::move(matrix)) {}

    Field weight_;
    SparseMatrix matrix_;
};

WeightedOperator assemble_operator(const Grid& grid, const Field& weight);

/// Closed-form k-th smallest eigenvalue (k >= 1) of -Laplacian on an interval grid.
double dirichlet_eigenvalue_1d(int k, double extent, int n);

/// Smallest eigenvalue of the discrete -Laplacian on the grid (closed form).
double principal_laplacian_eigenvalue(const Grid& grid);

/// Four-point Lagrange interpolation of a 1D field at x, using the zero
/// Dirichlet values at the ends where needed.
double interpolate_1d(const Field& f, double x);

}  // namespace lvstab
