#include "lvstab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <fmt/format.h>

#include "lvstab/errors.hpp"

namespace lvstab {

Domain Domain::interval(double lo, double hi, int n) {
    Domain d;
    d.kind = DomainKind::interval;
    d.lower = {lo, 0.0};
    d.extent = {hi - lo, 1.0};
    d.resolution = {n, 1};
    return d;
}

Domain Domain::rectangle(double x_lo, double x_hi, double y_lo, double y_hi, int nx, int ny) {
    Domain d;
    d.kind = DomainKind::rectangle;
    d.lower = {x_lo, y_lo};
    d.extent = {x_hi - x_lo, y_hi - y_lo};
    d.resolution = {nx, ny};
    return d;
}

Grid::Grid(const Domain& domain) : domain_(domain) {
    cell_volume_ = 1.0;
    size_ = 1;
    for (int axis = 0; axis < domain_.dimension(); ++axis) {
        spacing_[axis] = domain_.extent[axis] / (domain_.resolution[axis] + 1);
        cell_volume_ *= spacing_[axis];
        size_ *= static_cast<std::size_t>(domain_.resolution[axis]);
    }
}

Grid build_grid(const Domain& domain) {
    for (int axis = 0; axis < domain.dimension(); ++axis) {
        if (!(domain.extent[axis] > 0.0) || !std::isfinite(domain.extent[axis])) {
            throw InvalidArgument(
                fmt::format("extent along axis {} must be positive, got {}", axis, domain.extent[axis]));
        }
        if (domain.resolution[axis] < 3) {
            throw InvalidArgument(fmt::format("resolution too small: axis {} has {} interior nodes (need >= 3)",
                                              axis, domain.resolution[axis]));
        }
    }
    Domain normalized = domain;
    if (domain.kind == DomainKind::interval) {
        normalized.lower[1] = 0.0;
        normalized.extent[1] = 1.0;
        normalized.resolution[1] = 1;
    }
    return Grid(normalized);
}

int Grid::axis_index(std::size_t node, int axis) const noexcept {
    const auto nx = static_cast<std::size_t>(domain_.resolution[0]);
    return axis == 0 ? static_cast<int>(node % nx) : static_cast<int>(node / nx);
}

double Grid::coordinate(std::size_t node, int axis) const noexcept {
    if (axis >= dimension()) return 0.0;
    return domain_.lower[axis] + (axis_index(node, axis) + 1) * spacing_[axis];
}

// ---------------------------------------------------------------------------

Field::Field(Grid grid, Vector values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.size()) != grid_.size()) {
        throw GridMismatch(fmt::format("field has {} values but grid has {} interior nodes",
                                       values_.size(), grid_.size()));
    }
}

Field Field::zeros(const Grid& grid) {
    return Field(grid, Vector::Zero(static_cast<Eigen::Index>(grid.size())));
}

Field Field::constant(const Grid& grid, double value) {
    return Field(grid, Vector::Constant(static_cast<Eigen::Index>(grid.size()), value));
}

Field Field::sample(const Grid& grid, const std::function<double(double, double)>& f) {
    Vector values(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t k = 0; k < grid.size(); ++k) {
        values[static_cast<Eigen::Index>(k)] = f(grid.coordinate(k, 0), grid.coordinate(k, 1));
    }
    return Field(grid, std::move(values));
}

void require_same_grid(const Grid& a, const Grid& b, const std::string& context) {
    if (!(a == b)) throw GridMismatch(context + ": fields are defined on different grids");
}

double l2_inner(const Field& f, const Field& g) {
    require_same_grid(f.grid(), g.grid(), "l2_inner");
    return f.values().dot(g.values()) * f.grid().cell_volume();
}

double l2_norm(const Field& f) {
    return std::sqrt(f.values().squaredNorm() * f.grid().cell_volume());
}

SparseMatrix laplacian(const Grid& grid) {
    const int nx = grid.resolution(0);
    const int ny = grid.dimension() == 2 ? grid.resolution(1) : 1;
    const double ix2 = 1.0 / (grid.spacing(0) * grid.spacing(0));
    const double iy2 = grid.dimension() == 2 ? 1.0 / (grid.spacing(1) * grid.spacing(1)) : 0.0;
    const double diag = -2.0 * ix2 - 2.0 * iy2;

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(grid.size() * (grid.dimension() == 2 ? 5 : 3));
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const auto row = static_cast<int>(grid.node(i, j));
            triplets.emplace_back(row, row, diag);
            if (i > 0) triplets.emplace_back(row, static_cast<int>(grid.node(i - 1, j)), ix2);
            if (i + 1 < nx) triplets.emplace_back(row, static_cast<int>(grid.node(i + 1, j)), ix2);
            if (j > 0) triplets.emplace_back(row, static_cast<int>(grid.node(i, j - 1)), iy2);
            if (j + 1 < ny) triplets.emplace_back(row, static_cast<int>(grid.node(i, j + 1)), iy2);
        }
    }
    const auto n = static_cast<Eigen::Index>(grid.size());
    SparseMatrix m(n, n);
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.makeCompressed();
    return m;
}

Vector apply_laplacian(const Grid& grid, const Vector& values) {
    const int nx = grid.resolution(0);
    const int ny = grid.dimension() == 2 ? grid.resolution(1) : 1;
    const double ix2 = 1.0 / (grid.spacing(0) * grid.spacing(0));
    const double iy2 = grid.dimension() == 2 ? 1.0 / (grid.spacing(1) * grid.spacing(1)) : 0.0;
    Vector out(values.size());
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const auto k = static_cast<Eigen::Index>(grid.node(i, j));
            const double c = values[k];
            const double w = i > 0 ? values[k - 1] : 0.0;
            const double e = i + 1 < nx ? values[k + 1] : 0.0;
            double acc = (w - 2.0 * c + e) * ix2;
            if (grid.dimension() == 2) {
                const double s = j > 0 ? values[k - nx] : 0.0;
                const double n = j + 1 < ny ? values[k + nx] : 0.0;
                acc += (s - 2.0 * c + n) * iy2;
            }
            out[k] = acc;
        }
    }
    return out;
}

double dirichlet_energy(const Field& f) {
    const Grid& grid = f.grid();
    const Vector& v = f.values();
    const int nx = grid.resolution(0);
    const int ny = grid.dimension() == 2 ? grid.resolution(1) : 1;
    const auto at = [&](int i, int j) {
        if (i < 0 || i >= nx || j < 0 || j >= ny) return 0.0;
        return v[static_cast<Eigen::Index>(grid.node(i, j))];
    };
    double ex = 0.0;
    for (int j = 0; j < ny; ++j) {
        for (int i = -1; i < nx; ++i) {
            const double d = at(i + 1, j) - at(i, j);
            ex += d * d;
        }
    }
    double energy = ex / (grid.spacing(0) * grid.spacing(0));
    if (grid.dimension() == 2) {
        double ey = 0.0;
        for (int j = -1; j < ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                const double d = at(i, j + 1) - at(i, j);
                ey += d * d;
            }
        }
        energy += ey / (grid.spacing(1) * grid.spacing(1));
    }
    return energy * grid.cell_volume();
}

Field WeightedOperator::apply(const Field& f) const {
    require_same_grid(grid(), f.grid(), "WeightedOperator::apply");
    return Field(grid(), matrix_ * f.values());
}

WeightedOperator assemble_operator(const Grid& grid, const Field& weight) {
    require_same_grid(grid, weight.grid(), "assemble_operator");
    SparseMatrix m = laplacian(grid);
    for (Eigen::Index k = 0; k < m.rows(); ++k) m.coeffRef(k, k) += weight.values()[k];
    return WeightedOperator(weight, std::move(m));
}

double dirichlet_eigenvalue_1d(int k, double extent, int n) {
    const double h = extent / (n + 1);
    const double s = std::sin(k * std::numbers::pi * h / (2.0 * extent));
    return 4.0 / (h * h) * s * s;
}

double principal_laplacian_eigenvalue(const Grid& grid) {
    double lambda = 0.0;
    for (int axis = 0; axis < grid.dimension(); ++axis) {
        lambda += dirichlet_eigenvalue_1d(1, grid.extent(axis), grid.resolution(axis));
    }
    return lambda;
}

double interpolate_1d(const Field& f, double x) {
    const Grid& grid = f.grid();
    if (grid.dimension() != 1) throw InvalidArgument("interpolate_1d requires an interval grid");
    const int n = grid.resolution(0);
    const double h = grid.spacing(0);
    const double lo = grid.domain().lower[0];
    if (x < lo || x > lo + grid.extent(0)) throw InvalidArgument("interpolate_1d: point outside the domain");

    // Extended index j in [0, n+1]; j = 0 and j = n+1 are the boundary zeros.
    const auto value = [&](int j) {
        return (j <= 0 || j >= n + 1) ? 0.0 : f.values()[j - 1];
    };
    const int base = std::clamp(static_cast<int>(std::floor((x - lo) / h)) - 1, 0, n - 2);
    double result = 0.0;
    for (int p = 0; p < 4; ++p) {
        double basis = 1.0;
        const double xp = lo + (base + p) * h;
        for (int q = 0; q < 4; ++q) {
            if (q == p) continue;
            const double xq = lo + (base + q) * h;
            basis *= (x - xq) / (xp - xq);
        }
        result += basis * value(base + p);
    }
    return result;
}

}  // namespace lvstab
