#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <cmath>
#include <memory>

#include "pfc/errors.hpp"

namespace pfc {

using Field = Eigen::VectorXd;
// Columns are time levels, rows are cells.
using SpaceTimeField = Eigen::MatrixXd;

/// Cell-centered tensor-product box in one or two dimensions with
/// homogeneous Neumann boundaries. Cell (i, j) sits at
/// ((i + 1/2) hx, (j + 1/2) hy) and has linear index i + nx * j.
class Grid {
 public:
  Grid(int dim, std::array<int, 2> cells, std::array<double, 2> lengths);

  static Grid line(int cells, double length = 1.0);
  static Grid box(int nx, int ny, double lx = 1.0, double ly = 1.0);

  int dim() const { return dim_; }
  int cells(int axis) const { return cells_[axis]; }
  double length(int axis) const { return lengths_[axis]; }
  double spacing(int axis) const { return lengths_[axis] / cells_[axis]; }
  Eigen::Index size() const { return size_; }
  double cell_measure() const { return cell_measure_; }
  double measure() const;

  /// Coordinates of a cell center (second entry is 0 in 1D).
  Eigen::Vector2d center(Eigen::Index cell) const;

  /// Stiffness matrix of -Δ with zero boundary flux: symmetric positive
  /// semidefinite, kernel spanned by constants. Shared across copies.
  const Eigen::SparseMatrix<double>& stiffness() const { return *stiffness_; }

  bool operator==(const Grid& other) const;

 private:
  int dim_;
  std::array<int, 2> cells_;
  std::array<double, 2> lengths_;
  Eigen::Index size_;
  double cell_measure_;
  std::shared_ptr<const Eigen::SparseMatrix<double>> stiffness_;
};

/// Uniform time grid on [0, T].
struct TimeGrid {
  double horizon = 1.0;
  int steps = 64;

  double dt() const { return horizon / steps; }
  double time(int level) const { return level * dt(); }
};

template <typename Scalar>
struct Norms {
  Scalar h;    // L2
  Scalar v;    // H1
  Scalar inf;  // max
};

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar inner(const Grid& grid, const Eigen::MatrixBase<DerivedA>& u,
                                const Eigen::MatrixBase<DerivedB>& v) {
  return u.dot(v) * grid.cell_measure();
}

template <typename Derived>
typename Derived::Scalar mean(const Grid& grid, const Eigen::MatrixBase<Derived>& f) {
  return f.sum() * grid.cell_measure() / grid.measure();
}

/// Applies `visit(a, b, weight)` to every interior face between cells a and
/// b, where weight = 1 / h^2 for the face's axis. Fixed traversal order.
template <typename Visitor>
void for_each_face(const Grid& grid, Visitor&& visit) {
  const int nx = grid.cells(0);
  const int ny = grid.dim() == 2 ? grid.cells(1) : 1;
  const double wx = 1.0 / (grid.spacing(0) * grid.spacing(0));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      const Eigen::Index a = i + static_cast<Eigen::Index>(nx) * j;
      visit(a, a + 1, wx);
    }
  }
  if (grid.dim() == 2) {
    const double wy = 1.0 / (grid.spacing(1) * grid.spacing(1));
    for (int j = 0; j + 1 < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const Eigen::Index a = i + static_cast<Eigen::Index>(nx) * j;
        visit(a, a + nx, wy);
      }
    }
  }
}

/// Divergence-form Laplacian with zero boundary flux. Each face flux is
/// added to one neighbour and subtracted from the other.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> laplacian_neumann(
    const Grid& grid, const Eigen::MatrixBase<Derived>& f) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out =
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(f.size());
  for_each_face(grid, [&](Eigen::Index a, Eigen::Index b, double w) {
    const Scalar flux = (f(b) - f(a)) * Scalar(w);
    out(a) += flux;
    out(b) -= flux;
  });
  return out;
}

/// |∇f|^2 integrated with one-sided differences on interior faces.
template <typename Derived>
typename Derived::Scalar gradient_norm_squared(const Grid& grid,
                                               const Eigen::MatrixBase<Derived>& f) {
  using Scalar = typename Derived::Scalar;
  Scalar sum(0);
  for_each_face(grid, [&](Eigen::Index a, Eigen::Index b, double w) {
    const Scalar d = f(b) - f(a);
    sum += d * d * Scalar(w);
  });
  return sum * grid.cell_measure();
}

template <typename Derived>
Norms<typename Derived::Scalar> norms(const Grid& grid, const Eigen::MatrixBase<Derived>& f) {
  using std::sqrt;
  const auto h2 = inner(grid, f, f);
  const auto g2 = gradient_norm_squared(grid, f);
  return {sqrt(h2), sqrt(h2 + g2), f.size() > 0 ? f.cwiseAbs().maxCoeff() : 0};
}

struct NeumannOptions {
  // Relative residual accepted for A g = f.
  double tolerance = 1e-10;
  // |mean(f)| allowed, relative to max|f|.
  double mean_tolerance = 1e-12;
};

/// The operator N: inverse of the Neumann stiffness on zero-mean data.
/// Factorizes once; reuse the object for repeated applications.
class NeumannInverse {
 public:
  explicit NeumannInverse(const Grid& grid, NeumannOptions options = {});

  /// Returns g with A g = f and mean(g) = 0.
  Field apply(const Eigen::Ref<const Field>& f) const;

  const Grid& grid() const { return grid_; }

 private:
  struct Impl;
  Grid grid_;
  NeumannOptions options_;
  std::shared_ptr<const Impl> impl_;
};

Field inverse_neumann(const Grid& grid, const Eigen::Ref<const Field>& f,
                      NeumannOptions options = {});

/// sqrt(<f, N f>), the dual norm on zero-mean fields.
double dual_norm_star(const Grid& grid, const Eigen::Ref<const Field>& f,
                      NeumannOptions options = {});

/// Discrete V' norm: sup <f, v> / |v|_V = sqrt(<f, (I + A)^{-1} f>).
double dual_norm_vprime(const Grid& grid, const Eigen::Ref<const Field>& f);

/// Cell-centered samples of a function of position.
template <typename Fn>
Field sample(const Grid& grid, Fn&& fn) {
  Field out(grid.size());
  for (Eigen::Index c = 0; c < grid.size(); ++c) {
    const Eigen::Vector2d x = grid.center(c);
    out(c) = fn(x(0), x(1));
  }
  return out;
}

}  // namespace pfc
