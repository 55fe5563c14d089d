#include "pfc/grid.hpp"

#include <Eigen/SparseCholesky>

#include <sstream>
#include <vector>

namespace pfc {

namespace {

Eigen::SparseMatrix<double> assemble_stiffness(const Grid& grid) {
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(grid.size()) * 5);
  for_each_face(grid, [&](Eigen::Index a, Eigen::Index b, double w) {
    entries.emplace_back(a, a, w);
    entries.emplace_back(b, b, w);
    entries.emplace_back(a, b, -w);
    entries.emplace_back(b, a, -w);
  });
  Eigen::SparseMatrix<double> k(grid.size(), grid.size());
  k.setFromTriplets(entries.begin(), entries.end());
  k.makeCompressed();
  return k;
}

}  // namespace

Grid::Grid(int dim, std::array<int, 2> cells, std::array<double, 2> lengths)
    : dim_(dim), cells_(cells), lengths_(lengths) {
  if (dim != 1 && dim != 2) {
    throw ConfigError("grid dimension must be 1 or 2");
  }
  if (dim == 1) {
    cells_[1] = 1;
    lengths_[1] = 1.0;
  }
  for (int a = 0; a < dim; ++a) {
    if (cells_[a] < 2) {
      throw ConfigError("grid needs at least 2 cells per axis");
    }
    if (!(lengths_[a] > 0.0) || !std::isfinite(lengths_[a])) {
      throw ConfigError("grid axis lengths must be positive and finite");
    }
  }
  size_ = static_cast<Eigen::Index>(cells_[0]) * cells_[1];
  cell_measure_ = spacing(0) * (dim == 2 ? spacing(1) : 1.0);
  stiffness_ = std::make_shared<const Eigen::SparseMatrix<double>>(assemble_stiffness(*this));
}

Grid Grid::line(int cells, double length) { return Grid(1, {cells, 1}, {length, 1.0}); }

Grid Grid::box(int nx, int ny, double lx, double ly) { return Grid(2, {nx, ny}, {lx, ly}); }

double Grid::measure() const { return dim_ == 2 ? lengths_[0] * lengths_[1] : lengths_[0]; }

Eigen::Vector2d Grid::center(Eigen::Index cell) const {
  const Eigen::Index i = cell % cells_[0];
  const Eigen::Index j = cell / cells_[0];
  return {(static_cast<double>(i) + 0.5) * spacing(0),
          dim_ == 2 ? (static_cast<double>(j) + 0.5) * spacing(1) : 0.0};
}

bool Grid::operator==(const Grid& other) const {
  return dim_ == other.dim_ && cells_ == other.cells_ && lengths_ == other.lengths_;
}

// The stiffness is singular with a constant kernel. Pinning cell 0 leaves an
// SPD block; for zero-mean data the dropped row is implied by the others
// because every row of the stiffness sums to zero.
struct NeumannInverse::Impl {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
};

NeumannInverse::NeumannInverse(const Grid& grid, NeumannOptions options)
    : grid_(grid), options_(options) {
  auto impl = std::make_shared<Impl>();
  const Eigen::Index n = grid.size();
  Eigen::SparseMatrix<double> reduced = grid.stiffness().bottomRightCorner(n - 1, n - 1);
  impl->ldlt.compute(reduced);
  if (impl->ldlt.info() != Eigen::Success) {
    throw SolverDivergence("factorization of the Neumann stiffness failed");
  }
  impl_ = std::move(impl);
}

Field NeumannInverse::apply(const Eigen::Ref<const Field>& f) const {
  if (f.size() != grid_.size()) {
    throw ShapeMismatch("field size does not match grid");
  }
  const double scale = f.size() > 0 ? f.cwiseAbs().maxCoeff() : 0.0;
  const double m = mean(grid_, f);
  if (std::abs(m) > options_.mean_tolerance * scale) {
    std::ostringstream msg;
    msg << "inverse_neumann: mean " << m << " exceeds tolerance";
    throw NonZeroMean(msg.str());
  }
  const Eigen::Index n = f.size();
  Field g = Field::Zero(n);
  if (scale == 0.0) {
    return g;
  }
  // Remove the admissible round-off mean so the pinned system is consistent.
  const Field rhs = f.array() - m;
  g.tail(n - 1) = impl_->ldlt.solve(rhs.tail(n - 1));
  g.array() -= mean(grid_, g);

  const double residual = (grid_.stiffness() * g - rhs).norm();
  if (!(residual <= options_.tolerance * rhs.norm())) {
    throw SolverDivergence("inverse_neumann: residual above tolerance");
  }
  return g;
}

Field inverse_neumann(const Grid& grid, const Eigen::Ref<const Field>& f, NeumannOptions options) {
  return NeumannInverse(grid, options).apply(f);
}

double dual_norm_star(const Grid& grid, const Eigen::Ref<const Field>& f, NeumannOptions options) {
  const Field g = inverse_neumann(grid, f, options);
  return std::sqrt(std::max(0.0, inner(grid, f, g)));
}

double dual_norm_vprime(const Grid& grid, const Eigen::Ref<const Field>& f) {
  // Riesz map in the discrete V inner product (u, v)_V = <u, v> + <A u, v>.
  Eigen::SparseMatrix<double> gram = grid.stiffness();
  for (Eigen::Index i = 0; i < gram.rows(); ++i) {
    gram.coeffRef(i, i) += 1.0;
  }
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(gram);
  if (ldlt.info() != Eigen::Success) {
    throw SolverDivergence("factorization of I + A failed");
  }
  const Field r = ldlt.solve(f);
  return std::sqrt(std::max(0.0, inner(grid, f, r)));
}

}  // namespace pfc
