#pragma once
#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <functional>
#include <memory>

#include "ssep/grid_kernel.hpp"

namespace ssep {

// Finite-difference Laplacian on the triangle T = {x < y} of a uniform
// square grid: zero Dirichlet data on the sides x = -1 and y = 1, prescribed
// (possibly inhomogeneous) Neumann data on the diagonal, discretised with a
// second-order one-sided difference in the normal direction (1,-1)/sqrt(2).
// The operator is assembled and LU-factored once; every solver in this repo
// reuses the factorisation.
class TriangleGrid {
 public:
  explicit TriangleGrid(int M);

  int M() const { return M_; }
  double spacing() const { return h_; }
  double x(int a) const { return -1.0 + a * h_; }
  int unknowns() const { return static_cast<int>(node_.size()); }

  // Solve  Lap u = rhs  on interior nodes of T,
  //        (d2-d1) u(x, x+) = delta(x)  on the diagonal,
  //        u = 0 on the Dirichlet sides,
  // and return u as a symmetric kernel (jump data set to delta).
  // rhs(a,b) is read at interior nodes a < b only; delta at 1..M-1.
  SymmetricKernel solve(const std::function<double(int, int)>& rhs,
                        const Eigen::VectorXd& delta) const;

  SymmetricKernel solve(const Eigen::MatrixXd& rhs_nodes,
                        const Eigen::VectorXd& delta) const;

  // max | 5-point Laplacian of u - rhs | over interior triangle nodes
  double interior_residual(const SymmetricKernel& u,
                           const std::function<double(int, int)>& rhs) const;

  // smallest-magnitude eigenvalue of -Lap with these boundary conditions
  // (inverse power iteration on the assembled matrix)
  double smallest_eigenvalue(int iters = 200) const;

 private:
  int index(int a, int b) const { return idx_[static_cast<size_t>(a * (M_ + 1) + b)]; }

  int M_;
  double h_;
  std::vector<int> idx_;           // (a,b) -> unknown id, -1 if not an unknown
  std::vector<std::pair<int, int>> node_;  // unknown id -> (a,b)
  Eigen::SparseMatrix<double> A_;
  std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
};

}  // namespace ssep
