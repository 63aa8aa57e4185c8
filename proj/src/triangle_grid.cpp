#include "ssep/triangle_grid.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace ssep {

TriangleGrid::TriangleGrid(int M) : M_(M), h_(2.0 / M) {
  if (M < 8) throw std::invalid_argument("TriangleGrid: M >= 8 required");
  idx_.assign(static_cast<size_t>((M + 1) * (M + 1)), -1);
  for (int a = 1; a <= M - 1; ++a)
    for (int b = a; b <= M - 1; ++b) {
      idx_[static_cast<size_t>(a * (M + 1) + b)] = static_cast<int>(node_.size());
      node_.emplace_back(a, b);
    }

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(node_.size() * 5);
  double ih2 = 1.0 / (h_ * h_);
  for (int r = 0; r < static_cast<int>(node_.size()); ++r) {
    auto [a, b] = node_[static_cast<size_t>(r)];
    if (a < b) {
      trip.emplace_back(r, r, -4.0 * ih2);
      int nb[4][2] = {{a - 1, b}, {a + 1, b}, {a, b - 1}, {a, b + 1}};
      for (auto& n : nb) {
        int c = (n[0] <= n[1]) ? index(n[0], n[1]) : -1;
        if (c >= 0) trip.emplace_back(r, c, ih2);
        // Dirichlet neighbours (a-1 == 0 or b+1 == M) carry value 0
      }
    } else {
      // diagonal node: one-sided normal derivative along (1,-1)/sqrt(2)
      if (a >= 2 && a + 2 <= M_) {
        trip.emplace_back(r, r, 3.0);
        int q1 = index(a - 1, a + 1);
        if (q1 >= 0) trip.emplace_back(r, q1, -4.0);
        int q2 = (a - 2 >= 1 && a + 2 <= M_ - 1) ? index(a - 2, a + 2) : -1;
        if (q2 >= 0) trip.emplace_back(r, q2, 1.0);
      } else {
        trip.emplace_back(r, r, 1.0);
        int q1 = (a - 1 >= 1 && a + 1 <= M_ - 1) ? index(a - 1, a + 1) : -1;
        if (q1 >= 0) trip.emplace_back(r, q1, -1.0);
      }
    }
  }
  A_.resize(static_cast<int>(node_.size()), static_cast<int>(node_.size()));
  A_.setFromTriplets(trip.begin(), trip.end());
  A_.makeCompressed();
  lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
  lu_->compute(A_);
  if (lu_->info() != Eigen::Success)
    throw std::runtime_error("TriangleGrid: LU factorisation failed");
}

SymmetricKernel TriangleGrid::solve(const std::function<double(int, int)>& rhs,
                                    const Eigen::VectorXd& delta) const {
  Eigen::VectorXd b(unknowns());
  for (int r = 0; r < unknowns(); ++r) {
    auto [a, bb] = node_[static_cast<size_t>(r)];
    if (a < bb) {
      b(r) = rhs(a, bb);
    } else {
      double d = delta(a);
      b(r) = (a >= 2 && a + 2 <= M_) ? -2.0 * h_ * d : -h_ * d;
    }
  }
  Eigen::VectorXd u = lu_->solve(b);
  // one round of iterative refinement
  Eigen::VectorXd res = b - A_ * u;
  u += lu_->solve(res);

  SymmetricKernel out(M_);
  for (int r = 0; r < unknowns(); ++r) {
    auto [a, bb] = node_[static_cast<size_t>(r)];
    out.set(a, bb, u(r));
  }
  out.jump() = delta;
  out.jump()(0) = 0.0;
  out.jump()(M_) = 0.0;
  return out;
}

SymmetricKernel TriangleGrid::solve(const Eigen::MatrixXd& rhs_nodes,
                                    const Eigen::VectorXd& delta) const {
  return solve([&rhs_nodes](int a, int b) { return rhs_nodes(a, b); }, delta);
}

double TriangleGrid::interior_residual(
    const SymmetricKernel& u, const std::function<double(int, int)>& rhs) const {
  double ih2 = 1.0 / (h_ * h_);
  double worst = 0.0;
  for (int a = 1; a <= M_ - 1; ++a)
    for (int b = a + 1; b <= M_ - 1; ++b) {
      double lap = (u.at(a + 1, b) + u.at(a - 1, b) + u.at(a, b + 1) + u.at(a, b - 1) -
                    4.0 * u.at(a, b)) * ih2;
      worst = std::max(worst, std::abs(lap - rhs(a, b)));
    }
  return worst;
}

double TriangleGrid::smallest_eigenvalue(int iters) const {
  // Generalised pencil A u = lambda B u, where B masks out the boundary
  // (Neumann constraint) rows; inverse iteration v <- A^{-1} B v.
  Eigen::VectorXd mask(unknowns());
  for (int r = 0; r < unknowns(); ++r) {
    auto [a, b] = node_[static_cast<size_t>(r)];
    mask(r) = (a < b) ? 1.0 : 0.0;
  }
  Eigen::VectorXd v = Eigen::VectorXd::Ones(unknowns());
  for (int i = 0; i < unknowns(); ++i) v(i) += 1e-3 * std::sin(7.0 * i + 1.0);
  v.normalize();
  for (int it = 0; it < iters; ++it) {
    v = lu_->solve(mask.cwiseProduct(v).eval());
    v.normalize();
  }
  double num = v.dot(A_ * v);
  double den = v.dot(mask.cwiseProduct(v).eval());
  return -num / den;  // interior rows approximate the (negative) Laplacian
}

}  // namespace ssep
