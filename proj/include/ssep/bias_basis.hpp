#pragma once
#include <Eigen/Dense>
#include <vector>

#include "ssep/grid_kernel.hpp"
#include "ssep/lattice.hpp"

namespace ssep {

// Symmetrised products of 1-D Laplacian eigenfunctions vanishing at +-1,
//   u_p(x) = sin(p pi (x+1)/2),
//   psi_{pq}(x,y) = (u_p(x) u_q(y) + u_q(x) u_p(y)) / 2,
// rescaled to unit sup norm.  Each element is a smooth symmetric function,
// zero on the boundary of the square, and an eigenfunction of the
// Laplacian: lap psi = -(pi^2/4)(p^2+q^2) psi.
class BiasBasis {
 public:
  struct Element {
    int p, q;
    double scale;        // sup-norm normalisation
    double lap_eigen;    // -(pi/2)^2 (p^2+q^2)
    SymmetricKernel grid;
  };

  static BiasBasis make(int M, int P);

  int size() const { return static_cast<int>(elems_.size()); }
  const Element& operator[](int m) const { return elems_[static_cast<size_t>(m)]; }

  // pointwise evaluation of element m (exact closed form)
  double eval(int m, double x, double y) const;

  // h = sum_m c_m psi_m on the grid
  SymmetricKernel combine(const Eigen::VectorXd& coeffs) const;

  // h sampled at lattice positions (i/N, j/N), exact closed form
  Eigen::MatrixXd combine_on_lattice(const Eigen::VectorXd& coeffs,
                                     const Params& params) const;

 private:
  std::vector<Element> elems_;
};

// A bias with its admissibility metadata (grid norms, corner behaviour).
struct BiasSpec {
  SymmetricKernel h;
  Eigen::VectorXd coeffs;  // against the generating basis (empty if not from one)
  double eps = 0.0;        // admissibility radius the bias was scaled to
  double sup_h = 0.0;
  double sup_d1h = 0.0;
  double corner_defect = 0.0;  // max |(d1-d2)h| at the two diagonal corners
};

// Scale coeffs so that max(sup|h|, sup|d1 h|) == eps, then record metadata.
BiasSpec make_bias_spec(const BiasBasis& basis, Eigen::VectorXd coeffs, double eps);

// same but without rescaling; eps records the measured norm
BiasSpec bias_from_coeffs(const BiasBasis& basis, Eigen::VectorXd coeffs);

BiasSpec zero_bias(int M);

}  // namespace ssep
