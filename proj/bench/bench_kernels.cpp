// Timing comparison of the OpenMP kernels against their serial references.
#include <chrono>
#include <cstdio>

#include "ssep/measures.hpp"
#include "ssep/pde_solvers.hpp"

using namespace ssep;
using clk = std::chrono::steady_clock;

namespace {
double seconds_since(clk::time_point t0) {
  return std::chrono::duration<double>(clk::now() - t0).count();
}
}  // namespace

int main() {
  std::printf("%-34s %10s %10s %8s\n", "kernel", "serial[s]", "omp[s]", "speedup");

  {
    int M = 192;
    Params p(8, 0.2, 0.8);
    SymmetricKernel u = k0_kernel(M, p.rho_prime());
    BiasBasis basis = BiasBasis::make(M, 4);
    SymmetricKernel v = basis[3].grid;
    Eigen::VectorXd sw = sigma_nodes_vec(p, u);
    for (int c = 0; c < sw.size(); ++c) sw(c) *= u.trapezoid_weight(c);

    auto t0 = clk::now();
    Eigen::MatrixXd a = bilinear_map_serial(u.values(), v.values(), sw);
    double ts = seconds_since(t0);
    t0 = clk::now();
    Eigen::MatrixXd b = bilinear_map(u.values(), v.values(), sw);
    double tp = seconds_since(t0);
    double dev = (a - b).cwiseAbs().maxCoeff();
    std::printf("%-34s %10.4f %10.4f %8.2f  (max dev %.2e)\n",
                "bilinear quadrature map M=192", ts, tp, ts / tp, dev);
  }

  {
    Params p(7, 0.2, 0.8);
    SymmetricKernel g = g_from_k(k0_kernel(96, p.rho_prime()), p);
    GaussianMeasureSpec s1(p, g), s2(p, g);
    auto t0 = clk::now();
    MeasureVector a = exact_gaussian_measure_serial(s1);
    double ts = seconds_since(t0);
    t0 = clk::now();
    MeasureVector b = exact_gaussian_measure(s2);
    double tp = seconds_since(t0);
    double dev = 0.0;
    for (std::uint64_t c = 0; c < a.probs.size(); ++c)
      dev = std::max(dev, std::abs(a.probs[c] - b.probs[c]));
    std::printf("%-34s %10.4f %10.4f %8.2f  (max dev %.2e)\n",
                "measure enumeration N=7", ts, tp, ts / tp, dev);
  }
  return 0;
}
