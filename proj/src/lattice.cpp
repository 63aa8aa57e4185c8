#include "ssep/lattice.hpp"

#include <cmath>

namespace ssep {

Profile steady_profile(const Params& p) {
  Profile pr;
  pr.N = p.N;
  int S = p.sites();
  pr.rho_bar.resize(static_cast<size_t>(S));
  pr.sigma_bar.resize(static_cast<size_t>(S));
  pr.lambda.resize(static_cast<size_t>(2 * p.N + 1));
  for (int a = 0; a < S; ++a) {
    double x = static_cast<double>(p.site_of(a)) / p.N;
    double r = p.rho_bar_at(x);
    pr.rho_bar[static_cast<size_t>(a)] = r;
    pr.sigma_bar[static_cast<size_t>(a)] = sigma_of(r);
  }
  for (int i = -p.N; i <= p.N; ++i) {
    double r;
    if (i == -p.N)
      r = p.rho_minus;
    else if (i == p.N)
      r = p.rho_plus;
    else
      r = pr.rho_bar[static_cast<size_t>(p.offset_of(i))];
    pr.lambda[static_cast<size_t>(i + p.N)] = std::log(r / (1.0 - r));
  }
  pr.rho_prime = p.rho_prime();
  return pr;
}

Profile flat_profile(int N, double rho) {
  Profile pr;
  pr.N = N;
  int S = 2 * N - 1;
  pr.rho_bar.assign(static_cast<size_t>(S), rho);
  pr.sigma_bar.assign(static_cast<size_t>(S), sigma_of(rho));
  pr.lambda.assign(static_cast<size_t>(2 * N + 1),
                   (rho > 0.0 && rho < 1.0) ? std::log(rho / (1.0 - rho)) : 0.0);
  pr.rho_prime = 0.0;
  return pr;
}

Configuration sample_product(const Profile& profile, Rng& rng) {
  Configuration c;
  size_t S = profile.rho_bar.size();
  c.eta.resize(S);
  for (size_t a = 0; a < S; ++a) c.eta[a] = rng.bernoulli(profile.rho_bar[a]) ? 1 : 0;
  return c;
}

}  // namespace ssep
