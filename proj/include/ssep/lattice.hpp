#pragma once
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ssep/rng.hpp"

namespace ssep {

// Open chain on sites {-N+1, ..., N-1} coupled to reservoirs at +-N.
// Array offset a = i + N - 1 in [0, 2N-2]; this mapping is the single
// convention used everywhere in the repo.
struct Params {
  int N;
  double rho_minus;
  double rho_plus;

  Params(int n, double rm, double rp) : N(n), rho_minus(rm), rho_plus(rp) {
    if (n < 2) throw std::invalid_argument("Params: N must be >= 2");
    if (!(rm > 0.0 && rm < 1.0 && rp > 0.0 && rp < 1.0))
      throw std::invalid_argument("Params: reservoir densities must lie in (0,1)");
    if (!(rm <= rp))
      throw std::invalid_argument("Params: rho_minus <= rho_plus required");
  }

  int sites() const { return 2 * N - 1; }
  int site_of(int offset) const { return offset - (N - 1); }
  int offset_of(int site) const { return site + (N - 1); }

  // linear steady density, x in [-1,1]
  double rho_bar_at(double x) const {
    return (1.0 - x) * rho_minus / 2.0 + (1.0 + x) * rho_plus / 2.0;
  }
  double sigma_bar_at(double x) const {
    double r = rho_bar_at(x);
    return r * (1.0 - r);
  }
  double rho_prime() const { return (rho_plus - rho_minus) / 2.0; }
};

inline double sigma_of(double r) { return r * (1.0 - r); }
inline double sigma_prime_of(double r) { return 1.0 - 2.0 * r; }

// Per-site steady-state quantities.  lambda has two extra slots for the
// reservoir chemical potentials at +-N (offsets 0 and 2N in `lambda`).
struct Profile {
  int N = 0;
  std::vector<double> rho_bar;    // size 2N-1
  std::vector<double> sigma_bar;  // size 2N-1
  std::vector<double> lambda;     // size 2N+1, index i+N for site i in [-N, N]
  double rho_prime = 0.0;

  int sites() const { return static_cast<int>(rho_bar.size()); }
  double lambda_at_site(int i) const { return lambda[static_cast<size_t>(i + N)]; }
};

Profile steady_profile(const Params& p);

// test helper: constant-density profile with arbitrary rho (may be 0 or 1)
Profile flat_profile(int N, double rho);

struct Configuration {
  std::vector<std::uint8_t> eta;

  int sites() const { return static_cast<int>(eta.size()); }
};

inline double centered(const Configuration& c, const Profile& p, int offset) {
  return static_cast<double>(c.eta[static_cast<size_t>(offset)]) -
         p.rho_bar[static_cast<size_t>(offset)];
}

// configuration <-> integer code, little-endian in array order (site -N+1 is
// bit 0).  Only valid for 2N-1 <= 63 sites; used by the exact tiny-N stack.
inline Configuration config_of_code(std::uint64_t code, int sites) {
  Configuration c;
  c.eta.resize(static_cast<size_t>(sites));
  for (int a = 0; a < sites; ++a) c.eta[static_cast<size_t>(a)] = (code >> a) & 1u;
  return c;
}
inline std::uint64_t code_of_config(const Configuration& c) {
  std::uint64_t code = 0;
  for (int a = 0; a < c.sites(); ++a)
    if (c.eta[static_cast<size_t>(a)]) code |= (1ull << a);
  return code;
}

Configuration sample_product(const Profile& profile, Rng& rng);

}  // namespace ssep
