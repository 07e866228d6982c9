#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

#include "nonmarkov/operators.hpp"

namespace nonmarkov::numerics {

/// SplitMix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Deterministic child seed for a named consumer (and optional index) of a
/// master seed. Results do not depend on the order in which consumers ask.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                    std::uint64_t index = 0) {
  return mix64(mix64(master ^ hash_tag(tag)) + index);
}

/// Random source with portable (implementation-independent) uniform and
/// normal draws, so that fixed seeds reproduce bit-identical streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
  }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline ComplexMatrix random_ginibre(Rng& rng, Index rows, Index cols) {
  ComplexMatrix g(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) g(i, j) = Complex(rng.normal(), rng.normal());
  }
  return g;
}

/// Haar-random unitary (QR of a Ginibre matrix with the phase of R's
/// diagonal removed).
inline ComplexMatrix random_unitary(Rng& rng, Index d) {
  const ComplexMatrix g = random_ginibre(rng, d, d);
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(d, d);
  const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < d; ++j) {
    const double mag = std::abs(r(j, j));
    if (mag > 0.0) q.col(j) *= r(j, j) / mag;
  }
  return q;
}

inline HermitianOperator random_hermitian(Rng& rng, Index d) {
  const ComplexMatrix g = random_ginibre(rng, d, d);
  return HermitianOperator(0.5 * (g + g.adjoint()));
}

/// Full-rank random density matrix (Hilbert-Schmidt measure).
inline DensityMatrix random_density_matrix(Rng& rng, Index d) {
  const ComplexMatrix g = random_ginibre(rng, d, d);
  ComplexMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return DensityMatrix(rho);
}

inline DensityMatrix random_pure_state(Rng& rng, Index d) {
  return pure_state(random_ginibre(rng, d, 1));
}

}  // namespace nonmarkov::numerics
