#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "sann/numerics.hpp"

namespace sann::nmf {

struct NmfConfig {
  std::size_t rank = 49;
  std::size_t max_iters = 500;
  /// Stop when the relative change in the Frobenius residual drops below this.
  double tol = 1e-5;
  /// Added to every multiplicative-update denominator.
  double epsilon = 1e-9;

  void validate() const;
};

/// V ~ W H with W (pixels x rank) and H (rank x images), both non-negative.
struct NmfModel {
  Matrix w;
  Matrix h;

  std::size_t rank() const noexcept { return w.cols(); }
  friend bool operator==(const NmfModel&, const NmfModel&) = default;
};

/// Lee-Seung multiplicative updates for the Euclidean loss. W and H start
/// uniform in (0, 1]. When `residuals` is given it receives the Frobenius
/// residual after initialization and after every full sweep (H then W).
NmfModel factorize(const Matrix& v, const NmfConfig& cfg, Rng& rng,
                   std::vector<double>* residuals = nullptr);

/// W H.
Matrix reconstruct(const NmfModel& model);

/// Coefficients for one column against a fixed basis: H-updates only, with
/// no normalization of h between iterations (normalizing a single column
/// would rescale the encoding away from the data).
std::vector<double> encode(const Matrix& w, std::span<const double> v_col, const NmfConfig& cfg, Rng& rng);

/// Text format: `NMF <rows> <rank> <cols>` then W and H row-major, 17
/// significant digits.
void save_model(std::ostream& out, const NmfModel& model);
NmfModel load_model(std::istream& in);

}  // namespace sann::nmf
