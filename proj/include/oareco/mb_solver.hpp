#pragma once

#include <span>
#include <string>
#include <vector>

#include "oareco/domain.hpp"
#include "oareco/forward_model.hpp"

namespace oareco {

struct MbConfig {
  int max_iters = 100;
  bool nonneg = true;
  double stop_tol = 1e-6;  // relative residual change between CG steps

  void validate() const;
};

struct LeastSquaresResult {
  std::vector<double> x;                  // best iterate
  std::vector<double> residual_history;   // ||A x - b|| of accepted iterates, starting with x = 0
  int iterations = 0;
  std::string stop_reason;
};

/// Conjugate-gradient least squares (CGLS) for min ||A x - b||.
///
/// With `nonneg`, CG runs on the free variables (x > 0 or descent pushes
/// upward) and restarts whenever the free set changes. A step that would
/// cross zero is first tried as a projected step and kept when it lowers the
/// residual; otherwise it is truncated at the first bound, which always lowers
/// it. Throws NumericalFailure naming the iteration on divergence.
LeastSquaresResult solve_least_squares(const SparseOperator& op, std::span<const double> b, const MbConfig& cfg);

struct MbResult {
  Image image;
  std::vector<double> residual_history;
  int iterations = 0;
  std::string stop_reason;
};

MbResult mb_reconstruct(const Sinogram& sino, const SparseOperator& op, const MbConfig& cfg = {});

}  // namespace oareco
