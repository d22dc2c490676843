#include "oareco/mb_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oareco/error.hpp"

namespace oareco {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void residual(const SparseOperator& op, std::span<const double> x, std::span<const double> b, std::vector<double>& r) {
  op.apply(x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
}

}  // namespace

void MbConfig::validate() const {
  if (max_iters < 1) throw InvalidInput("max_iters must be >= 1");
  if (!(stop_tol >= 0.0)) throw InvalidInput("stop_tol must be >= 0");
}

LeastSquaresResult solve_least_squares(const SparseOperator& op, std::span<const double> b, const MbConfig& cfg) {
  cfg.validate();
  if (b.size() != op.rows()) throw InvalidInput("right-hand side length does not match operator rows");
  for (double v : b) {
    if (!std::isfinite(v)) throw InvalidInput("right-hand side contains a non-finite entry");
  }

  const std::size_t n = op.cols();
  LeastSquaresResult out;
  std::vector<double> x(n, 0.0);
  std::vector<double> r(b.begin(), b.end());
  double res = norm(r);
  const double res0 = res;
  out.x = x;
  out.residual_history.push_back(res);
  if (res0 == 0.0) {
    out.stop_reason = "zero right-hand side";
    return out;
  }

  std::vector<double> g(n), p(n), q(op.rows()), trial(n), r_trial(op.rows());
  std::vector<char> free_var(n, 1);
  double gamma = 0.0;
  double best = res;
  bool restart = true;
  int steps_since_restart = 0;

  for (int it = 1; it <= cfg.max_iters; ++it) {
    out.iterations = it;
    if (restart) {
      if (cfg.nonneg) residual(op, x, b, r);
      op.apply_adjoint(r, g);
      gamma = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        free_var[i] = !cfg.nonneg || x[i] > 0.0 || g[i] > 0.0;
        p[i] = free_var[i] ? g[i] : 0.0;
        gamma += p[i] * p[i];
      }
      restart = false;
      steps_since_restart = 0;
      if (gamma == 0.0) {
        out.stop_reason = "stationary point";
        break;
      }
    }

    op.apply(p, q);
    const double qq = dot(q, q);
    if (qq == 0.0) {
      out.stop_reason = "search direction in operator null space";
      break;
    }
    double alpha = gamma / qq;

    double alpha_max = std::numeric_limits<double>::infinity();
    std::size_t blocking = n;
    if (cfg.nonneg) {
      for (std::size_t i = 0; i < n; ++i) {
        if (p[i] < 0.0 && x[i] / -p[i] < alpha_max) {
          alpha_max = x[i] / -p[i];
          blocking = i;
        }
      }
    }

    const double prev_res = res;
    if (alpha > alpha_max) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = std::max(x[i] + alpha * p[i], 0.0);
      residual(op, trial, b, r_trial);
      const double res_trial = norm(r_trial);
      if (res_trial < res) {
        x.swap(trial);
        r.swap(r_trial);
      } else {
        for (std::size_t i = 0; i < n; ++i) x[i] = std::max(x[i] + alpha_max * p[i], 0.0);
        x[blocking] = 0.0;
        residual(op, x, b, r);
      }
      restart = true;
    } else {
      for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p[i];
      for (std::size_t i = 0; i < r.size(); ++i) r[i] -= alpha * q[i];
      op.apply_adjoint(r, g);
      double gamma_new = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!free_var[i]) g[i] = 0.0;
        gamma_new += g[i] * g[i];
      }
      const double beta = gamma_new / gamma;
      for (std::size_t i = 0; i < n; ++i) p[i] = g[i] + beta * p[i];
      gamma = gamma_new;
      ++steps_since_restart;
    }

    res = norm(r);
    if (!std::isfinite(res) || res > 10.0 * res0) {
      throw NumericalFailure("model-based solver diverged at iteration " + std::to_string(it) +
                             " (residual " + std::to_string(res) + ", initial " + std::to_string(res0) + ")");
    }
    if (res <= best) {
      best = res;
      out.x = x;
      out.residual_history.push_back(res);
    }

    if (!restart && (gamma == 0.0 || (prev_res - res) <= cfg.stop_tol * prev_res)) {
      if (cfg.nonneg && steps_since_restart > 1) {
        restart = true;  // re-examine the free set before giving up
      } else {
        out.stop_reason = "relative residual change below tolerance";
        break;
      }
    }
  }
  if (out.stop_reason.empty()) out.stop_reason = "iteration limit";
  return out;
}

MbResult mb_reconstruct(const Sinogram& sino, const SparseOperator& op, const MbConfig& cfg) {
  if (!op.provenance()) throw InvalidInput("operator has no acquisition geometry attached");
  const ScanGeometry& g = *op.provenance();
  if (sino.num_elements() != static_cast<std::size_t>(g.array.num_elements) ||
      sino.num_samples() != static_cast<std::size_t>(g.num_samples)) {
    throw InvalidInput("sinogram shape does not match the operator");
  }
  LeastSquaresResult ls = solve_least_squares(op, sino.data().values(), cfg);
  const auto side = static_cast<std::size_t>(g.grid.side_px);
  return {Image(Matrix(side, side, std::move(ls.x)), g.grid), std::move(ls.residual_history), ls.iterations,
          std::move(ls.stop_reason)};
}

}  // namespace oareco
