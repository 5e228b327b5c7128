#ifndef PLCL_QP_HPP
#define PLCL_QP_HPP

// Quadratic programs over capped simplices {p : sum(p) = 1, 0 <= p <= caps}.
//
//  * project_capped_simplex: exact Euclidean projection (breakpoint search
//    on the dual variable of the sum constraint).
//  * solve_small_qp: min g^T M g over one capped simplex, dense M. Solved by
//    maximal-violating-pair coordinate descent, which reaches the KKT
//    tolerance even when M is singular.
//  * solve_projected_gradient_qp: min 1/2 <X, H(X)> - <L, X> where every row
//    of X lives in its own capped simplex and H is only available as an
//    operator. Accelerated projected gradient with backtracking and
//    restart-on-increase, so the objective never goes up.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "plcl/types.hpp"

namespace plcl {

enum class QpStatus { Converged, MaxIterations };

template <typename Solution>
struct BasicQpReport {
  Solution solution;
  double objective = 0.0;
  int iterations = 0;
  double kkt_residual = 0.0;
  QpStatus status = QpStatus::Converged;

  [[nodiscard]] bool converged() const { return status == QpStatus::Converged; }
};

using QpSolveReport = BasicQpReport<Vector>;
using BlockQpReport = BasicQpReport<Matrix>;

struct SmallQpOptions {
  double tol = 1e-8;
  int max_iters = 100000;
};

struct BlockQpOptions {
  double tol = 1e-6;
  int max_iters = 10000;
};

namespace detail {

inline void check_caps(const Vector& caps) {
  require(caps.size() >= 1, ErrorKind::InvalidInput, "capped simplex needs at least one coordinate");
  for (Index i = 0; i < caps.size(); ++i) {
    require(caps[i] >= 0.0 && caps[i] <= 1.0, ErrorKind::InvalidInput,
            "cap " + std::to_string(i) + " outside [0,1]: " + std::to_string(caps[i]));
  }
  if (caps.sum() < 1.0 - 1e-12) {
    throw Error(ErrorKind::Infeasible, "caps sum to " + std::to_string(caps.sum()) + " < 1");
  }
}

inline double clamped_sum(const Vector& v, const Vector& caps, double tau) {
  double s = 0.0;
  for (Index i = 0; i < v.size(); ++i) s += std::clamp(v[i] - tau, 0.0, caps[i]);
  return s;
}

}  // namespace detail

/// Euclidean projection of v onto {p : sum(p) = 1, 0 <= p <= caps}.
inline Vector project_capped_simplex(const Vector& v, const Vector& caps) {
  detail::require(v.size() == caps.size(), ErrorKind::DimensionMismatch, "projection: v and caps differ in length");
  detail::require(v.allFinite(), ErrorKind::InvalidInput, "projection: v has non-finite entries");
  detail::check_caps(caps);

  // Forced solution: the only feasible point is caps itself.
  if (caps.sum() <= 1.0) return caps;

  // Points already feasible up to rounding are returned bit-for-bit, which
  // makes the projection exactly idempotent.
  const double sum_tol = 16.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(v.size());
  if ((v.array() >= 0.0).all() && (v.array() <= caps.array()).all() && std::abs(v.sum() - 1.0) <= sum_tol) return v;

  // p_i(tau) = clamp(v_i - tau, 0, cap_i) is piecewise linear and
  // non-increasing in tau with kinks at v_i - cap_i and v_i.
  std::vector<double> breaks;
  breaks.reserve(static_cast<std::size_t>(2 * v.size()));
  for (Index i = 0; i < v.size(); ++i) {
    if (caps[i] <= 0.0) continue;
    breaks.push_back(v[i] - caps[i]);
    breaks.push_back(v[i]);
  }
  std::sort(breaks.begin(), breaks.end());

  // The sum equals sum(caps) > 1 at the first breakpoint and 0 at the last.
  std::size_t hi = 1;
  while (hi < breaks.size() && detail::clamped_sum(v, caps, breaks[hi]) > 1.0) ++hi;
  double tau = breaks[hi];
  const double at_hi = detail::clamped_sum(v, caps, tau);
  if (at_hi != 1.0) {
    // Between breaks[hi-1] and breaks[hi] the free set is fixed; solve the
    // linear equation for tau on it.
    const double mid = 0.5 * (breaks[hi - 1] + breaks[hi]);
    double fixed = 0.0;
    double free_sum = 0.0;
    int free_count = 0;
    for (Index i = 0; i < v.size(); ++i) {
      if (caps[i] <= 0.0) continue;
      const double x = v[i] - mid;
      if (x >= caps[i]) {
        fixed += caps[i];
      } else if (x > 0.0) {
        free_sum += v[i];
        ++free_count;
      }
    }
    if (free_count > 0) {
      tau = std::clamp((free_sum + fixed - 1.0) / free_count, breaks[hi - 1], breaks[hi]);
    }
  }

  Vector p(v.size());
  for (Index i = 0; i < v.size(); ++i) p[i] = std::clamp(v[i] - tau, 0.0, caps[i]);
  return p;
}

/// Largest violation of the capped-simplex KKT conditions for a feasible g
/// with gradient `grad`: max over decreasable j of grad_j minus min over
/// increasable i of grad_i, floored at 0.
inline double capped_simplex_kkt_residual(const Vector& g, const Vector& caps, const Vector& grad) {
  double min_up = std::numeric_limits<double>::infinity();
  double max_low = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < g.size(); ++i) {
    if (g[i] < caps[i]) min_up = std::min(min_up, grad[i]);
    if (g[i] > 0.0) max_low = std::max(max_low, grad[i]);
  }
  if (!std::isfinite(min_up) || !std::isfinite(max_low)) return 0.0;
  return std::max(0.0, max_low - min_up);
}

/// min g^T M g  s.t.  sum(g) = 1, 0 <= g <= caps.
///
/// Each step moves mass between the maximal violating pair (i increasable
/// with smallest gradient, j decreasable with largest) by the exact line
/// minimizer clipped to the box, so the objective is monotone from the
/// starting point. `start` (if feasible) is used as a warm start.
inline QpSolveReport solve_small_qp(const Matrix& m_in, const Vector& caps, const SmallQpOptions& options = {},
                                    const std::optional<Vector>& start = std::nullopt) {
  const Index m = caps.size();
  detail::require(m_in.rows() == m && m_in.cols() == m, ErrorKind::DimensionMismatch,
                  "solve_small_qp: matrix is not " + std::to_string(m) + "x" + std::to_string(m));
  detail::require(m_in.allFinite(), ErrorKind::InvalidInput, "solve_small_qp: matrix has non-finite entries");
  detail::check_caps(caps);
  const Matrix m_sym = 0.5 * (m_in + m_in.transpose());

  QpSolveReport report;
  Vector g;
  if (start && start->size() == m && (start->array() >= 0.0).all() && (start->array() <= caps.array()).all() &&
      std::abs(start->sum() - 1.0) <= 1e-12) {
    g = *start;
  } else {
    g = project_capped_simplex(Vector::Constant(m, 1.0 / static_cast<double>(m)), caps);
  }

  if (caps.sum() <= 1.0) {
    report.solution = caps;
    report.objective = caps.dot(m_sym * caps);
    return report;
  }

  Vector grad = 2.0 * (m_sym * g);
  int iter = 0;
  double violation = 0.0;
  report.status = QpStatus::MaxIterations;
  for (; iter < options.max_iters; ++iter) {
    if (iter % 64 == 63) grad = 2.0 * (m_sym * g);

    Index up = -1;
    Index low = -1;
    for (Index k = 0; k < m; ++k) {
      if (g[k] < caps[k] && (up < 0 || grad[k] < grad[up])) up = k;
      if (g[k] > 0.0 && (low < 0 || grad[k] > grad[low])) low = k;
    }
    violation = (up < 0 || low < 0) ? 0.0 : grad[low] - grad[up];
    if (violation <= options.tol) {
      report.status = QpStatus::Converged;
      break;
    }

    const double curvature = m_sym(up, up) + m_sym(low, low) - 2.0 * m_sym(up, low);
    const double room_up = caps[up] - g[up];
    const double room_low = g[low];
    double step = std::min(room_up, room_low);
    if (curvature > 0.0) step = std::min(step, violation / (2.0 * curvature));
    if (!(step > 0.0)) {
      report.status = QpStatus::Converged;
      break;
    }

    if (step == room_up) {
      g[up] = caps[up];
    } else {
      g[up] += step;
    }
    if (step == room_low) {
      g[low] = 0.0;
    } else {
      g[low] -= step;
    }
    grad += (2.0 * step) * (m_sym.col(up) - m_sym.col(low));
  }

  grad = 2.0 * (m_sym * g);
  report.solution = g;
  report.objective = g.dot(m_sym * g);
  report.iterations = iter;
  report.kkt_residual = capped_simplex_kkt_residual(g, caps, grad);
  if (report.status == QpStatus::MaxIterations && report.kkt_residual <= options.tol) {
    report.status = QpStatus::Converged;
  }
  return report;
}

/// Applies the projection to every row of `x` with caps taken from the
/// matching row of `caps`.
inline Matrix project_rows(const Matrix& x, const Matrix& caps) {
  Matrix out(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    out.row(i) = project_capped_simplex(x.row(i).transpose(), caps.row(i).transpose()).transpose();
  }
  return out;
}

using QuadraticOperator = std::function<Matrix(const Matrix&)>;

namespace detail {

inline double frob_dot(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

/// Deterministic power iteration for the largest eigenvalue of a PSD operator.
inline double estimate_lipschitz(const QuadraticOperator& apply, Index rows, Index cols) {
  Matrix v(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) v(i, j) = 1.0 + 0.01 * static_cast<double>((i * 7 + j * 13) % 17);
  }
  v /= v.norm();
  double lambda = 0.0;
  for (int it = 0; it < 30; ++it) {
    Matrix w = apply(v);
    const double norm = w.norm();
    if (!(norm > 0.0)) return 0.0;
    lambda = frob_dot(v, w);
    v = w / norm;
  }
  return lambda;
}

}  // namespace detail

/// min 1/2 <X, H(X)> - <linear, X> with each row of X in its capped simplex.
///
/// `quadratic_apply` must be symmetric PSD. Terminates when the gradient
/// mapping norm L * ||Y - X+|| drops below options.tol.
inline BlockQpReport solve_projected_gradient_qp(const QuadraticOperator& quadratic_apply, const Matrix& linear,
                                                 const Matrix& caps, const BlockQpOptions& options = {},
                                                 const std::optional<Matrix>& start = std::nullopt) {
  detail::require(linear.rows() == caps.rows() && linear.cols() == caps.cols(), ErrorKind::DimensionMismatch,
                  "solve_projected_gradient_qp: linear term and caps differ in shape");
  detail::require(linear.allFinite(), ErrorKind::InvalidInput, "solve_projected_gradient_qp: non-finite linear term");
  for (Index i = 0; i < caps.rows(); ++i) {
    try {
      detail::check_caps(caps.row(i).transpose());
    } catch (const Error& e) {
      throw Error(e.kind(), "row " + std::to_string(i) + ": " + e.what());
    }
  }

  const auto objective_of = [&](const Matrix& x, const Matrix& hx) {
    return 0.5 * detail::frob_dot(x, hx) - detail::frob_dot(linear, x);
  };

  Matrix x = (start && start->rows() == linear.rows() && start->cols() == linear.cols())
                 ? project_rows(*start, caps)
                 : project_rows(caps, caps);
  Matrix hx = quadratic_apply(x);
  double fx = objective_of(x, hx);

  BlockQpReport report;
  double lip = detail::estimate_lipschitz(quadratic_apply, x.rows(), x.cols());
  // H = 0 leaves a linear program; any positive step size still converges.
  if (!(lip > 0.0)) lip = 1.0;
  lip *= 1.01;

  Matrix x_prev = x;
  Matrix hx_prev = hx;
  double momentum_t = 1.0;
  report.status = QpStatus::MaxIterations;
  int iter = 0;
  double mapping_norm = std::numeric_limits<double>::infinity();
  for (; iter < options.max_iters; ++iter) {
    if (iter % 100 == 99) {
      hx = quadratic_apply(x);
      fx = objective_of(x, hx);
    }
    const double next_t = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum_t * momentum_t));
    const double beta = (momentum_t - 1.0) / next_t;
    Matrix y = x + beta * (x - x_prev);
    Matrix hy = hx + beta * (hx - hx_prev);
    double fy = objective_of(y, hy);
    Matrix grad = hy - linear;

    Matrix x_new;
    Matrix hd;
    double f_new = 0.0;
    bool restarted = false;
    for (;;) {
      x_new = project_rows(y - grad / lip, caps);
      const Matrix d = x_new - y;
      hd = quadratic_apply(d);
      const double dd = d.squaredNorm();
      f_new = fy + detail::frob_dot(grad, d) + 0.5 * detail::frob_dot(d, hd);
      if (0.5 * detail::frob_dot(d, hd) <= 0.5 * lip * dd * (1.0 + 1e-12) + 1e-300) {
        if (f_new > fx && !restarted && beta > 0.0) {
          // Momentum overshot: restart from x with a plain projected step.
          restarted = true;
          momentum_t = 1.0;
          y = x;
          hy = hx;
          fy = fx;
          grad = hy - linear;
          continue;
        }
        break;
      }
      lip *= 2.0;
    }

    mapping_norm = lip * (y - x_new).norm();
    x_prev = x;
    hx_prev = hx;
    if (f_new <= fx) {
      x = x_new;
      hx = hy + hd;
      fx = f_new;
    }
    momentum_t = restarted ? 1.0 : next_t;
    if (mapping_norm <= options.tol) {
      report.status = QpStatus::Converged;
      ++iter;
      break;
    }
  }

  hx = quadratic_apply(x);
  report.solution = x;
  report.objective = objective_of(x, hx);
  report.iterations = iter;
  report.kkt_residual = mapping_norm;
  return report;
}

}  // namespace plcl

#endif  // PLCL_QP_HPP
