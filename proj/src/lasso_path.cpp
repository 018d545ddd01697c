#include "hiersel/lasso_path.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hsel {
namespace {

constexpr double kStallCorrelation = 1e-12;

struct HomotopyRequest {
  std::size_t stop_size = 0;  // 0: no size limit
  double lambda_target = -1.0;  // < 0: no penalty target
};

struct HomotopyResult {
  RegularizationPath path;
  Vector beta;
};

SparseCoefficients sparse_from(const Vector& beta, const std::vector<std::size_t>& active) {
  SparseCoefficients out(static_cast<std::size_t>(beta.size()));
  for (auto j : active) out.set(j, beta[static_cast<Eigen::Index>(j)]);
  return out;
}

std::vector<std::size_t> sorted(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return v;
}

HomotopyResult homotopy(const Matrix& z, const Vector& y, const HomotopyRequest& req) {
  if (y.size() != z.rows()) {
    fail(ErrorCode::dimension_mismatch, "response length " + std::to_string(y.size()) +
                                            " does not match design rows " + std::to_string(z.rows()));
  }
  require(z.rows() >= 1 && z.cols() >= 1, "lars: empty design");
  const Eigen::Index p = z.cols();
  const double inv_n = 1.0 / static_cast<double>(z.rows());

  HomotopyResult out;
  Vector beta = Vector::Zero(p);
  Vector c = z.transpose() * y * inv_n;

  Eigen::Index first = 0;
  double lambda = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (std::abs(c[j]) > lambda) {
      lambda = std::abs(c[j]);
      first = j;
    }
  }
  out.path.breakpoints.push_back({0.0, lambda, SparseCoefficients(static_cast<std::size_t>(p)), {}});

  if (lambda < kStallCorrelation) {
    out.path.stalled = req.stop_size > 0;
    out.beta = beta;
    return out;
  }
  if (req.lambda_target >= 0.0 && lambda <= req.lambda_target) {
    out.beta = beta;
    return out;
  }

  const double tiny = 1e-12 * lambda;
  std::vector<std::size_t> active{static_cast<std::size_t>(first)};
  std::vector<char> in_active(static_cast<std::size_t>(p), 0);
  std::vector<char> excluded(static_cast<std::size_t>(p), 0);
  in_active[static_cast<std::size_t>(first)] = 1;
  Eigen::Index just_dropped = -1;

  const std::size_t budget = 10 * static_cast<std::size_t>(p);
  std::size_t knots = 0;
  while (true) {
    if (++knots > budget) {
      out.path.stalled = true;
      break;
    }
    const auto k = static_cast<Eigen::Index>(active.size());
    Matrix za(z.rows(), k);
    Vector signs(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      const auto j = static_cast<Eigen::Index>(active[static_cast<std::size_t>(a)]);
      za.col(a) = z.col(j);
      signs[a] = c[j] >= 0.0 ? 1.0 : -1.0;
    }
    const Matrix gram = za.transpose() * za * inv_n;
    Eigen::LDLT<Matrix> ldlt(gram);
    const Vector dvec = ldlt.vectorD().cwiseAbs();
    if (ldlt.info() != Eigen::Success || dvec.minCoeff() < 1e-10 * std::max(1.0, dvec.maxCoeff())) {
      // The newest variable lies in the span of the others; it can never
      // carry its own coefficient, so it is removed for good.
      const std::size_t j = active.back();
      require(active.size() > 1, "lars: degenerate single-column design");
      active.pop_back();
      in_active[j] = 0;
      excluded[j] = 1;
      if (out.path.breakpoints.size() > 1) out.path.breakpoints.pop_back();
      continue;
    }
    const Vector w = ldlt.solve(signs);
    const Vector a = z.transpose() * (za * w) * inv_n;

    enum class Event { end, enter, drop } event = Event::end;
    double gamma = lambda;
    Eigen::Index who = -1;
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      if (in_active[ju] || excluded[ju]) continue;
      // A variable dropped at this knot sits on the boundary on its old side;
      // only a crossing with the opposite sign is a genuine re-entry.
      const bool dropped_now = j == just_dropped;
      if (!(dropped_now && c[j] >= 0.0) && 1.0 - a[j] > 1e-12) {
        const double g = (lambda - c[j]) / (1.0 - a[j]);
        if (g > tiny && g < gamma) {
          gamma = g;
          event = Event::enter;
          who = j;
        }
      }
      if (!(dropped_now && c[j] < 0.0) && 1.0 + a[j] > 1e-12) {
        const double g = (lambda + c[j]) / (1.0 + a[j]);
        if (g > tiny && g < gamma) {
          gamma = g;
          event = Event::enter;
          who = j;
        }
      }
    }
    for (Eigen::Index idx = 0; idx < k; ++idx) {
      const auto j = static_cast<Eigen::Index>(active[static_cast<std::size_t>(idx)]);
      if (w[idx] == 0.0) continue;
      const double g = -beta[j] / w[idx];
      if (g > tiny && g < gamma) {
        gamma = g;
        event = Event::drop;
        who = j;
      }
    }

    if (req.lambda_target >= 0.0 && lambda - gamma <= req.lambda_target) {
      const double step = lambda - req.lambda_target;
      for (Eigen::Index idx = 0; idx < k; ++idx) {
        beta[static_cast<Eigen::Index>(active[static_cast<std::size_t>(idx)])] += step * w[idx];
      }
      out.beta = beta;
      return out;
    }

    for (Eigen::Index idx = 0; idx < k; ++idx) {
      beta[static_cast<Eigen::Index>(active[static_cast<std::size_t>(idx)])] += gamma * w[idx];
    }
    lambda = event == Event::end ? 0.0 : lambda - gamma;
    if (event == Event::drop) beta[who] = 0.0;
    c = z.transpose() * (y - z * beta) * inv_n;

    PathBreakpoint bp;
    bp.lambda = lambda;
    bp.active_set = sorted(active);
    bp.beta = sparse_from(beta, bp.active_set);
    bp.t = bp.beta.l1_norm();
    out.path.breakpoints.push_back(std::move(bp));

    if (req.stop_size > 0 && active.size() >= req.stop_size) break;

    just_dropped = -1;
    if (event == Event::end || lambda < kStallCorrelation) {
      out.path.stalled = req.stop_size > 0;
      break;
    }
    if (event == Event::drop) {
      active.erase(std::find(active.begin(), active.end(), static_cast<std::size_t>(who)));
      in_active[static_cast<std::size_t>(who)] = 0;
      just_dropped = who;
      if (active.empty()) {
        // Only possible through rounding; restart from the strongest column.
        Eigen::Index best = 0;
        c.cwiseAbs().maxCoeff(&best);
        active.push_back(static_cast<std::size_t>(best));
        in_active[static_cast<std::size_t>(best)] = 1;
      }
    } else {
      active.push_back(static_cast<std::size_t>(who));
      in_active[static_cast<std::size_t>(who)] = 1;
    }
  }
  out.beta = beta;
  return out;
}

}  // namespace

RegularizationPath lars_path(const Matrix& z, const Vector& y, std::size_t stop_size) {
  require(stop_size >= 1, "lars_path: stop size must be at least 1");
  if (stop_size > static_cast<std::size_t>(z.cols())) {
    fail(ErrorCode::invalid_argument, "lars_path: stop size exceeds column count");
  }
  HomotopyRequest req;
  req.stop_size = stop_size;
  return homotopy(z, y, req).path;
}

RegularizationPath lars_path(const DesignMatrix& z, const ResponseVector& y, std::size_t stop_size) {
  return lars_path(z.values(), y.values, stop_size);
}

SparseCoefficients lasso_penalized(const Matrix& z, const Vector& y, double r) {
  require(r >= 0.0, "lasso_penalized: penalty must be nonnegative");
  HomotopyRequest req;
  req.lambda_target = r / 2.0;
  return SparseCoefficients::from_dense(homotopy(z, y, req).beta);
}

SparseCoefficients lasso_penalized(const DesignMatrix& z, const ResponseVector& y, double r) {
  return lasso_penalized(z.values(), y.values, r);
}

double lasso_objective(const Matrix& z, const Vector& y, const SparseCoefficients& beta, double r) {
  return prediction_loss(z, beta, y) + r * beta.l1_norm();
}

double default_penalty(double n, double p, double a) {
  require(n > 0.0 && p > 1.0 && a > 0.0, "default_penalty: need n > 0, p > 1, A > 0");
  return a * std::sqrt(std::log(p) / n);
}

std::vector<MarkThreshold> mark_thresholds(const RegularizationPath& path, std::size_t mark) {
  require(mark >= 1, "mark_thresholds: mark must be positive");
  std::vector<MarkThreshold> out;
  std::size_t next = mark;
  const auto& bps = path.breakpoints;
  for (std::size_t k = 1; k < bps.size(); ++k) {
    // The segment ending at knot k starts at knot k-1.
    while (bps[k].active_set.size() > next) {
      out.push_back({next, bps[k - 1].t});
      next += mark;
    }
  }
  return out;
}

}  // namespace hsel
