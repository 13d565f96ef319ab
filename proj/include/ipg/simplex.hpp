#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace ipg {

/// Euclidean projection of `v` onto the probability simplex.
///
/// Sort-and-threshold: with u = sort(v, descending) and the prefix sums of u,
/// the active count rho is the largest j with u_j - (sum_{k<=j} u_k - 1)/j > 0;
/// the output is max(v - tau, 0) with tau = (sum_{k<=rho} u_k - 1)/rho.
inline Eigen::VectorXd project_simplex(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const Eigen::Index n = v.size();
  if (n == 0) throw std::invalid_argument("project_simplex: empty vector");
  for (Eigen::Index a = 0; a < n; ++a) {
    if (!std::isfinite(v[a])) throw std::invalid_argument("project_simplex: non-finite entry");
  }

  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());

  double prefix = 0.0;
  double tau = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    prefix += u[j];
    const double candidate = (prefix - 1.0) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) tau = candidate;
  }

  Eigen::VectorXd p(n);
  for (Eigen::Index a = 0; a < n; ++a) p[a] = std::max(v[a] - tau, 0.0);
  return p;
}

/// Projection onto the xi-greedy simplex {p : p(a) >= xi/A, sum p = 1}.
///
/// Substitutes q = (p - xi/A) / (1 - xi), which maps the set onto the plain
/// simplex, projects there, and maps back. xi = 1 collapses to the uniform point.
inline Eigen::VectorXd project_xi_simplex(const Eigen::Ref<const Eigen::VectorXd>& v, double xi) {
  if (!(xi >= 0.0 && xi <= 1.0)) {
    throw std::invalid_argument("project_xi_simplex: xi must lie in [0, 1]");
  }
  const Eigen::Index n = v.size();
  if (n == 0) throw std::invalid_argument("project_xi_simplex: empty vector");
  const double floor = xi / static_cast<double>(n);
  if (xi == 1.0) return Eigen::VectorXd::Constant(n, floor);
  if (xi == 0.0) return project_simplex(v);

  const Eigen::VectorXd shifted = (v.array() - floor) / (1.0 - xi);
  Eigen::VectorXd q = project_simplex(shifted);
  return ((1.0 - xi) * q.array() + floor).matrix();
}

/// Projection onto the Euclidean ball of the given radius.
inline Eigen::VectorXd project_ball(const Eigen::Ref<const Eigen::VectorXd>& w, double radius) {
  const double norm = w.norm();
  if (norm <= radius) return w;
  return w * (radius / norm);
}

}  // namespace ipg
