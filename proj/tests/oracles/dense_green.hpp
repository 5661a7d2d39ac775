#pragma once
// Dense linear algebra and explicit eigen-sums for the killed-walk operator,
// independent of the FFT and sparse code paths.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "gff2d/lattice.hpp"

namespace oracle {

/// Dense Q on the window (optionally with pinned rows/columns removed by
/// setting them to the identity).
inline Eigen::MatrixXd dense_operator(const gff2d::WalkModel& m, const gff2d::Window& w,
                                      const std::vector<char>& pinned = {}) {
  const int n = static_cast<int>(w.size());
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const gff2d::Point p = w.point(i);
    q(i, i) += m.total_rate;
    for (gff2d::Point s : gff2d::kSteps) {
      gff2d::Point r = p + s;
      if (w.kind() == gff2d::WindowKind::box && !w.inside(r)) continue;
      q(i, static_cast<int>(w.index(r))) -= m.edge_conductance;
    }
  }
  if (!pinned.empty())
    for (int i = 0; i < n; ++i)
      if (pinned[i]) {
        q.row(i).setZero();
        q.col(i).setZero();
        q(i, i) = 1;
      }
  return q;
}

/// Full inverse; entries on pinned sites are zeroed.
inline Eigen::MatrixXd dense_green(const gff2d::WalkModel& m, const gff2d::Window& w,
                                   const std::vector<char>& pinned = {}) {
  const Eigen::MatrixXd q = dense_operator(m, w, pinned);
  Eigen::MatrixXd g = q.llt().solve(Eigen::MatrixXd::Identity(q.rows(), q.cols()));
  if (!pinned.empty())
    for (int i = 0; i < g.rows(); ++i)
      if (pinned[i]) {
        g.row(i).setZero();
        g.col(i).setZero();
      }
  return g;
}

/// g(x,y) on a box window of side s from the explicit sine eigen-sum,
/// O(s^2) per entry.
inline double box_green_eigensum(const gff2d::WalkModel& m, int s, int x1, int y1, int x2, int y2) {
  // coordinates are 0-based offsets from the lower-left corner
  const double c = 2.0 / (s + 1);
  std::vector<double> ax(s), ay(s), ev(s);
  for (int k = 0; k < s; ++k) {
    const double t = M_PI * (k + 1) / (s + 1);
    ax[k] = c * std::sin(t * (x1 + 1)) * std::sin(t * (x2 + 1));
    ay[k] = c * std::sin(t * (y1 + 1)) * std::sin(t * (y2 + 1));
    ev[k] = 2 * m.edge_conductance * std::cos(t);
  }
  long double sum = 0;
  for (int k1 = 0; k1 < s; ++k1)
    for (int k2 = 0; k2 < s; ++k2) sum += ax[k1] * ay[k2] / (m.total_rate - ev[k1] - ev[k2]);
  return static_cast<double>(sum);
}

}  // namespace oracle
