#pragma once

// Follower communication graph with leader pinning, and the desired
// formation geometry.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace etform {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Smallest singular value of L + B below which a follower is considered
/// cut off from the leader.
inline constexpr double kReachabilityTolerance = 1e-9;

/// Undirected follower graph. Agents are indexed 0..n-1 in code; user-facing
/// files and reports number them 1..n.
class Topology {
 public:
  Topology() = default;

  Topology(MatrixXd adjacency, VectorXd pinning)
      : adjacency_(std::move(adjacency)), pinning_(std::move(pinning)) {
    if (adjacency_.rows() != adjacency_.cols())
      throw std::invalid_argument("adjacency must be square");
    if (pinning_.size() != adjacency_.rows())
      throw std::invalid_argument("pinning length must equal follower count");
    if (adjacency_.rows() == 0)
      throw std::invalid_argument("topology needs at least one follower");
  }

  /// Builds a 0/1 adjacency from 1-based undirected edge pairs.
  static Topology FromEdges(std::size_t n_followers,
                            const std::vector<std::pair<int, int>>& edges,
                            VectorXd pinning) {
    MatrixXd adj = MatrixXd::Zero(static_cast<Eigen::Index>(n_followers),
                                  static_cast<Eigen::Index>(n_followers));
    for (const auto& [a, b] : edges) {
      if (a < 1 || b < 1 || a > static_cast<int>(n_followers) ||
          b > static_cast<int>(n_followers))
        throw std::out_of_range("edge (" + std::to_string(a) + "," +
                                std::to_string(b) + ") references an unknown follower");
      adj(a - 1, b - 1) = 1.0;
      adj(b - 1, a - 1) = 1.0;
    }
    return Topology(std::move(adj), std::move(pinning));
  }

  std::size_t size() const { return static_cast<std::size_t>(adjacency_.rows()); }
  const MatrixXd& adjacency() const { return adjacency_; }
  const VectorXd& pinning() const { return pinning_; }

  double weight(std::size_t i, std::size_t j) const {
    return adjacency_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  double pin(std::size_t i) const { return pinning_(static_cast<Eigen::Index>(i)); }

 private:
  MatrixXd adjacency_;
  VectorXd pinning_;
};

inline void check_index(const Topology& topology, std::size_t i) {
  if (i >= topology.size())
    throw std::out_of_range("agent index " + std::to_string(i) + " out of range (n=" +
                            std::to_string(topology.size()) + ")");
}

/// d_i = sum_j a_ij.
inline double degree(const Topology& topology, std::size_t i) {
  check_index(topology, i);
  return topology.adjacency().row(static_cast<Eigen::Index>(i)).sum();
}

/// L = D - A.
inline MatrixXd laplacian(const Topology& topology) {
  const MatrixXd& a = topology.adjacency();
  MatrixXd lap = -a;
  for (Eigen::Index i = 0; i < a.rows(); ++i) lap(i, i) += a.row(i).sum();
  return lap;
}

/// L + diag(b), the matrix whose nonsingularity means every follower hears
/// the leader through some path.
inline MatrixXd pinned_laplacian(const Topology& topology) {
  MatrixXd h = laplacian(topology);
  h.diagonal() += topology.pinning();
  return h;
}

/// {j : a_ij > 0}, ascending.
inline std::vector<std::size_t> neighbors(const Topology& topology, std::size_t i) {
  check_index(topology, i);
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < topology.size(); ++j)
    if (topology.weight(i, j) > 0.0) out.push_back(j);
  return out;
}

struct Violation {
  std::string code;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  bool has(const std::string& code) const {
    for (const auto& v : violations)
      if (v.code == code) return true;
    return false;
  }
};

/// Checks the construction invariants without throwing. Every problem found is
/// reported, not just the first.
inline ValidationReport validate(const Topology& topology) {
  ValidationReport report;
  const MatrixXd& a = topology.adjacency();
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 0.0)
    report.violations.push_back({"not symmetric", "adjacency differs from its transpose"});
  if (a.diagonal().cwiseAbs().maxCoeff() > 0.0)
    report.violations.push_back({"nonzero diagonal", "self loops are not allowed"});
  if (a.minCoeff() < 0.0)
    report.violations.push_back({"negative weight", "adjacency weights must be nonnegative"});
  if (topology.pinning().minCoeff() < 0.0)
    report.violations.push_back({"negative pinning", "pinning gains must be nonnegative"});

  const Eigen::JacobiSVD<MatrixXd> svd(pinned_laplacian(topology));
  const double smallest = svd.singularValues().minCoeff();
  if (smallest <= kReachabilityTolerance)
    report.violations.push_back(
        {"leader not reachable",
         "L+B is singular (smallest singular value " + std::to_string(smallest) + ")"});
  return report;
}

/// Desired offset of each follower relative to the leader.
struct FormationSpec {
  std::vector<VectorXd> offsets;

  std::size_t size() const { return offsets.size(); }
  const VectorXd& operator[](std::size_t i) const { return offsets[i]; }

  /// Regular polygon of the given circumradius around the leader, follower i
  /// (1-based) at angle 2*pi*i/n.
  static FormationSpec RegularPolygon(std::size_t n, double radius) {
    FormationSpec spec;
    for (std::size_t i = 1; i <= n; ++i) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) /
                           static_cast<double>(n);
      VectorXd v(2);
      v << radius * std::cos(angle), radius * std::sin(angle);
      spec.offsets.push_back(v);
    }
    return spec;
  }

  static FormationSpec Zero(std::size_t n, Eigen::Index dim) {
    return FormationSpec{std::vector<VectorXd>(n, VectorXd::Zero(dim))};
  }
};

}  // namespace etform
