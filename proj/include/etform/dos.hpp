#pragma once

// Denial-of-service attack schedules: the attacked/unattacked partition of
// time, attack frequency and length rate, and the safe upper bounds on both.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace etform {

/// One attack window [start, start + duration).
struct AttackInterval {
  double start = 0.0;
  double duration = 0.0;

  double end() const { return start + duration; }
};

/// Ordered, disjoint, half-open attack windows.
class DosSchedule {
 public:
  DosSchedule() = default;

  explicit DosSchedule(std::vector<AttackInterval> intervals)
      : intervals_(std::move(intervals)) {
    for (std::size_t k = 0; k < intervals_.size(); ++k) {
      const auto& iv = intervals_[k];
      if (!(iv.duration > 0.0))
        throw std::invalid_argument("attack " + std::to_string(k + 1) +
                                    " must have positive duration");
      if (iv.start < 0.0)
        throw std::invalid_argument("attack " + std::to_string(k + 1) +
                                    " starts before t = 0");
      if (k > 0 && !(iv.start > intervals_[k - 1].end()))
        throw std::invalid_argument("attacks " + std::to_string(k) + " and " +
                                    std::to_string(k + 1) +
                                    " overlap or are out of order");
    }
  }

  /// From [start, end] pairs as written in experiment configs.
  static DosSchedule FromWindows(const std::vector<std::pair<double, double>>& windows) {
    std::vector<AttackInterval> ivs;
    ivs.reserve(windows.size());
    for (const auto& [a, b] : windows) ivs.push_back({a, b - a});
    return DosSchedule(std::move(ivs));
  }

  const std::vector<AttackInterval>& intervals() const { return intervals_; }
  bool empty() const { return intervals_.empty(); }

 private:
  std::vector<AttackInterval> intervals_;
};

inline bool is_active(const DosSchedule& schedule, double t) {
  for (const auto& iv : schedule.intervals())
    if (t >= iv.start && t < iv.end()) return true;
  return false;
}

/// |Omega(t)|: measure of [0, t] spent under attack.
inline double total_attack_time(const DosSchedule& schedule, double t) {
  double total = 0.0;
  for (const auto& iv : schedule.intervals()) {
    const double lo = std::max(0.0, iv.start);
    const double hi = std::min(t, iv.end());
    if (hi > lo) total += hi - lo;
  }
  return total;
}

/// Number of attacks that began in [0, t).
inline std::size_t attack_count(const DosSchedule& schedule, double t) {
  return static_cast<std::size_t>(
      std::count_if(schedule.intervals().begin(), schedule.intervals().end(),
                    [t](const AttackInterval& iv) { return iv.start < t; }));
}

inline double attack_frequency(const DosSchedule& schedule, double t) {
  if (!(t > 0.0)) throw std::domain_error("attack frequency needs t > 0");
  return static_cast<double>(attack_count(schedule, t)) / t;
}

inline double length_rate(const DosSchedule& schedule, double t) {
  if (!(t > 0.0)) throw std::domain_error("attack length rate needs t > 0");
  return total_attack_time(schedule, t) / t;
}

/// Constants from the switched-system stability argument.
struct StabilityConstants {
  double c1 = 0.0;  // lambda_min(Q_ii), decay rate in attack-free phases
  double c2 = 0.0;  // growth rate while under attack
  double c3 = 0.0;
  double c4 = 0.0;
  double c5 = 0.0;
  double zeta = 1.0;
  double k_star = 0.0;
  double lambda_max_p = 0.0;
  double lambda_min_p = 0.0;

  /// C3 = 2 c^T P c for the offset vector c.
  static double c3_from(const Eigen::MatrixXd& p, const Eigen::VectorXd& c) {
    return 2.0 * c.dot(p * c);
  }

  /// C5 = C1 - (C1 + C2) T - k*, positive exactly when the length-rate bound
  /// holds strictly.
  double c5_for_length_rate(double length_rate) const {
    return c1 - (c1 + c2) * length_rate - k_star;
  }

  void check() const {
    if (!(zeta >= 1.0)) throw std::invalid_argument("zeta must be >= 1");
    if (!(k_star > 0.0 && k_star < c1))
      throw std::invalid_argument("k_star must lie in (0, c1)");
    if (!(c4 > 0.0)) throw std::invalid_argument("c4 must be positive");
  }
};

inline StabilityConstants baseline_stability_constants() {
  StabilityConstants c;
  c.c1 = 0.4;
  c.c2 = 3.6;
  c.c3 = 4.0;
  c.c4 = 4.08;
  c.zeta = 3.0;
  c.k_star = 0.08;
  c.lambda_max_p = 1.2;
  c.lambda_min_p = 0.8;
  return c;
}

struct SafeBounds {
  double max_frequency = 0.0;    // 1/s, inclusive bound
  double max_length_rate = 0.0;  // dimensionless, strict bound
};

/// f_max = k* / ln(zeta C4), t_max = (C1 - k*) / (C1 + C2).
inline SafeBounds safe_bounds(const StabilityConstants& c) {
  const double zc4 = c.zeta * c.c4;
  if (!(zc4 > 1.0))
    throw std::domain_error("zeta*C4 must exceed 1 for the frequency bound to exist");
  if (!(c.c1 + c.c2 > 0.0)) throw std::domain_error("C1 + C2 must be positive");
  return {c.k_star / std::log(zc4), (c.c1 - c.k_star) / (c.c1 + c.c2)};
}

struct AdmissibilityReport {
  double frequency = 0.0;
  double length_rate = 0.0;
  SafeBounds bounds;
  bool frequency_ok = false;
  bool length_ok = false;

  bool ok() const { return frequency_ok && length_ok; }
};

inline AdmissibilityReport admissible(const DosSchedule& schedule, double t,
                                      const StabilityConstants& constants) {
  AdmissibilityReport r;
  r.frequency = attack_frequency(schedule, t);
  r.length_rate = length_rate(schedule, t);
  r.bounds = safe_bounds(constants);
  r.frequency_ok = r.frequency <= r.bounds.max_frequency;
  r.length_ok = r.length_rate < r.bounds.max_length_rate;
  return r;
}

/// Attack windows mapped onto a fixed step grid: step k (time k*dt) is
/// attacked iff some window satisfies round(start/dt) <= k < round(end/dt).
class GridSchedule {
 public:
  GridSchedule(const DosSchedule& schedule, double dt) {
    for (const auto& iv : schedule.intervals())
      windows_.emplace_back(static_cast<long long>(std::llround(iv.start / dt)),
                            static_cast<long long>(std::llround(iv.end() / dt)));
  }

  bool active(long long step) const {
    for (const auto& [lo, hi] : windows_)
      if (step >= lo && step < hi) return true;
    return false;
  }

 private:
  std::vector<std::pair<long long, long long>> windows_;
};

}  // namespace etform
