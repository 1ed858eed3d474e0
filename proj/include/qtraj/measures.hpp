#pragma once

#include <unordered_map>
#include <vector>

#include "qtraj/trajectory.hpp"

namespace qtraj {

/// Finitely supported probability measure on projective space. Atoms whose
/// canonical representatives coincide (within the merge grid) are pooled.
class DiscreteMeasure {
 public:
  struct Atom {
    ProjectiveState state;
    double weight;
  };

  DiscreteMeasure() = default;
  explicit DiscreteMeasure(std::vector<Atom> atoms);

  void add(const ProjectiveState& state, double weight);
  void normalize();

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  double total_mass() const;

  /// Mass carried by atoms within `radius` of x.
  double mass_near(const ProjectiveState& x, double radius) const;

  static DiscreteMeasure dirac(const ProjectiveState& x);

 private:
  std::vector<Atom> atoms_;
  std::unordered_map<StateKey, std::size_t, StateKeyHash> index_;
};

/// Occupation measure of the path states after `burn_in`.
DiscreteMeasure empirical_measure(const TrajectoryPath& path, long burn_in);

/// Streaming variant: walk `n` steps of a fresh trajectory and pool the
/// states after `burn_in`.
DiscreteMeasure empirical_measure_streaming(const TrajectoryConfig& cfg, long n, long burn_in);

/// Exact Wasserstein-1 distance under the projective metric, solved as a
/// transportation problem (successive shortest augmenting paths). Throws
/// SizeLimitError past `size_limit` atoms on either side.
double wasserstein1(const DiscreteMeasure& a, const DiscreteMeasure& b, std::size_t size_limit = 2000);

/// Monte Carlo push-forward (1/m) sum_r nu Pi^{mn+r}: R replicas run to the m
/// lengths mn..mn+m-1 and pooled with equal weight.
DiscreteMeasure cesaro_pushforward(const TrajectoryConfig& cfg_template, int period_m, int n,
                                   int replicas, int threads);

struct DecayPoint {
  int n = 0;
  double w1 = 0.0;
  double stderr_floor = 0.0;  // Monte Carlo noise scale 2/sqrt(R)
  bool used_in_fit = false;
};

struct LambdaFit {
  double slope = 0.0;        // least-squares slope of log W1 against n
  double slope_se = 0.0;
  double lambda_hat = 0.0;   // exp(slope)
  double lambda_lower = 0.0; // 95% band
  double lambda_upper = 0.0;
  std::vector<DecayPoint> points;
};

/// Fits the geometric decay rate of W1(nu Pi^n-averages, target) over a grid
/// of n. Distances under the Monte Carlo floor 2/sqrt(R) are dropped.
LambdaFit fit_lambda(const TrajectoryConfig& cfg_template, const DiscreteMeasure& target,
                     int period_m, const std::vector<int>& n_grid, int replicas, int threads);

}  // namespace qtraj
