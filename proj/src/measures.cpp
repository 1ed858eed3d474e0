#include "qtraj/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace qtraj {

DiscreteMeasure::DiscreteMeasure(std::vector<Atom> atoms) {
  for (Atom& a : atoms) add(a.state, a.weight);
}

void DiscreteMeasure::add(const ProjectiveState& state, double weight) {
  if (weight < 0.0) throw StructuralError("discrete measure: negative weight");
  if (!atoms_.empty() && atoms_.front().state.dim() != state.dim()) {
    throw StructuralError("discrete measure: mixed dimensions");
  }
  StateKey key = state_key(state);
  auto it = index_.find(key);
  if (it != index_.end()) {
    atoms_[it->second].weight += weight;
    return;
  }
  index_.emplace(std::move(key), atoms_.size());
  atoms_.push_back(Atom{state, weight});
}

void DiscreteMeasure::normalize() {
  double total = total_mass();
  if (!(total > 0.0)) throw StructuralError("discrete measure: zero total mass");
  for (Atom& a : atoms_) a.weight /= total;
}

double DiscreteMeasure::total_mass() const {
  double t = 0.0;
  for (const Atom& a : atoms_) t += a.weight;
  return t;
}

double DiscreteMeasure::mass_near(const ProjectiveState& x, double radius) const {
  double m = 0.0;
  for (const Atom& a : atoms_) {
    if (metric_distance(a.state, x) < radius) m += a.weight;
  }
  return m;
}

DiscreteMeasure DiscreteMeasure::dirac(const ProjectiveState& x) {
  DiscreteMeasure m;
  m.add(x, 1.0);
  return m;
}

DiscreteMeasure empirical_measure(const TrajectoryPath& path, long burn_in) {
  long n = static_cast<long>(path.states.size());
  if (burn_in < 0 || burn_in >= n) {
    throw StructuralError("empirical_measure: burn_in must be < path length");
  }
  DiscreteMeasure m;
  double w = 1.0 / static_cast<double>(n - burn_in);
  for (long k = burn_in; k < n; ++k) m.add(path.states[static_cast<std::size_t>(k)], w);
  return m;
}

DiscreteMeasure empirical_measure_streaming(const TrajectoryConfig& cfg, long n, long burn_in) {
  if (burn_in < 0 || burn_in >= n + 1) {
    throw StructuralError("empirical_measure_streaming: burn_in must be < n+1");
  }
  TrajectoryWalker walker(cfg);
  DiscreteMeasure m;
  double w = 1.0 / static_cast<double>(n + 1 - burn_in);
  for (long k = 0; k <= n; ++k) {
    if (k >= burn_in) m.add(walker.state(), w);
    if (k < n) walker.step();
  }
  return m;
}

namespace {

// Successive shortest augmenting paths with potentials on the dense
// transportation graph. Node layout: 0..n-1 supplies, n..n+m-1 demands.
double transport_cost(const std::vector<double>& supply, const std::vector<double>& demand,
                      const std::vector<std::vector<double>>& cost) {
  const std::size_t n = supply.size();
  const std::size_t m = demand.size();
  std::vector<double> remaining_supply = supply;
  std::vector<double> remaining_demand = demand;
  std::vector<std::vector<double>> flow(n, std::vector<double>(m, 0.0));
  std::vector<double> pot_u(n, 0.0), pot_v(m, 0.0);

  const double kEps = 1e-15;
  double shipped = 0.0;
  double total = std::accumulate(supply.begin(), supply.end(), 0.0);

  while (total - shipped > 1e-12) {
    // Dijkstra from the set of supplies with remaining mass, over forward
    // edges (i -> j, reduced cost c_ij - u_i + ... ) and backward edges
    // (j -> i where flow > 0).
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist_u(n, inf), dist_v(m, inf);
    std::vector<int> prev_v(m, -1);        // supply feeding demand j on the path
    std::vector<int> prev_u(n, -1);        // demand feeding supply i (backward)
    std::vector<bool> done_u(n, false), done_v(m, false);
    for (std::size_t i = 0; i < n; ++i) {
      if (remaining_supply[i] > kEps) dist_u[i] = 0.0;
    }
    while (true) {
      // Pick the unsettled node with smallest distance.
      double best = inf;
      int idx = -1;
      bool is_supply = true;
      for (std::size_t i = 0; i < n; ++i) {
        if (!done_u[i] && dist_u[i] < best) {
          best = dist_u[i];
          idx = static_cast<int>(i);
          is_supply = true;
        }
      }
      for (std::size_t j = 0; j < m; ++j) {
        if (!done_v[j] && dist_v[j] < best) {
          best = dist_v[j];
          idx = static_cast<int>(j);
          is_supply = false;
        }
      }
      if (idx < 0) break;
      if (is_supply) {
        std::size_t i = static_cast<std::size_t>(idx);
        done_u[i] = true;
        for (std::size_t j = 0; j < m; ++j) {
          if (done_v[j]) continue;
          double rc = cost[i][j] - pot_u[i] - pot_v[j];
          if (rc < 0.0) rc = 0.0;  // clamp rounding
          if (dist_u[i] + rc < dist_v[j]) {
            dist_v[j] = dist_u[i] + rc;
            prev_v[j] = static_cast<int>(i);
          }
        }
      } else {
        std::size_t j = static_cast<std::size_t>(idx);
        done_v[j] = true;
        for (std::size_t i = 0; i < n; ++i) {
          if (done_u[i] || flow[i][j] <= kEps) continue;
          double rc = -(cost[i][j] - pot_u[i] - pot_v[j]);
          if (rc < 0.0) rc = 0.0;
          if (dist_v[j] + rc < dist_u[i]) {
            dist_u[i] = dist_v[j] + rc;
            prev_u[i] = static_cast<int>(j);
          }
        }
      }
    }

    // Cheapest reachable demand with remaining need.
    int target = -1;
    double best = inf;
    for (std::size_t j = 0; j < m; ++j) {
      if (remaining_demand[j] > kEps && dist_v[j] < best) {
        best = dist_v[j];
        target = static_cast<int>(j);
      }
    }
    if (target < 0) {
      throw NoConvergenceError("wasserstein1: no augmenting path (unbalanced masses?)");
    }

    // Bottleneck along the alternating path.
    double delta = remaining_demand[static_cast<std::size_t>(target)];
    {
      int j = target;
      while (true) {
        int i = prev_v[static_cast<std::size_t>(j)];
        int back = prev_u[static_cast<std::size_t>(i)];
        if (back < 0) {
          delta = std::min(delta, remaining_supply[static_cast<std::size_t>(i)]);
          break;
        }
        delta = std::min(delta, flow[static_cast<std::size_t>(i)][static_cast<std::size_t>(back)]);
        j = back;
      }
    }

    // Apply the augmentation.
    {
      int j = target;
      while (true) {
        int i = prev_v[static_cast<std::size_t>(j)];
        flow[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += delta;
        int back = prev_u[static_cast<std::size_t>(i)];
        if (back < 0) {
          remaining_supply[static_cast<std::size_t>(i)] -= delta;
          break;
        }
        flow[static_cast<std::size_t>(i)][static_cast<std::size_t>(back)] -= delta;
        j = back;
      }
      remaining_demand[static_cast<std::size_t>(target)] -= delta;
    }
    shipped += delta;

    // Potential update keeps reduced costs nonnegative: shift by the
    // distance, capped at the target's distance.
    for (std::size_t i = 0; i < n; ++i) {
      if (dist_u[i] < inf) pot_u[i] -= std::min(dist_u[i], best);
    }
    for (std::size_t j = 0; j < m; ++j) {
      if (dist_v[j] < inf) pot_v[j] += std::min(dist_v[j], best);
    }
  }

  double c = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) c += flow[i][j] * cost[i][j];
  }
  return c;
}

}  // namespace

double wasserstein1(const DiscreteMeasure& a, const DiscreteMeasure& b, std::size_t size_limit) {
  if (a.size() == 0 || b.size() == 0) throw StructuralError("wasserstein1: empty measure");
  if (a.atoms().front().state.dim() != b.atoms().front().state.dim()) {
    throw StructuralError("wasserstein1: dimension mismatch");
  }
  if (a.size() > size_limit || b.size() > size_limit) {
    throw SizeLimitError("wasserstein1: atom count beyond solver limit");
  }
  if (std::abs(a.total_mass() - 1.0) > 1e-9 || std::abs(b.total_mass() - 1.0) > 1e-9) {
    throw StructuralError("wasserstein1: measures must have unit mass");
  }

  std::vector<double> supply(a.size()), demand(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) supply[i] = a.atoms()[i].weight;
  for (std::size_t j = 0; j < b.size(); ++j) demand[j] = b.atoms()[j].weight;
  // Rebalance rounding so the problem is exactly feasible.
  double sa = std::accumulate(supply.begin(), supply.end(), 0.0);
  double sb = std::accumulate(demand.begin(), demand.end(), 0.0);
  for (double& d : demand) d *= sa / sb;

  std::vector<std::vector<double>> cost(a.size(), std::vector<double>(b.size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      cost[i][j] = metric_distance(a.atoms()[i].state, b.atoms()[j].state);
    }
  }
  return transport_cost(supply, demand, cost);
}

DiscreteMeasure cesaro_pushforward(const TrajectoryConfig& cfg_template, int period_m, int n,
                                   int replicas, int threads) {
  if (period_m < 1) throw StructuralError("cesaro_pushforward: period must be >= 1");
  if (n < 0 || replicas < 1) throw StructuralError("cesaro_pushforward: bad n or replicas");
  // Replica r runs to length m*n + (r mod m); pooling the m offsets with the
  // replica average realizes the Cesaro-averaged push-forward.
  std::vector<ProjectiveState> finals(static_cast<std::size_t>(replicas),
                                      ProjectiveState(Vector::Ones(cfg_template.family.dim)));
  for_each_replica(replicas, threads, [&](int r) {
    TrajectoryConfig cfg = cfg_template;
    cfg.replica_index = cfg_template.replica_index + static_cast<std::uint64_t>(r);
    cfg.n_steps = static_cast<long>(period_m) * n + (r % period_m);
    TrajectoryWalker walker(cfg);
    for (long k = 0; k < cfg.n_steps; ++k) walker.step();
    finals[static_cast<std::size_t>(r)] = walker.state();
  });
  DiscreteMeasure out;
  double w = 1.0 / static_cast<double>(replicas);
  for (const ProjectiveState& s : finals) out.add(s, w);
  return out;
}

LambdaFit fit_lambda(const TrajectoryConfig& cfg_template, const DiscreteMeasure& target,
                     int period_m, const std::vector<int>& n_grid, int replicas, int threads) {
  if (n_grid.size() < 2) throw StructuralError("fit_lambda: need at least two grid points");
  LambdaFit fit;
  double floor = 2.0 / std::sqrt(static_cast<double>(replicas));
  std::vector<double> xs, ys;
  for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
    int n = n_grid[gi];
    TrajectoryConfig cfg = cfg_template;
    // Distinct stream block per grid point.
    cfg.replica_index = cfg_template.replica_index +
                        static_cast<std::uint64_t>(gi) * static_cast<std::uint64_t>(replicas);
    DiscreteMeasure pushed = cesaro_pushforward(cfg, period_m, n, replicas, threads);
    DecayPoint pt;
    pt.n = n;
    pt.w1 = wasserstein1(pushed, target);
    pt.stderr_floor = floor;
    pt.used_in_fit = pt.w1 > floor;
    if (pt.used_in_fit) {
      xs.push_back(static_cast<double>(n));
      ys.push_back(std::log(pt.w1));
    }
    fit.points.push_back(pt);
  }
  if (xs.size() < 2) throw StructuralError("fit_lambda: fewer than two points above the noise floor");

  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  double mx = sx / static_cast<double>(xs.size());
  double my = sy / static_cast<double>(xs.size());
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  fit.slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double r = ys[i] - (my + fit.slope * (xs[i] - mx));
    rss += r * r;
  }
  std::size_t dof = xs.size() >= 3 ? xs.size() - 2 : 1;
  fit.slope_se = std::sqrt(rss / static_cast<double>(dof) / sxx);
  // 97.5% Student-t quantiles for small samples.
  static const double kT[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306,
                              2.262,  2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120};
  double t = dof <= 16 ? kT[dof - 1] : 1.96;
  fit.lambda_hat = std::exp(fit.slope);
  fit.lambda_lower = std::exp(fit.slope - t * fit.slope_se);
  fit.lambda_upper = std::exp(fit.slope + t * fit.slope_se);
  return fit;
}

}  // namespace qtraj
