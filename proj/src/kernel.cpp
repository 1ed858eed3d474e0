#include "qtraj/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <unordered_map>

#include "qtraj/reference.hpp"

namespace qtraj {

namespace {

struct LevelNode {
  ProjectiveState state;
  double weight;
};

using LevelMap = std::unordered_map<StateKey, LevelNode, StateKeyHash>;

// Hard ceiling on merged states per level. Hitting it means the dynamics is
// not collapsing and pruning is not biting, so the tree walk cannot certify
// anything at a sane cost.
constexpr std::size_t kMaxLevelNodes = 4000000;

// Expand one kernel level, merging children that land on the same canonical
// state. Mass dropped by cumulative-weight pruning is accumulated.
LevelMap expand_level(const KrausFamily& family, const LevelMap& level, double prune_eps,
                      double* pruned_mass) {
  if (level.size() > kMaxLevelNodes) {
    throw NoConvergenceError(
        "kernel tree: level exceeds the node budget; raise prune_eps or check the assumptions");
  }
  LevelMap next;
  next.reserve(level.size() * static_cast<std::size_t>(family.branch_count()));
  for (const auto& [key, node] : level) {
    (void)key;
    for (int b = 0; b < family.branch_count(); ++b) {
      Vector moved = family.op(b) * node.state.representative();
      double w = moved.squaredNorm();
      if (w < kZeroBranchFloor) continue;  // null branch of the kernel
      double cum = node.weight * w;
      if (cum < prune_eps) {
        *pruned_mass += cum;
        continue;
      }
      ProjectiveState child(std::move(moved));
      StateKey ck = state_key(child);
      auto it = next.find(ck);
      if (it == next.end()) {
        next.emplace(std::move(ck), LevelNode{std::move(child), cum});
      } else {
        it->second.weight += cum;
      }
    }
  }
  return next;
}

double level_value(const LevelMap& level, const StateFunction& f) {
  double acc = 0.0;
  for (const auto& [key, node] : level) {
    (void)key;
    acc += node.weight * f(node.state);
  }
  return acc;
}

}  // namespace

double apply_pi(const KrausFamily& family, const StateFunction& f, const ProjectiveState& x) {
  require_well_formed(family);
  double acc = 0.0;
  for (int b = 0; b < family.branch_count(); ++b) {
    Vector moved = family.op(b) * x.representative();
    double w = moved.squaredNorm();
    if (w < kZeroBranchFloor) continue;
    acc += w * f(ProjectiveState(std::move(moved)));
  }
  return acc;
}

PiIterateSequence pi_iterate_sequence(const KrausFamily& family, const StateFunction& f,
                                      const ProjectiveState& x, int depth, double prune_eps) {
  require_well_formed(family);
  if (depth < 0) throw StructuralError("pi_iterate_sequence: negative depth");
  PiIterateSequence out;
  out.values.reserve(static_cast<std::size_t>(depth) + 1);
  LevelMap level;
  level.emplace(state_key(x), LevelNode{x, 1.0});
  out.values.push_back(level_value(level, f));
  for (int k = 1; k <= depth; ++k) {
    level = expand_level(family, level, prune_eps, &out.pruned_mass);
    out.values.push_back(level_value(level, f));
  }
  return out;
}

IteratedPi iterate_pi(const KrausFamily& family, const StateFunction& f, const ProjectiveState& x,
                      int k, double prune_eps) {
  PiIterateSequence seq = pi_iterate_sequence(family, f, x, k, prune_eps);
  return IteratedPi{seq.values.back(), seq.pruned_mass};
}

std::vector<ProjectiveState> random_probe_states(int dim, int count, std::uint64_t seed) {
  RngStream rng(seed, 0x9107b35u);
  std::vector<ProjectiveState> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(random_state(dim, rng));
  return out;
}

struct PoissonSolution::Impl {
  KrausFamily family;
  Observable g;
  double mean = 0.0;
  int period = 1;
  int blocks = 0;
  int levels = 0;                // kernel powers per evaluation
  std::vector<double> coeff;     // Cesaro weights c_k, k = 0..levels
  double prune_eps = 0.0;
  double tol = 0.0;
  double gauge = 0.0;
  double block_ratio = 0.0;
  bool exact_tail = false;

  mutable std::mutex mu;
  mutable std::unordered_map<StateKey, double, StateKeyHash> raw_cache;
  mutable std::unordered_map<StateKey, double, StateKeyHash> h_cache;
  mutable double max_residual = 0.0;
  mutable double max_pruned = 0.0;
  mutable double sup_centered_seen = 1e-12;

  double centered_fn(const ProjectiveState& x) const { return g(x) - mean; }

  // Raw (ungauged) truncated solution plus its certified residual at x.
  double raw(const ProjectiveState& x) const {
    StateKey key = state_key(x);
    {
      std::lock_guard<std::mutex> lock(mu);
      auto it = raw_cache.find(key);
      if (it != raw_cache.end()) return it->second;
    }
    StateFunction f = [this](const ProjectiveState& s) {
      double v = centered_fn(s);
      return v;
    };
    PiIterateSequence seq = pi_iterate_sequence(family, f, x, levels, prune_eps);
    double value = 0.0;
    for (int k = 0; k < static_cast<int>(coeff.size()); ++k) {
      value += coeff[static_cast<std::size_t>(k)] * seq.values[static_cast<std::size_t>(k)];
    }
    // (Id - Pi) gtilde - gbar = -(1/m) sum_r Pi^{Nm+r} gbar, measurable here.
    double tail = 0.0;
    for (int r = 0; r < period; ++r) {
      tail += seq.values[static_cast<std::size_t>(blocks * period + r)];
    }
    tail = std::abs(tail) / period;
    double sup_local = 1e-12;
    for (double v : seq.values) sup_local = std::max(sup_local, std::abs(v));
    double slop = seq.pruned_mass * sup_local * static_cast<double>(levels + 1);
    {
      std::lock_guard<std::mutex> lock(mu);
      max_residual = std::max(max_residual, tail + slop);
      max_pruned = std::max(max_pruned, seq.pruned_mass);
      sup_centered_seen = std::max(sup_centered_seen, sup_local);
      raw_cache.emplace(std::move(key), value);
    }
    return value;
  }

  double value(const ProjectiveState& x) const { return raw(x) - gauge; }

  double pi_value(const ProjectiveState& x) const {
    double acc = 0.0;
    for (int b = 0; b < family.branch_count(); ++b) {
      Vector moved = family.op(b) * x.representative();
      double w = moved.squaredNorm();
      if (w < kZeroBranchFloor) continue;
      acc += w * value(ProjectiveState(std::move(moved)));
    }
    return acc;
  }

  double h_value(const ProjectiveState& x) const {
    StateKey key = state_key(x);
    {
      std::lock_guard<std::mutex> lock(mu);
      auto it = h_cache.find(key);
      if (it != h_cache.end()) return it->second;
    }
    double first = 0.0, second = 0.0;
    for (int b = 0; b < family.branch_count(); ++b) {
      Vector moved = family.op(b) * x.representative();
      double w = moved.squaredNorm();
      if (w < kZeroBranchFloor) continue;
      double gt = value(ProjectiveState(std::move(moved)));
      first += w * gt;
      second += w * gt * gt;
    }
    double h = second - first * first;
    if (h < 0.0) h = 0.0;  // conditional variance, clip rounding
    {
      std::lock_guard<std::mutex> lock(mu);
      h_cache.emplace(std::move(key), h);
    }
    return h;
  }
};

double PoissonSolution::evaluate(const ProjectiveState& x) const { return impl_->value(x); }
double PoissonSolution::pi_evaluate(const ProjectiveState& x) const { return impl_->pi_value(x); }
double PoissonSolution::conditional_variance(const ProjectiveState& x) const {
  return impl_->h_value(x);
}
double PoissonSolution::centered(const ProjectiveState& x) const { return impl_->centered_fn(x); }
double PoissonSolution::centered_raw(const Cplx* components, int dim) const {
  return impl_->g.value_at(components, dim) - impl_->mean;
}
double PoissonSolution::invariant_mean() const { return impl_->mean; }
const Observable& PoissonSolution::observable() const { return impl_->g; }
const KrausFamily& PoissonSolution::family() const { return impl_->family; }

PoissonDiagnostics PoissonSolution::diagnostics() const {
  PoissonDiagnostics d;
  d.blocks = impl_->blocks;
  d.levels = impl_->levels;
  d.period = impl_->period;
  d.tol = impl_->tol;
  d.gauge = impl_->gauge;
  d.block_ratio = impl_->block_ratio;
  d.exact_tail = impl_->exact_tail;
  std::lock_guard<std::mutex> lock(impl_->mu);
  d.residual_bound = impl_->max_residual;
  d.max_pruned_mass = impl_->max_pruned;
  return d;
}

PoissonSolution solve_poisson(const KrausFamily& family, const Observable& g,
                              double invariant_mean, int period_m, const PoissonOptions& options) {
  require_well_formed(family);
  if (period_m < 1) throw StructuralError("solve_poisson: period must be >= 1");
  if (!(options.tol > 0.0)) throw StructuralError("solve_poisson: tol must be positive");

  auto impl = std::make_shared<PoissonSolution::Impl>();
  impl->family = family;
  impl->g = g;
  impl->mean = invariant_mean;
  impl->period = period_m;
  impl->prune_eps = options.prune_eps;
  impl->tol = options.tol;

  std::vector<ProjectiveState> probes = options.probes;
  for (ProjectiveState& s : random_probe_states(family.dim, options.probe_count,
                                                options.probe_seed)) {
    probes.push_back(std::move(s));
  }
  if (probes.empty()) throw StructuralError("solve_poisson: no probe states");

  StateFunction centered = [&](const ProjectiveState& s) { return g(s) - invariant_mean; };

  // Incremental kernel levels per probe; block N covers powers
  // (N-1)m .. Nm-1. Stop when the block sums and their geometric tail both
  // fall under tol/2 on every probe.
  const int m = period_m;
  std::vector<LevelMap> levels;
  std::vector<double> pruned(probes.size(), 0.0);
  std::vector<std::vector<double>> power_values(probes.size());
  levels.reserve(probes.size());
  for (const ProjectiveState& p : probes) {
    LevelMap level;
    level.emplace(state_key(p), LevelNode{p, 1.0});
    power_values[levels.size()].push_back(level_value(level, centered));
    levels.push_back(std::move(level));
  }

  auto extend_to = [&](int target_power) {
    for (std::size_t i = 0; i < probes.size(); ++i) {
      while (static_cast<int>(power_values[i].size()) <= target_power) {
        levels[i] = expand_level(family, levels[i], options.prune_eps, &pruned[i]);
        power_values[i].push_back(level_value(levels[i], centered));
      }
    }
  };

  std::vector<double> block_sups;
  int blocks = 0;
  bool exact_tail = false;
  double ratio = 0.0;
  for (int n = 1; n <= options.max_blocks; ++n) {
    extend_to(n * m - 1);
    double sup = 0.0;
    for (std::size_t i = 0; i < probes.size(); ++i) {
      double s = 0.0;
      for (int k = (n - 1) * m; k < n * m; ++k) {
        s += power_values[i][static_cast<std::size_t>(k)];
      }
      sup = std::max(sup, std::abs(s));
    }
    block_sups.push_back(sup);
    blocks = n;

    // Two consecutive blocks at rounding level: the truncation is exact.
    const double kZeroBlock = 1e-14;
    if (sup <= kZeroBlock && block_sups.size() >= 2 &&
        block_sups[block_sups.size() - 2] <= kZeroBlock) {
      exact_tail = true;
      break;
    }
    if (block_sups.size() >= 3) {
      double prev = block_sups[block_sups.size() - 2];
      ratio = prev > 0.0 ? sup / prev : 0.0;
      bool tail_ok = ratio < 1.0 && sup * ratio / (1.0 - ratio) < options.tol / 2.0;
      if (sup < options.tol / 2.0 && tail_ok) break;
    }
  }
  if (!exact_tail && !block_sups.empty() && block_sups.back() >= options.tol / 2.0) {
    if (blocks >= options.max_blocks) {
      throw NoConvergenceError(
          "solve_poisson: block sums not below tolerance after max_blocks; "
          "assumptions may fail or prune_eps is too coarse");
    }
  }

  impl->blocks = blocks;
  // Powers 0..Nm-1 carry weight one, the next m-1 powers carry the
  // triangular Cesaro correction, and power Nm+m-1 is needed by the
  // residual term.
  impl->levels = blocks * m + m - 1;
  impl->block_ratio = ratio;
  impl->exact_tail = exact_tail;
  impl->coeff.assign(static_cast<std::size_t>(impl->levels) + 1, 0.0);
  for (int k = 0; k < blocks * m; ++k) impl->coeff[static_cast<std::size_t>(k)] = 1.0;
  for (int j = 0; j <= m - 2; ++j) {
    impl->coeff[static_cast<std::size_t>(blocks * m + j)] =
        static_cast<double>(m - 1 - j) / static_cast<double>(m);
  }

  PoissonSolution solution;
  solution.impl_ = impl;

  // Gauge: zero mean over the probe set, so independently built solutions
  // differ only by their probe draws, not by an arbitrary offset.
  double acc = 0.0;
  for (const ProjectiveState& p : probes) acc += impl->raw(p);
  impl->gauge = acc / static_cast<double>(probes.size());

  return solution;
}

VarianceEstimate gamma_sq_from_atoms(
    const PoissonSolution& solution,
    const std::vector<std::pair<ProjectiveState, double>>& atoms) {
  if (atoms.empty()) throw StructuralError("gamma_sq_from_atoms: empty atom list");
  double acc = 0.0;
  for (const auto& [state, weight] : atoms) {
    acc += weight * solution.conditional_variance(state);
  }
  if (acc < 0.0) acc = 0.0;
  VarianceEstimate est;
  est.gamma_sq = acc;
  est.method = VarianceMethod::atoms_exact;
  est.n_samples = static_cast<long>(atoms.size());
  est.std_error = 0.0;
  return est;
}

VarianceEstimate gamma_sq_ergodic(const PoissonSolution& solution, const TrajectoryConfig& cfg,
                                  long n) {
  if (n < 1) throw StructuralError("gamma_sq_ergodic: need n >= 1");
  TrajectoryWalker walker(cfg);
  const int kBatches = 64;
  long batch_len = std::max<long>(1, n / kBatches);
  std::vector<double> batch_means;
  double acc = 0.0, batch_acc = 0.0;
  long in_batch = 0;
  for (long k = 0; k < n; ++k) {
    double h = solution.conditional_variance(walker.state());
    acc += h;
    batch_acc += h;
    if (++in_batch == batch_len) {
      batch_means.push_back(batch_acc / static_cast<double>(in_batch));
      batch_acc = 0.0;
      in_batch = 0;
    }
    walker.step();
  }
  VarianceEstimate est;
  est.gamma_sq = std::max(0.0, acc / static_cast<double>(n));
  est.method = VarianceMethod::ergodic_h;
  est.n_samples = n;
  if (batch_means.size() >= 2) {
    double mean = 0.0;
    for (double b : batch_means) mean += b;
    mean /= static_cast<double>(batch_means.size());
    double var = 0.0;
    for (double b : batch_means) var += (b - mean) * (b - mean);
    var /= static_cast<double>(batch_means.size() - 1);
    est.std_error = std::sqrt(var / static_cast<double>(batch_means.size()));
  }
  return est;
}

MartingaleDecomposition martingale_path(const PoissonSolution& solution,
                                        const TrajectoryPath& path) {
  MartingaleDecomposition out;
  const std::size_t n = path.word.size();
  out.partial_sums.reserve(n + 1);
  out.martingale.reserve(n + 1);
  out.partial_sums.push_back(0.0);
  out.martingale.push_back(0.0);
  double s = 0.0, mart = 0.0;
  double gt0 = solution.evaluate(path.states.front());
  for (std::size_t k = 1; k <= n; ++k) {
    s += solution.centered(path.states[k - 1]);
    mart += solution.evaluate(path.states[k]) - solution.pi_evaluate(path.states[k - 1]);
    out.partial_sums.push_back(s);
    out.martingale.push_back(mart);
    double residual = s - mart - (gt0 - solution.evaluate(path.states[k]));
    out.max_telescoping_residual = std::max(out.max_telescoping_residual, std::abs(residual));
  }
  return out;
}

double oscillation_over(const PoissonSolution& solution,
                        const std::vector<ProjectiveState>& states) {
  if (states.empty()) throw StructuralError("oscillation_over: empty state set");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const ProjectiveState& s : states) {
    double v = solution.evaluate(s);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi - lo;
}

}  // namespace qtraj
