#include "qtraj/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qtraj {

void validate_config(const TrajectoryConfig& cfg) {
  require_well_formed(cfg.family);
  if (cfg.n_steps < 0) throw StructuralError("trajectory config: n_steps must be >= 0");
  bool has_state = cfg.initial_state.has_value();
  bool has_measure = !cfg.initial_measure.empty();
  if (has_state == has_measure) {
    throw StructuralError("trajectory config: provide exactly one of initial state or measure");
  }
  if (has_state && cfg.initial_state->dim() != cfg.family.dim) {
    throw StructuralError("trajectory config: initial state dimension mismatch");
  }
  if (has_measure) {
    double total = 0.0;
    for (const auto& [state, weight] : cfg.initial_measure) {
      if (state.dim() != cfg.family.dim) {
        throw StructuralError("trajectory config: initial measure dimension mismatch");
      }
      if (weight < 0.0) throw StructuralError("trajectory config: negative weight");
      total += weight;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw StructuralError("trajectory config: initial measure weights must sum to one");
    }
  }
}

TrajectoryWalker::TrajectoryWalker(const TrajectoryConfig& cfg, bool track_product)
    : dim_(cfg.family.dim),
      branches_(cfg.family.branch_count()),
      rng_(cfg.master_seed, cfg.replica_index),
      policy_(cfg.zero_branch),
      track_product_(track_product) {
  validate_config(cfg);
  ops_.resize(static_cast<std::size_t>(branches_) * dim_ * dim_);
  for (int b = 0; b < branches_; ++b) {
    const Matrix& a = cfg.family.op(b);
    for (int r = 0; r < dim_; ++r) {
      for (int c = 0; c < dim_; ++c) {
        ops_[static_cast<std::size_t>(b) * dim_ * dim_ + r * dim_ + c] = a(r, c);
      }
    }
  }
  state_.resize(dim_);
  scratch_.resize(static_cast<std::size_t>(branches_) * dim_);
  weights_.resize(branches_);

  if (cfg.initial_state) {
    set_state(cfg.initial_state->representative());
  } else {
    double u = rng_.uniform();
    double acc = 0.0;
    std::size_t pick = cfg.initial_measure.size() - 1;
    for (std::size_t i = 0; i < cfg.initial_measure.size(); ++i) {
      acc += cfg.initial_measure[i].second;
      if (u < acc) {
        pick = i;
        break;
      }
    }
    set_state(cfg.initial_measure[pick].first.representative());
  }
  if (track_product_) {
    product_ = Matrix::Identity(dim_, dim_);
    x0_ = Vector(dim_);
    for (int i = 0; i < dim_; ++i) x0_(i) = state_[static_cast<std::size_t>(i)];
  }
}

void TrajectoryWalker::set_state(const Vector& v) {
  for (int i = 0; i < dim_; ++i) state_[static_cast<std::size_t>(i)] = v(i);
  canonicalize_state();
}

void TrajectoryWalker::canonicalize_state() {
  double nrm2 = 0.0;
  for (int i = 0; i < dim_; ++i) nrm2 += std::norm(state_[static_cast<std::size_t>(i)]);
  double inv = 1.0 / std::sqrt(nrm2);
  int idx = 0;
  double best = 0.0;
  for (int i = 0; i < dim_; ++i) {
    state_[static_cast<std::size_t>(i)] *= inv;
    double a = std::norm(state_[static_cast<std::size_t>(i)]);
    if (a > best) {
      best = a;
      idx = i;
    }
  }
  Cplx pivot = state_[static_cast<std::size_t>(idx)];
  double mag = std::abs(pivot);
  Cplx phase = std::conj(pivot) / mag;
  for (int i = 0; i < dim_; ++i) state_[static_cast<std::size_t>(i)] *= phase;
  state_[static_cast<std::size_t>(idx)] = Cplx(mag, 0.0);
}

ProjectiveState TrajectoryWalker::state() const {
  Vector v(dim_);
  for (int i = 0; i < dim_; ++i) v(i) = state_[static_cast<std::size_t>(i)];
  return ProjectiveState(std::move(v));
}

int TrajectoryWalker::step() {
  const std::size_t d = static_cast<std::size_t>(dim_);
  double total = 0.0;
  for (int b = 0; b < branches_; ++b) {
    const Cplx* op = &ops_[static_cast<std::size_t>(b) * d * d];
    Cplx* out = &scratch_[static_cast<std::size_t>(b) * d];
    double w = 0.0;
    for (std::size_t r = 0; r < d; ++r) {
      Cplx acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) acc += op[r * d + c] * state_[c];
      out[r] = acc;
      w += std::norm(acc);
    }
    weights_[static_cast<std::size_t>(b)] = w;
    total += w;
  }
  if (!(total >= kZeroBranchFloor)) {
    throw ZeroBranchError("trajectory step: all branch weights below floor");
  }

  int chosen = -1;
  double u = rng_.uniform() * total;
  double acc = 0.0;
  for (int b = 0; b < branches_; ++b) {
    acc += weights_[static_cast<std::size_t>(b)];
    if (u < acc) {
      chosen = b;
      break;
    }
  }
  if (chosen < 0) chosen = branches_ - 1;

  if (weights_[static_cast<std::size_t>(chosen)] < kZeroBranchFloor) {
    if (policy_ == ZeroBranchPolicy::abort) {
      throw ZeroBranchError("trajectory step: selected branch weight below floor");
    }
    // Resample among surviving branches.
    double alive = 0.0;
    for (int b = 0; b < branches_; ++b) {
      if (weights_[static_cast<std::size_t>(b)] >= kZeroBranchFloor) {
        alive += weights_[static_cast<std::size_t>(b)];
      }
    }
    if (!(alive > 0.0)) throw ZeroBranchError("trajectory step: no branch above floor");
    double u2 = rng_.uniform() * alive;
    double acc2 = 0.0;
    chosen = -1;
    for (int b = 0; b < branches_; ++b) {
      double w = weights_[static_cast<std::size_t>(b)];
      if (w < kZeroBranchFloor) continue;
      acc2 += w;
      if (u2 < acc2) {
        chosen = b;
        break;
      }
      chosen = b;
    }
  }

  last_weight_ = weights_[static_cast<std::size_t>(chosen)];
  const Cplx* next = &scratch_[static_cast<std::size_t>(chosen) * d];
  for (std::size_t i = 0; i < d; ++i) state_[i] = next[i];
  canonicalize_state();

  if (track_product_) {
    Matrix a(dim_, dim_);
    const Cplx* op = &ops_[static_cast<std::size_t>(chosen) * d * d];
    for (int r = 0; r < dim_; ++r) {
      for (int c = 0; c < dim_; ++c) a(r, c) = op[static_cast<std::size_t>(r) * d + c];
    }
    product_ = a * product_;
    double s = sup_norm(product_);
    if (s > 0.0) {
      product_ /= s;
      product_log_scale_ += std::log(s);
    }
  }
  ++steps_;
  return chosen;
}

double TrajectoryWalker::log_norm() const {
  if (!track_product_) {
    throw PreconditionError("log_norm: walker was built without product tracking");
  }
  return product_log_scale_ + std::log((product_ * x0_).norm());
}

TrajectoryPath sample_trajectory(const TrajectoryConfig& cfg) {
  TrajectoryWalker walker(cfg, /*track_product=*/true);
  TrajectoryPath path;
  path.states.reserve(static_cast<std::size_t>(cfg.n_steps) + 1);
  path.word.letters.reserve(static_cast<std::size_t>(cfg.n_steps));
  path.step_weights.reserve(static_cast<std::size_t>(cfg.n_steps));
  path.log_norms.reserve(static_cast<std::size_t>(cfg.n_steps));
  path.states.push_back(walker.state());
  for (long k = 0; k < cfg.n_steps; ++k) {
    int branch = walker.step();
    path.word.letters.push_back(branch);
    path.step_weights.push_back(walker.last_weight());
    path.log_norms.push_back(walker.log_norm());
    path.states.push_back(walker.state());
  }
  path.scaled_product = walker.scaled_product();
  path.product_log_scale = walker.product_log_scale();
  return path;
}

void for_each_replica_serial(int replicas, const std::function<void(int)>& fn) {
  for (int r = 0; r < replicas; ++r) fn(r);
}

void for_each_replica_parallel(int replicas, int threads, const std::function<void(int)>& fn) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(threads)
  for (int r = 0; r < replicas; ++r) fn(r);
#else
  (void)threads;
  for (int r = 0; r < replicas; ++r) fn(r);
#endif
}

void for_each_replica(int replicas, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1) {
    for_each_replica_serial(replicas, fn);
  } else {
    for_each_replica_parallel(replicas, threads, fn);
  }
}

std::vector<TrajectoryPath> sample_replicas(const TrajectoryConfig& cfg_template, int replicas,
                                            int threads) {
  if (replicas < 1) throw StructuralError("sample_replicas: need at least one replica");
  std::vector<TrajectoryPath> out(static_cast<std::size_t>(replicas));
  for_each_replica(replicas, threads, [&](int r) {
    TrajectoryConfig cfg = cfg_template;
    cfg.replica_index = cfg_template.replica_index + static_cast<std::uint64_t>(r);
    out[static_cast<std::size_t>(r)] = sample_trajectory(cfg);
  });
  return out;
}

std::vector<TrajectoryPath> sample_replicas_serial(const TrajectoryConfig& cfg_template,
                                                   int replicas) {
  if (replicas < 1) throw StructuralError("sample_replicas: need at least one replica");
  std::vector<TrajectoryPath> out(static_cast<std::size_t>(replicas));
  for_each_replica_serial(replicas, [&](int r) {
    TrajectoryConfig cfg = cfg_template;
    cfg.replica_index = cfg_template.replica_index + static_cast<std::uint64_t>(r);
    out[static_cast<std::size_t>(r)] = sample_trajectory(cfg);
  });
  return out;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("QTRAJ_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace qtraj
