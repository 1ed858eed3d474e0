#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "qtraj/kraus.hpp"
#include "qtraj/rng.hpp"

namespace qtraj {

enum class ZeroBranchPolicy { abort, resample };

struct TrajectoryConfig {
  KrausFamily family;
  // Exactly one of the two initial descriptions is used; the measure is a
  // finite list of (state, weight) with weights summing to one.
  std::optional<ProjectiveState> initial_state;
  std::vector<std::pair<ProjectiveState, double>> initial_measure;
  long n_steps = 0;
  std::uint64_t master_seed = 0;
  std::uint64_t replica_index = 0;
  ZeroBranchPolicy zero_branch = ZeroBranchPolicy::abort;
};

void validate_config(const TrajectoryConfig& cfg);

struct TrajectoryPath {
  std::vector<ProjectiveState> states;  // x_0 .. x_n
  Word word;                            // branch per step
  std::vector<double> step_weights;     // ||A_i x_{k-1}||^2
  std::vector<double> log_norms;        // log ||W_k x_0|| via the matrix route
  Matrix scaled_product;                // W_n rescaled to unit sup-norm
  double product_log_scale = 0.0;
};

/// Streaming trajectory sampler. The state buffer always holds the canonical
/// unit representative; `step` advances by one measurement. Product tracking
/// (needed by the estimator sequence and the log-norm bookkeeping) is opt-in
/// because it doubles the per-step cost.
class TrajectoryWalker {
 public:
  TrajectoryWalker(const TrajectoryConfig& cfg, bool track_product = false);

  int dim() const { return dim_; }
  const Cplx* state_data() const { return state_.data(); }
  ProjectiveState state() const;

  /// Advance one step; returns the chosen branch index.
  int step();

  double last_weight() const { return last_weight_; }
  long steps_taken() const { return steps_; }

  bool tracking_product() const { return track_product_; }
  const Matrix& scaled_product() const { return product_; }
  double product_log_scale() const { return product_log_scale_; }
  /// log ||W_n x_0|| computed through the rescaled matrix product.
  double log_norm() const;

 private:
  void set_state(const Vector& v);
  void canonicalize_state();

  int dim_;
  int branches_;
  std::vector<Cplx> ops_;     // row-major, one block per operator
  std::vector<Cplx> state_;
  std::vector<Cplx> scratch_;
  std::vector<double> weights_;
  RngStream rng_;
  ZeroBranchPolicy policy_;
  double last_weight_ = 1.0;
  long steps_ = 0;

  bool track_product_;
  Matrix product_;
  double product_log_scale_ = 0.0;
  Vector x0_;
};

TrajectoryPath sample_trajectory(const TrajectoryConfig& cfg);

/// Runs fn(r) for r in [0, R). The parallel variant distributes replicas over
/// an OpenMP team; every fn(r) must be self-contained so results are
/// bit-identical whatever the thread count or schedule.
void for_each_replica_serial(int replicas, const std::function<void(int)>& fn);
void for_each_replica_parallel(int replicas, int threads, const std::function<void(int)>& fn);
void for_each_replica(int replicas, int threads, const std::function<void(int)>& fn);

std::vector<TrajectoryPath> sample_replicas(const TrajectoryConfig& cfg_template, int replicas,
                                            int threads);
std::vector<TrajectoryPath> sample_replicas_serial(const TrajectoryConfig& cfg_template,
                                                   int replicas);

/// Number of worker threads: explicit argument, else QTRAJ_THREADS, else the
/// OpenMP default.
int resolve_threads(int requested);

}  // namespace qtraj
