#pragma once

#include <vector>

#include "qtraj/observable.hpp"
#include "qtraj/trajectory.hpp"

namespace qtraj {

struct DegenerateVarianceError : std::runtime_error {
  explicit DegenerateVarianceError(const std::string& what) : std::runtime_error(what) {}
};

// ---- small distribution helpers -------------------------------------------

double normal_cdf(double x);

/// P(K > x) for the Kolmogorov distribution, series truncated at 100 terms.
double kolmogorov_sf(double x);

struct KsResult {
  double distance = 0.0;
  double p_value = 0.0;
};

/// One-sample Kolmogorov-Smirnov test against the standard normal.
KsResult ks_test_standard_normal(std::vector<double> values);

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// ---- limit-theorem harness -------------------------------------------------

struct LlnReport {
  double empirical_mean = 0.0;
  double target = 0.0;
  double tolerance = 0.0;  // 4 * sqrt(gamma_eff^2 / n), batch-means inflated
  long n = 0;
  bool pass = false;
};

/// Time average of g along one trajectory against the invariant expectation.
LlnReport lln_check(const TrajectoryConfig& cfg, const Observable& g, double target, long n);

struct CltReport {
  int replicas = 0;
  long n = 0;
  std::vector<double> normalized;  // S_n(gbar) / sqrt(n gamma^2) per replica
  double ks_distance = 0.0;
  double p_value = 0.0;
};

/// Distribution test of the normalized partial sums over independent
/// replicas. Throws DegenerateVarianceError when gamma_sq <= 0.
CltReport clt_test(const TrajectoryConfig& cfg, const Observable& g, double center,
                   double gamma_sq, long n, int replicas, int threads);

/// Interpolated partial-sum paths s_n(t) at the requested times, one row per
/// replica. Times must lie in [0, 1].
std::vector<std::vector<double>> fclt_paths(const TrajectoryConfig& cfg, const Observable& g,
                                            double center, long n,
                                            const std::vector<double>& times, int replicas,
                                            int threads);

/// Empirical covariance of (s_n(s), s_n(t)) / (n gamma^2) over replicas; the
/// Brownian target is min(s, t).
double fclt_covariance(const TrajectoryConfig& cfg, const Observable& g, double center,
                       double gamma_sq, long n, double s, double t, int replicas, int threads);

struct LilReport {
  long n_start = 0;
  long n_end = 0;
  std::vector<double> replica_max_plus;   // sup of +S_n / envelope per replica
  std::vector<double> replica_max_minus;  // sup of -S_n / envelope
  double pooled_max_plus = 0.0;
  double pooled_max_minus = 0.0;
  double pooled_max_abs = 0.0;
  // Thinned pooled |S_n|-envelope trace for plotting: (n, max over replicas).
  std::vector<std::pair<long, double>> envelope;
};

/// Scans S_n / sqrt(2 n gamma^2 loglog n) over n in [n_start, n_end]. A
/// finite-n probe of an asymptotic statement; the pooled max is the headline.
LilReport lil_scan(const TrajectoryConfig& cfg, const Observable& g, double center,
                   double gamma_sq, long n_start, long n_end, int replicas, int threads);

struct MdpReport {
  double beta = 0.0;
  double a_n = 0.0;
  long n = 0;
  int replicas = 0;
  double gamma_sq = 0.0;
  std::vector<double> z;
  std::vector<double> lambda_hat;     // (n/a^2) log mean exp((a/n) z S_n)
  std::vector<double> jackknife_se;
  std::vector<double> target;          // z^2 gamma^2 / 2
  std::vector<bool> overflowed;
};

/// Scaled cumulant estimates at the moderate-deviation scaling a(n) = n^beta,
/// computed with a log-sum-exp reduction. Entries whose exponent exceeds the
/// double range are flagged instead of propagating infinities.
MdpReport mdp_cumulant(const TrajectoryConfig& cfg, const Observable& g, double center,
                       double gamma_sq, long n, int replicas, double beta,
                       const std::vector<double>& z_grid, int threads);

/// Moderate-deviation rate function J(y).
double rate_function(double gamma_sq, double y);

}  // namespace qtraj
