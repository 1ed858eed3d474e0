#include "qtraj/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qtraj {

double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

double kolmogorov_sf(double x) {
  if (x <= 0.0) return 1.0;
  double p = 0.0;
  for (int j = 1; j <= 100; ++j) {
    double term = std::exp(-2.0 * j * j * x * x);
    p += (j % 2 == 1) ? term : -term;
    if (term < 1e-18) break;
  }
  p *= 2.0;
  if (p < 0.0) p = 0.0;
  if (p > 1.0) p = 1.0;
  return p;
}

KsResult ks_test_standard_normal(std::vector<double> values) {
  if (values.empty()) throw StructuralError("ks test: empty sample");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    double f = normal_cdf(values[i]);
    d = std::max(d, f - static_cast<double>(i) / n);
    d = std::max(d, static_cast<double>(i + 1) / n - f);
  }
  return KsResult{d, kolmogorov_sf(std::sqrt(n) * d)};
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw StructuralError("ks test: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j]) {
      ++i;
    } else {
      ++j;
    }
    double fa = static_cast<double>(i) / static_cast<double>(a.size());
    double fb = static_cast<double>(j) / static_cast<double>(b.size());
    d = std::max(d, std::abs(fa - fb));
  }
  double na = static_cast<double>(a.size());
  double nb = static_cast<double>(b.size());
  return KsResult{d, kolmogorov_sf(std::sqrt(na * nb / (na + nb)) * d)};
}

LlnReport lln_check(const TrajectoryConfig& cfg, const Observable& g, double target, long n) {
  if (n < 1) throw StructuralError("lln_check: need n >= 1");
  TrajectoryWalker walker(cfg);
  const int kBatches = 64;
  long batch_len = std::max<long>(1, n / kBatches);
  std::vector<double> batch_means;
  double acc = 0.0, batch_acc = 0.0;
  long in_batch = 0;
  for (long k = 0; k < n; ++k) {
    double v = g.value_at(walker.state_data(), walker.dim());
    acc += v;
    batch_acc += v;
    if (++in_batch == batch_len) {
      batch_means.push_back(batch_acc / static_cast<double>(in_batch));
      batch_acc = 0.0;
      in_batch = 0;
    }
    walker.step();
  }
  LlnReport report;
  report.n = n;
  report.empirical_mean = acc / static_cast<double>(n);
  report.target = target;
  double gamma_eff = 0.0;
  if (batch_means.size() >= 2) {
    double mean = 0.0;
    for (double b : batch_means) mean += b;
    mean /= static_cast<double>(batch_means.size());
    double var = 0.0;
    for (double b : batch_means) var += (b - mean) * (b - mean);
    var /= static_cast<double>(batch_means.size() - 1);
    gamma_eff = var * static_cast<double>(batch_len);  // autocorrelation-inflated
  }
  report.tolerance = 4.0 * std::sqrt(gamma_eff / static_cast<double>(n));
  report.pass = std::abs(report.empirical_mean - target) <= report.tolerance;
  return report;
}

CltReport clt_test(const TrajectoryConfig& cfg, const Observable& g, double center,
                   double gamma_sq, long n, int replicas, int threads) {
  if (!(gamma_sq > 0.0)) {
    throw DegenerateVarianceError("clt_test: gamma^2 <= 0; use the degenerate branch check");
  }
  if (n < 1 || replicas < 2) throw StructuralError("clt_test: bad n or replicas");
  std::vector<double> normalized(static_cast<std::size_t>(replicas), 0.0);
  double denom = std::sqrt(static_cast<double>(n) * gamma_sq);
  for_each_replica(replicas, threads, [&](int r) {
    TrajectoryConfig c = cfg;
    c.replica_index = cfg.replica_index + static_cast<std::uint64_t>(r);
    TrajectoryWalker walker(c);
    double s = 0.0;
    for (long k = 0; k < n; ++k) {
      s += g.value_at(walker.state_data(), walker.dim()) - center;
      walker.step();
    }
    normalized[static_cast<std::size_t>(r)] = s / denom;
  });
  CltReport report;
  report.replicas = replicas;
  report.n = n;
  report.normalized = normalized;
  KsResult ks = ks_test_standard_normal(normalized);
  report.ks_distance = ks.distance;
  report.p_value = ks.p_value;
  return report;
}

std::vector<std::vector<double>> fclt_paths(const TrajectoryConfig& cfg, const Observable& g,
                                            double center, long n,
                                            const std::vector<double>& times, int replicas,
                                            int threads) {
  if (n < 1 || replicas < 1) throw StructuralError("fclt_paths: bad n or replicas");
  for (double t : times) {
    if (t < 0.0 || t > 1.0) throw StructuralError("fclt_paths: times must lie in [0,1]");
  }
  std::vector<std::vector<double>> out(static_cast<std::size_t>(replicas),
                                       std::vector<double>(times.size(), 0.0));
  for_each_replica(replicas, threads, [&](int r) {
    TrajectoryConfig c = cfg;
    c.replica_index = cfg.replica_index + static_cast<std::uint64_t>(r);
    TrajectoryWalker walker(c);
    // s_n(t) interpolates between S_floor(nt) and S_floor(nt)+1.
    std::vector<double>& row = out[static_cast<std::size_t>(r)];
    std::vector<double> sums(static_cast<std::size_t>(n) + 2, 0.0);
    double s = 0.0;
    sums[0] = 0.0;
    for (long k = 0; k < n + 1; ++k) {
      s += g.value_at(walker.state_data(), walker.dim()) - center;
      sums[static_cast<std::size_t>(k) + 1] = s;
      if (k < n) walker.step();
    }
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      double nt = static_cast<double>(n) * times[ti];
      long lo = static_cast<long>(std::floor(nt));
      double frac = nt - static_cast<double>(lo);
      double s_lo = sums[static_cast<std::size_t>(lo)];
      double s_hi = sums[static_cast<std::size_t>(lo) + 1];
      row[ti] = s_lo + frac * (s_hi - s_lo);
    }
  });
  return out;
}

double fclt_covariance(const TrajectoryConfig& cfg, const Observable& g, double center,
                       double gamma_sq, long n, double s, double t, int replicas, int threads) {
  if (!(gamma_sq > 0.0)) throw DegenerateVarianceError("fclt_covariance: gamma^2 <= 0");
  auto paths = fclt_paths(cfg, g, center, n, {s, t}, replicas, threads);
  double mx = 0.0, my = 0.0;
  for (const auto& row : paths) {
    mx += row[0];
    my += row[1];
  }
  mx /= static_cast<double>(replicas);
  my /= static_cast<double>(replicas);
  double cov = 0.0;
  for (const auto& row : paths) cov += (row[0] - mx) * (row[1] - my);
  cov /= static_cast<double>(replicas - 1);
  return cov / (static_cast<double>(n) * gamma_sq);
}

LilReport lil_scan(const TrajectoryConfig& cfg, const Observable& g, double center,
                   double gamma_sq, long n_start, long n_end, int replicas, int threads) {
  if (gamma_sq < 0.0) throw DegenerateVarianceError("lil_scan: gamma^2 < 0");
  if (n_start < 3 || n_end <= n_start) throw StructuralError("lil_scan: bad scan range");
  LilReport report;
  report.n_start = n_start;
  report.n_end = n_end;
  report.replica_max_plus.assign(static_cast<std::size_t>(replicas), 0.0);
  report.replica_max_minus.assign(static_cast<std::size_t>(replicas), 0.0);

  // Thinned pooled envelope on a geometric grid of ~240 points.
  std::vector<long> grid;
  for (double x = static_cast<double>(n_start); x <= static_cast<double>(n_end); x *= 1.03) {
    grid.push_back(static_cast<long>(x));
  }
  std::vector<std::vector<double>> grid_vals(static_cast<std::size_t>(replicas),
                                             std::vector<double>(grid.size(), 0.0));

  for_each_replica(replicas, threads, [&](int r) {
    TrajectoryConfig c = cfg;
    c.replica_index = cfg.replica_index + static_cast<std::uint64_t>(r);
    TrajectoryWalker walker(c);
    double s = 0.0;
    double max_plus = -std::numeric_limits<double>::infinity();
    double max_minus = -std::numeric_limits<double>::infinity();
    std::size_t gi = 0;
    for (long k = 0; k < n_end; ++k) {
      s += g.value_at(walker.state_data(), walker.dim()) - center;
      walker.step();
      long nn = k + 1;  // S_nn now available
      if (nn >= n_start) {
        double ll = std::log(std::log(static_cast<double>(nn)));
        double denom = std::sqrt(2.0 * static_cast<double>(nn) * gamma_sq * ll);
        // At gamma^2 = 0 the envelope is 0 exactly when the sums vanish and
        // blows up otherwise.
        double v = denom > 0.0 ? s / denom
                               : (s == 0.0 ? 0.0
                                           : std::copysign(
                                                 std::numeric_limits<double>::infinity(), s));
        max_plus = std::max(max_plus, v);
        max_minus = std::max(max_minus, -v);
        while (gi < grid.size() && grid[gi] == nn) {
          grid_vals[static_cast<std::size_t>(r)][gi] = std::abs(v);
          ++gi;
        }
      }
    }
    report.replica_max_plus[static_cast<std::size_t>(r)] = max_plus;
    report.replica_max_minus[static_cast<std::size_t>(r)] = max_minus;
  });

  report.pooled_max_plus =
      *std::max_element(report.replica_max_plus.begin(), report.replica_max_plus.end());
  report.pooled_max_minus =
      *std::max_element(report.replica_max_minus.begin(), report.replica_max_minus.end());
  report.pooled_max_abs = std::max(report.pooled_max_plus, report.pooled_max_minus);
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    double pooled = 0.0;
    for (int r = 0; r < replicas; ++r) {
      pooled = std::max(pooled, grid_vals[static_cast<std::size_t>(r)][gi]);
    }
    report.envelope.emplace_back(grid[gi], pooled);
  }
  return report;
}

MdpReport mdp_cumulant(const TrajectoryConfig& cfg, const Observable& g, double center,
                       double gamma_sq, long n, int replicas, double beta,
                       const std::vector<double>& z_grid, int threads) {
  if (!(beta > 0.5) || !(beta < 1.0)) {
    throw StructuralError("mdp_cumulant: beta must lie in (1/2, 1)");
  }
  if (n < 2 || replicas < 2) throw StructuralError("mdp_cumulant: bad n or replicas");

  std::vector<double> sums(static_cast<std::size_t>(replicas), 0.0);
  for_each_replica(replicas, threads, [&](int r) {
    TrajectoryConfig c = cfg;
    c.replica_index = cfg.replica_index + static_cast<std::uint64_t>(r);
    TrajectoryWalker walker(c);
    double s = 0.0;
    for (long k = 0; k < n; ++k) {
      s += g.value_at(walker.state_data(), walker.dim()) - center;
      walker.step();
    }
    sums[static_cast<std::size_t>(r)] = s;
  });

  MdpReport report;
  report.beta = beta;
  report.n = n;
  report.replicas = replicas;
  report.gamma_sq = gamma_sq;
  report.a_n = std::pow(static_cast<double>(n), beta);
  const double scale = report.a_n / static_cast<double>(n);
  const double outer = static_cast<double>(n) / (report.a_n * report.a_n);
  const double R = static_cast<double>(replicas);

  // log mean exp over an index subset, log-sum-exp reduced.
  auto log_mean_exp = [&](double z, int skip) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < replicas; ++r) {
      if (r == skip) continue;
      mx = std::max(mx, scale * z * sums[static_cast<std::size_t>(r)]);
    }
    double acc = 0.0;
    for (int r = 0; r < replicas; ++r) {
      if (r == skip) continue;
      acc += std::exp(scale * z * sums[static_cast<std::size_t>(r)] - mx);
    }
    double count = skip < 0 ? R : R - 1.0;
    return mx + std::log(acc / count);
  };

  for (double z : z_grid) {
    report.z.push_back(z);
    report.target.push_back(0.5 * z * z * gamma_sq);
    // The log-sum-exp reduction keeps the arithmetic finite; the flag records
    // that a naive exponential moment would have left the double range, a
    // hint that the z grid is too wide for this n.
    bool overflow = false;
    for (int r = 0; r < replicas && !overflow; ++r) {
      if (std::abs(scale * z * sums[static_cast<std::size_t>(r)]) > 700.0) overflow = true;
    }
    report.overflowed.push_back(overflow);
    double lam = outer * log_mean_exp(z, -1);
    report.lambda_hat.push_back(lam);
    // Jackknife over replicas.
    std::vector<double> loo(static_cast<std::size_t>(replicas), 0.0);
    double loo_mean = 0.0;
    for (int r = 0; r < replicas; ++r) {
      loo[static_cast<std::size_t>(r)] = outer * log_mean_exp(z, r);
      loo_mean += loo[static_cast<std::size_t>(r)];
    }
    loo_mean /= R;
    double var = 0.0;
    for (double v : loo) var += (v - loo_mean) * (v - loo_mean);
    var *= (R - 1.0) / R;
    report.jackknife_se.push_back(std::sqrt(var));
  }
  return report;
}

double rate_function(double gamma_sq, double y) {
  if (gamma_sq < 0.0) throw StructuralError("rate_function: negative variance");
  if (gamma_sq > 0.0) return y * y / (2.0 * gamma_sq);
  return y == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

}  // namespace qtraj
