#include "support.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace qtraj::testing {

namespace {

struct TreeSolver {
  int n, m;
  const std::vector<double>* supply;
  const std::vector<double>* demand;
  const std::vector<std::vector<double>>* cost;
  std::vector<int> chosen;
  double best = std::numeric_limits<double>::infinity();

  int nodes() const { return n + m; }

  // Solve the flows on a spanning tree by repeatedly peeling leaves.
  // Balances: supply nodes hold mass to send, demand nodes mass to receive;
  // a leaf's single live edge must carry exactly its balance.
  void evaluate() {
    std::vector<double> balance(static_cast<std::size_t>(nodes()));
    for (int i = 0; i < n; ++i) {
      balance[static_cast<std::size_t>(i)] = (*supply)[static_cast<std::size_t>(i)];
    }
    for (int j = 0; j < m; ++j) {
      balance[static_cast<std::size_t>(n + j)] = (*demand)[static_cast<std::size_t>(j)];
    }
    std::vector<std::vector<std::pair<int, int>>> adj(static_cast<std::size_t>(nodes()));
    for (std::size_t e = 0; e < chosen.size(); ++e) {
      int i = chosen[e] / m;
      int j = chosen[e] % m;
      adj[static_cast<std::size_t>(i)].push_back({n + j, static_cast<int>(e)});
      adj[static_cast<std::size_t>(n + j)].push_back({i, static_cast<int>(e)});
    }
    std::vector<int> degree(static_cast<std::size_t>(nodes()));
    for (int v = 0; v < nodes(); ++v) {
      degree[static_cast<std::size_t>(v)] = static_cast<int>(adj[static_cast<std::size_t>(v)].size());
      if (degree[static_cast<std::size_t>(v)] == 0) return;  // disconnected node
    }
    std::vector<bool> edge_done(chosen.size(), false);
    std::vector<double> flow(chosen.size(), 0.0);
    std::vector<int> stack;
    for (int v = 0; v < nodes(); ++v) {
      if (degree[static_cast<std::size_t>(v)] == 1) stack.push_back(v);
    }
    std::size_t resolved = 0;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      int live_edge = -1;
      int other = -1;
      for (auto [u, e] : adj[static_cast<std::size_t>(v)]) {
        if (!edge_done[static_cast<std::size_t>(e)]) {
          live_edge = e;
          other = u;
          break;
        }
      }
      if (live_edge < 0) continue;
      double f = balance[static_cast<std::size_t>(v)];
      flow[static_cast<std::size_t>(live_edge)] = f;
      balance[static_cast<std::size_t>(v)] = 0.0;
      balance[static_cast<std::size_t>(other)] -= f;
      edge_done[static_cast<std::size_t>(live_edge)] = true;
      --degree[static_cast<std::size_t>(v)];
      ++resolved;
      if (--degree[static_cast<std::size_t>(other)] == 1) stack.push_back(other);
    }
    if (resolved != chosen.size()) return;  // cycle somewhere: not a tree
    double total = 0.0;
    for (std::size_t e = 0; e < chosen.size(); ++e) {
      if (flow[e] < -1e-12) return;  // infeasible basis
      int i = chosen[e] / m;
      int j = chosen[e] % m;
      total += flow[e] * (*cost)[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    best = std::min(best, total);
  }

  void recurse(int next_edge, int needed) {
    if (needed == 0) {
      evaluate();
      return;
    }
    if (n * m - next_edge < needed) return;
    recurse(next_edge + 1, needed);
    chosen.push_back(next_edge);
    recurse(next_edge + 1, needed - 1);
    chosen.pop_back();
  }
};

}  // namespace

double brute_force_transport(const std::vector<double>& supply, const std::vector<double>& demand,
                             const std::vector<std::vector<double>>& cost) {
  TreeSolver solver;
  solver.n = static_cast<int>(supply.size());
  solver.m = static_cast<int>(demand.size());
  solver.supply = &supply;
  solver.demand = &demand;
  solver.cost = &cost;
  solver.recurse(0, solver.n + solver.m - 1);
  return solver.best;
}

}  // namespace qtraj::testing
