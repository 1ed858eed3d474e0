#pragma once

#include <cmath>
#include <vector>

#include "qtraj/kernel.hpp"
#include "qtraj/measures.hpp"
#include "qtraj/reference.hpp"
#include "qtraj/trajectory.hpp"

namespace qtraj::testing {

inline TrajectoryConfig basic_config(const KrausFamily& family, const ProjectiveState& initial,
                                     long n, std::uint64_t seed, std::uint64_t replica = 0) {
  TrajectoryConfig cfg;
  cfg.family = family;
  cfg.initial_state = initial;
  cfg.n_steps = n;
  cfg.master_seed = seed;
  cfg.replica_index = replica;
  return cfg;
}

// All branch words of a given length (0-based letters).
inline std::vector<Word> all_words(int branches, int length) {
  std::vector<Word> words;
  Word w;
  w.letters.assign(static_cast<std::size_t>(length), 0);
  long total = 1;
  for (int i = 0; i < length; ++i) total *= branches;
  for (long code = 0; code < total; ++code) {
    long c = code;
    for (int i = 0; i < length; ++i) {
      w.letters[static_cast<std::size_t>(i)] = static_cast<int>(c % branches);
      c /= branches;
    }
    words.push_back(w);
  }
  return words;
}

// Brute-force (Pi^k f)(x) by walking every word, multiplying renormalized
// step weights. Independent of the merged-tree implementation.
inline double brute_force_pi_power(const KrausFamily& family, const StateFunction& f,
                                   const ProjectiveState& x, int k) {
  double acc = 0.0;
  for (const Word& w : all_words(family.branch_count(), k)) {
    ProjectiveState s = x;
    double weight = 1.0;
    bool dead = false;
    for (int letter : w.letters) {
      Vector moved = family.op(letter) * s.representative();
      double step = moved.squaredNorm();
      if (step < 1e-300) {
        dead = true;
        break;
      }
      weight *= step;
      s = ProjectiveState(std::move(moved));
    }
    if (!dead) acc += weight * f(s);
  }
  return acc;
}

// Exact one-step-per-word push-forward of a Dirac measure (for small n).
inline DiscreteMeasure brute_force_pushforward(const KrausFamily& family,
                                               const ProjectiveState& x, int n) {
  DiscreteMeasure out;
  for (const Word& w : all_words(family.branch_count(), n)) {
    ProjectiveState s = x;
    double weight = 1.0;
    bool dead = false;
    for (int letter : w.letters) {
      Vector moved = family.op(letter) * s.representative();
      double step = moved.squaredNorm();
      if (step < 1e-300) {
        dead = true;
        break;
      }
      weight *= step;
      s = ProjectiveState(std::move(moved));
    }
    if (!dead) out.add(s, weight);
  }
  return out;
}

// Exact transportation cost by enumerating the basic feasible solutions of
// the transport polytope (spanning trees of the bipartite support graph).
double brute_force_transport(const std::vector<double>& supply, const std::vector<double>& demand,
                             const std::vector<std::vector<double>>& cost);

inline double brute_force_wasserstein(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  std::vector<double> supply, demand;
  for (const auto& atom : a.atoms()) supply.push_back(atom.weight);
  for (const auto& atom : b.atoms()) demand.push_back(atom.weight);
  std::vector<std::vector<double>> cost(supply.size(), std::vector<double>(demand.size(), 0.0));
  for (std::size_t i = 0; i < supply.size(); ++i) {
    for (std::size_t j = 0; j < demand.size(); ++j) {
      cost[i][j] = metric_distance(a.atoms()[i].state, b.atoms()[j].state);
    }
  }
  return brute_force_transport(supply, demand, cost);
}

}  // namespace qtraj::testing
