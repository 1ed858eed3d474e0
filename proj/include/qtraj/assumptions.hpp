#pragma once

#include <optional>
#include <string>

#include "qtraj/kraus.hpp"

namespace qtraj {

/// Spectrum of the vectorized average-evolution channel (a d^2 x d^2 matrix).
struct ChannelSpectrum {
  Eigen::VectorXcd eigenvalues;
  int fixed_space_dim = 0;    // eigenvalues within 1e-8 of 1
  int peripheral_count = 0;   // eigenvalues with |lambda| >= 1 - 1e-8
};

inline constexpr double kSpectralTol = 1e-8;

/// sum_i conj(A_i) (x) A_i acting on column-stacked matrices.
Matrix vectorized_channel(const KrausFamily& family);

ChannelSpectrum channel_spectrum(const KrausFamily& family);

/// Unique fixed density matrix of the channel. Throws NonUniqueFixedPointError
/// when the eigenvalue-1 space has dimension > 1 (an (Erg) failure).
DensityMatrix compute_rho_inv(const KrausFamily& family);

struct ErgResult {
  bool holds = false;
  int minimal_subspace_dim = 0;  // rank of rho_inv when holds
};

ErgResult check_erg(const KrausFamily& family);

enum class PurStatus { yes, no, unknown };

struct PurResult {
  PurStatus status = PurStatus::unknown;
  std::optional<Word> witness_word;       // set on "yes": shortest word whose
                                          // W^*W is not a scalar
  std::optional<Matrix> witness_projector;  // set on "no": rank>=2 projector on
                                            // which every W^*W compresses to a
                                            // scalar
  int levels_searched = 0;
  bool generators_stabilized = false;
};

/// Decides the purification assumption by generating the word operators
/// W_w^* W_w up to length `max_word_len` (default d^2), closing their real
/// span under one-letter extension, and analyzing the span's commutant.
/// Exact for d = 2; returns `unknown` when the search is inconclusive.
PurResult check_pur(const KrausFamily& family, int max_word_len = 0);

/// Number of peripheral eigenvalues of the channel; requires (Erg).
int estimate_period(const KrausFamily& family);

struct AssumptionReport {
  PurStatus pur = PurStatus::unknown;
  std::optional<Word> pur_witness_word;        // on "yes"
  std::optional<Matrix> pur_witness_projector;  // on "no"
  bool erg = false;
  std::optional<DensityMatrix> rho_inv;
  int minimal_subspace_dim = 0;
  int period = 0;

  bool all_hold() const { return erg && pur == PurStatus::yes; }
};

AssumptionReport run_assumption_checks(const KrausFamily& family);

std::string to_string(PurStatus s);

}  // namespace qtraj
