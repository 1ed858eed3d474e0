#pragma once

#include "qtraj/trajectory.hpp"

namespace qtraj {

/// State maximizing ||W x||^2: the top right-singular vector of W,
/// canonicalized. At a degenerate top singular value the decomposition's
/// deterministic ordering breaks the tie.
ProjectiveState mle_initial_estimator(const Matrix& w);

/// The evolved estimator sequence y_k = W_k . z_k for every prefix of the
/// word, with rescaled products throughout. Entry 0 corresponds to the empty
/// product.
std::vector<ProjectiveState> evolved_estimator(const KrausFamily& family, const Word& word);

}  // namespace qtraj
