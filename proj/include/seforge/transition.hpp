#pragma once

#include <cstddef>
#include <vector>

namespace seforge {

/// One interaction (s, a, r, s', terminal).
///
/// `terminal` is set only on physical termination; time limits and the fixed
/// horizon of synthetic episodes leave it false so the bootstrap continues.
struct Transition {
  std::vector<double> state;
  std::size_t action = 0;
  double reward = 0.0;
  std::vector<double> next_state;
  bool terminal = false;
  /// Relaxed action actually fed to the critic by actor-critic agents; empty
  /// means one-hot(action).
  std::vector<double> soft_action;
};

}  // namespace seforge
