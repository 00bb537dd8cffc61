#pragma once

namespace secomm {

/// One soft pair constraint: nodes i and j should agree (s near 1) or
/// disagree (s near 0) in their community memberships. Always i < j.
struct PairConstraint {
  int i = 0;
  int j = 0;
  double s = 0.0;
};

}  // namespace secomm
