#pragma once

#include <iosfwd>

namespace rsmc {

// Runs the library's invariant suite (distribution laws, mesh law, weight
// identities, estimator symmetries, oracle cross-checks) and prints one
// PASS/FAIL line per check.  quick mode shrinks the sample counts.
// Returns the number of failed checks.
int run_validation(bool quick, std::ostream& out);

}  // namespace rsmc
