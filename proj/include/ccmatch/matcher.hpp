#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ccmatch/types.hpp"

namespace ccm {

// Counting-constrained assignment of N mask proposals to M categories.
struct MatchingProblem {
    SimilarityMatrix similarity;
    std::vector<std::int64_t> counts;  // one target count per category
};

enum class AssignmentRegime {
    CountExact,    // N >= sum(counts): each category receives exactly its count
    AllProposals,  // N <  sum(counts): every proposal is assigned somewhere
};

struct Assignment {
    std::vector<std::pair<int, int>> pairs;  // (mask index, category index), sorted
    double objective = 0.0;                  // sum over pairs of (1 - s_ij)
    AssignmentRegime regime = AssignmentRegime::CountExact;
};

// Exact solver. Minimizes sum (1 - s_ij) subject to: each mask used at most
// once, and either exact per-category counts (when N >= sum counts) or full
// proposal coverage otherwise. Reduces to min-cost flow on a bipartite
// network; the transportation structure makes the LP relaxation integral.
// Deterministic: cost-equal optima are ordered by an infinitesimal
// index-based perturbation, so identical inputs give identical outputs.
Assignment solve_matching(const MatchingProblem& problem);

// Exhaustive enumeration oracle; refuses problems beyond N=10, M=4.
// Same objective and tie-break rule as solve_matching.
Assignment brute_force_matching(const MatchingProblem& problem);

// Empty result iff the assignment is feasible for its regime and its stored
// objective matches the recomputed one within 1e-9.
std::vector<std::string> validate_assignment(const MatchingProblem& problem,
                                             const Assignment& assignment);

}  // namespace ccm
