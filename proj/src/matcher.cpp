#include "ccmatch/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ccmatch/errors.hpp"

namespace ccm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Index-based perturbation for deterministic tie-breaking among cost-equal
// optima. Small enough that it never flips a strict cost ordering at the
// problem sizes this artifact handles; reported objectives are unperturbed.
constexpr double kTieEps = 1e-12;
constexpr double kObjTol = 1e-9;

struct Costs {
    int n = 0, m = 0;
    const SimilarityMatrix* sim = nullptr;

    double raw(int i, int j) const { return 1.0 - sim->at(i, j); }
    double perturbed(int i, int j) const {
        return raw(i, j) + kTieEps * (static_cast<double>(i) * m + j);
    }
};

std::int64_t total_count(const std::vector<std::int64_t>& counts) {
    return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

void check_problem(const MatchingProblem& p) {
    if (static_cast<int>(p.counts.size()) != p.similarity.n_categories)
        throw input_error("matching problem: counts length does not match similarity columns");
    for (std::int64_t c : p.counts)
        if (c < 0) throw input_error("matching problem: negative category count");
}

Assignment finish(const Costs& costs, std::vector<std::pair<int, int>> pairs,
                  AssignmentRegime regime) {
    std::sort(pairs.begin(), pairs.end());
    double obj = 0.0;
    for (const auto& [i, j] : pairs) obj += costs.raw(i, j);
    return Assignment{std::move(pairs), obj, regime};
}

// Successive shortest augmenting paths on a condensed residual network whose
// nodes are the categories plus a free-mask pool. Masks assigned to the same
// category are interchangeable, so the shortest residual path between two
// categories is the cheapest single-mask reassignment; each augmentation
// grows one category still below its quota and preserves optimality of the
// partial assignment.
std::vector<std::pair<int, int>> solve_count_exact(const Costs& costs,
                                                   const std::vector<std::int64_t>& counts) {
    const int n = costs.n, m = costs.m;
    std::vector<int> assign(n, -1);
    std::vector<std::int64_t> remaining = counts;
    std::int64_t total = total_count(counts);

    std::vector<double> src_cost(m), dist(m);
    std::vector<int> src_mask(m);
    std::vector<double> edge_cost(static_cast<std::size_t>(m) * m);
    std::vector<int> edge_mask(static_cast<std::size_t>(m) * m);
    std::vector<std::pair<int, int>> parent(m);  // (prev category or -1 for pool, mask moved)

    for (std::int64_t step = 0; step < total; ++step) {
        std::fill(src_cost.begin(), src_cost.end(), kInf);
        std::fill(edge_cost.begin(), edge_cost.end(), kInf);
        for (int i = 0; i < n; ++i) {
            int a = assign[i];
            if (a < 0) {
                for (int j = 0; j < m; ++j) {
                    double c = costs.perturbed(i, j);
                    if (c < src_cost[j]) { src_cost[j] = c; src_mask[j] = i; }
                }
            } else {
                double base = costs.perturbed(i, a);
                for (int j = 0; j < m; ++j) {
                    if (j == a) continue;
                    double c = costs.perturbed(i, j) - base;
                    std::size_t e = static_cast<std::size_t>(a) * m + j;
                    if (c < edge_cost[e]) { edge_cost[e] = c; edge_mask[e] = i; }
                }
            }
        }

        for (int j = 0; j < m; ++j) {
            dist[j] = src_cost[j];
            parent[j] = {-1, src_mask[j]};
        }
        // Bellman-Ford; paths visit each category at most once, so m rounds
        // suffice. Reassignment deltas can be negative but the residual
        // network of an optimal partial assignment has no negative cycles.
        for (int round = 0; round < m; ++round) {
            bool changed = false;
            for (int j1 = 0; j1 < m; ++j1) {
                if (dist[j1] == kInf) continue;
                for (int j2 = 0; j2 < m; ++j2) {
                    std::size_t e = static_cast<std::size_t>(j1) * m + j2;
                    if (edge_cost[e] == kInf) continue;
                    double d = dist[j1] + edge_cost[e];
                    if (d < dist[j2]) {
                        dist[j2] = d;
                        parent[j2] = {j1, edge_mask[e]};
                        changed = true;
                    }
                }
            }
            if (!changed) break;
        }

        int target = -1;
        for (int j = 0; j < m; ++j)
            if (remaining[j] > 0 && dist[j] < kInf && (target < 0 || dist[j] < dist[target]))
                target = j;
        if (target < 0)
            throw internal_error("count-exact matching: no augmenting path (infeasible problem)");

        int j = target;
        while (j >= 0) {
            auto [prev, mask] = parent[j];
            assign[mask] = j;
            j = prev;
        }
        --remaining[target];
    }

    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(total));
    for (int i = 0; i < n; ++i)
        if (assign[i] >= 0) pairs.emplace_back(i, assign[i]);
    return pairs;
}

}  // namespace

Assignment solve_matching(const MatchingProblem& problem) {
    check_problem(problem);
    const int n = problem.similarity.n_masks;
    const int m = problem.similarity.n_categories;
    Costs costs{n, m, &problem.similarity};
    std::int64_t total = total_count(problem.counts);

    if (n >= total) {
        if (total == 0) return Assignment{{}, 0.0, AssignmentRegime::CountExact};
        return finish(costs, solve_count_exact(costs, problem.counts),
                      AssignmentRegime::CountExact);
    }

    // All-proposals regime: category capacities are vacuous, so each mask
    // independently takes its cheapest category.
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        int best = 0;
        for (int j = 1; j < m; ++j)
            if (costs.perturbed(i, j) < costs.perturbed(i, best)) best = j;
        pairs.emplace_back(i, best);
    }
    return finish(costs, std::move(pairs), AssignmentRegime::AllProposals);
}

Assignment brute_force_matching(const MatchingProblem& problem) {
    check_problem(problem);
    const int n = problem.similarity.n_masks;
    const int m = problem.similarity.n_categories;
    if (n > 10 || m > 4)
        throw usage_error("brute_force_matching: refusing problem larger than N=10, M=4");
    Costs costs{n, m, &problem.similarity};
    std::int64_t total = total_count(problem.counts);
    bool count_exact = n >= total;

    if (count_exact && total == 0) return Assignment{{}, 0.0, AssignmentRegime::CountExact};

    std::vector<int> choice(n, -1);
    std::vector<std::int64_t> used(m, 0);
    std::vector<int> best;
    double best_pobj = kInf;

    auto feasible = [&]() {
        if (count_exact) {
            for (int j = 0; j < m; ++j)
                if (used[j] != problem.counts[j]) return false;
        } else {
            for (int i = 0; i < n; ++i)
                if (choice[i] < 0) return false;
        }
        return true;
    };

    auto recurse = [&](auto&& self, int i, double pobj) -> void {
        if (i == n) {
            if (feasible() && pobj < best_pobj) {
                best_pobj = pobj;
                best = choice;
            }
            return;
        }
        if (count_exact) {
            choice[i] = -1;
            self(self, i + 1, pobj);
        }
        for (int j = 0; j < m; ++j) {
            if (count_exact && used[j] >= problem.counts[j]) continue;
            choice[i] = j;
            ++used[j];
            self(self, i + 1, pobj + costs.perturbed(i, j));
            --used[j];
            choice[i] = -1;
        }
    };
    recurse(recurse, 0, 0.0);

    if (best_pobj == kInf)
        throw internal_error("brute_force_matching: no feasible assignment found");

    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i)
        if (best[i] >= 0) pairs.emplace_back(i, best[i]);
    return finish(costs, std::move(pairs),
                  count_exact ? AssignmentRegime::CountExact : AssignmentRegime::AllProposals);
}

std::vector<std::string> validate_assignment(const MatchingProblem& problem,
                                             const Assignment& assignment) {
    std::vector<std::string> violations;
    const int n = problem.similarity.n_masks;
    const int m = problem.similarity.n_categories;
    std::int64_t total = total_count(problem.counts);

    AssignmentRegime expected =
        n >= total ? AssignmentRegime::CountExact : AssignmentRegime::AllProposals;
    if (assignment.regime != expected)
        violations.push_back("regime does not match the problem's proposal/count balance");

    std::vector<int> mask_uses(n, 0);
    std::vector<std::int64_t> cat_uses(m, 0);
    bool indices_ok = true;
    for (const auto& [i, j] : assignment.pairs) {
        if (i < 0 || i >= n || j < 0 || j >= m) {
            violations.push_back("pair (" + std::to_string(i) + "," + std::to_string(j) +
                                 ") is out of bounds");
            indices_ok = false;
            continue;
        }
        if (++mask_uses[i] == 2)
            violations.push_back("mask " + std::to_string(i) + " assigned more than once");
        ++cat_uses[j];
    }

    if (assignment.regime == AssignmentRegime::CountExact) {
        for (int j = 0; j < m; ++j)
            if (cat_uses[j] != problem.counts[j])
                violations.push_back("category " + std::to_string(j) + " received " +
                                     std::to_string(cat_uses[j]) + " masks, expected " +
                                     std::to_string(problem.counts[j]));
    } else {
        if (static_cast<int>(assignment.pairs.size()) != n)
            violations.push_back("all-proposals regime requires exactly " + std::to_string(n) +
                                 " pairs, got " + std::to_string(assignment.pairs.size()));
    }

    if (indices_ok) {
        double obj = 0.0;
        for (const auto& [i, j] : assignment.pairs) obj += 1.0 - problem.similarity.at(i, j);
        if (std::abs(obj - assignment.objective) > kObjTol)
            violations.push_back("stored objective " + std::to_string(assignment.objective) +
                                 " differs from recomputed " + std::to_string(obj));
    }
    return violations;
}

}  // namespace ccm
