#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "ccmatch/errors.hpp"
#include "ccmatch/matcher.hpp"

using namespace ccm;

namespace {

MatchingProblem make_problem(const std::vector<std::vector<double>>& s,
                             std::vector<std::int64_t> counts) {
    int n = static_cast<int>(s.size());
    int m = n == 0 ? static_cast<int>(counts.size()) : static_cast<int>(s[0].size());
    MatchingProblem p;
    p.similarity = SimilarityMatrix::zeros(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) p.similarity.at(i, j) = s[i][j];
    p.counts = std::move(counts);
    return p;
}

MatchingProblem random_problem(std::mt19937& rng, int max_n = 8, int max_m = 3) {
    std::uniform_real_distribution<double> sim(-1.0, 1.0);
    int n = 1 + static_cast<int>(rng() % max_n);
    int m = 1 + static_cast<int>(rng() % max_m);
    MatchingProblem p;
    p.similarity = SimilarityMatrix::zeros(n, m);
    for (auto& e : p.similarity.entries) e = sim(rng);
    for (int j = 0; j < m; ++j) p.counts.push_back(static_cast<std::int64_t>(rng() % (n + 1)));
    return p;
}

}  // namespace

TEST_CASE("single-cell problem") {
    auto p = make_problem({{0.9}}, {1});
    Assignment a = solve_matching(p);
    CHECK(a.regime == AssignmentRegime::CountExact);
    CHECK(a.pairs == std::vector<std::pair<int, int>>{{0, 0}});
    CHECK(a.objective == doctest::Approx(0.1));
    CHECK(validate_assignment(p, a).empty());
}

TEST_CASE("3x2 count-exact optimum") {
    auto p = make_problem({{0.9, 0.1}, {0.2, 0.8}, {0.5, 0.5}}, {1, 1});
    Assignment a = solve_matching(p);
    CHECK(a.regime == AssignmentRegime::CountExact);
    CHECK(a.pairs == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}});
    CHECK(a.objective == doctest::Approx(0.3));

    Assignment oracle = brute_force_matching(p);
    CHECK(oracle.pairs == a.pairs);
    CHECK(oracle.objective == doctest::Approx(a.objective));
}

TEST_CASE("all-proposals regime when counts exceed proposals") {
    auto p = make_problem({{0.3, 0.7}}, {2, 1});
    Assignment a = solve_matching(p);
    CHECK(a.regime == AssignmentRegime::AllProposals);
    CHECK(a.pairs == std::vector<std::pair<int, int>>{{0, 1}});
    CHECK(a.objective == doctest::Approx(0.3));
    CHECK(validate_assignment(p, a).empty());
    CHECK(brute_force_matching(p).pairs == a.pairs);
}

TEST_CASE("all-zero counts give the empty assignment") {
    auto p = make_problem({{0.5, 0.5}, {0.1, 0.9}}, {0, 0});
    Assignment a = solve_matching(p);
    CHECK(a.pairs.empty());
    CHECK(a.objective == 0.0);
    CHECK(validate_assignment(p, a).empty());
}

TEST_CASE("zero proposals give the empty assignment") {
    MatchingProblem p;
    p.similarity = SimilarityMatrix::zeros(0, 2);
    p.counts = {0, 0};
    Assignment a = solve_matching(p);
    CHECK(a.pairs.empty());
    CHECK(a.objective == 0.0);
}

TEST_CASE("brute force unique feasible point") {
    auto p = make_problem({{0.5, 0.5}}, {1, 0});
    Assignment a = brute_force_matching(p);
    CHECK(a.pairs == std::vector<std::pair<int, int>>{{0, 0}});
}

TEST_CASE("brute force refuses oversized problems") {
    MatchingProblem p;
    p.similarity = SimilarityMatrix::zeros(11, 2);
    p.counts = {1, 1};
    CHECK_THROWS_AS(brute_force_matching(p), Error);
}

TEST_CASE("validate_assignment flags constructed violations") {
    auto p = make_problem({{0.9, 0.1}, {0.2, 0.8}, {0.5, 0.5}}, {1, 1});
    Assignment good = solve_matching(p);
    CHECK(validate_assignment(p, good).empty());

    Assignment dup = good;
    dup.pairs = {{0, 0}, {0, 1}};
    CHECK(!validate_assignment(p, dup).empty());

    Assignment short_cat = good;
    short_cat.pairs = {{0, 0}};
    CHECK(!validate_assignment(p, short_cat).empty());

    Assignment oob = good;
    oob.pairs = {{0, 0}, {7, 1}};
    CHECK(!validate_assignment(p, oob).empty());

    Assignment wrong_obj = good;
    wrong_obj.objective += 1.0;
    CHECK(!validate_assignment(p, wrong_obj).empty());
}

TEST_CASE("oracle equivalence on random problems") {
    std::mt19937 rng(12345);
    for (int trial = 0; trial < 400; ++trial) {
        MatchingProblem p = random_problem(rng);
        Assignment fast = solve_matching(p);
        Assignment slow = brute_force_matching(p);
        CAPTURE(trial);
        CHECK(std::abs(fast.objective - slow.objective) <= 1e-9);
        CHECK(validate_assignment(p, fast).empty());
        CHECK(validate_assignment(p, slow).empty());
        // identical pair sets when similarities are generic (ties measure-zero)
        CHECK(fast.pairs == slow.pairs);
    }
}

TEST_CASE("cardinality law") {
    std::mt19937 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        MatchingProblem p = random_problem(rng);
        std::int64_t total = 0;
        for (auto c : p.counts) total += c;
        Assignment a = solve_matching(p);
        if (p.similarity.n_masks >= total) {
            CHECK(a.regime == AssignmentRegime::CountExact);
            CHECK(static_cast<std::int64_t>(a.pairs.size()) == total);
        } else {
            CHECK(a.regime == AssignmentRegime::AllProposals);
            CHECK(static_cast<int>(a.pairs.size()) == p.similarity.n_masks);
        }
    }
}

TEST_CASE("additive shift invariance") {
    std::mt19937 rng(4242);
    std::uniform_real_distribution<double> shift_d(-0.5, 0.5);
    for (int trial = 0; trial < 100; ++trial) {
        MatchingProblem p = random_problem(rng);
        double c = shift_d(rng);
        MatchingProblem shifted = p;
        for (auto& e : shifted.similarity.entries) e += c;
        Assignment a = solve_matching(p);
        Assignment b = solve_matching(shifted);
        CHECK(a.pairs == b.pairs);
        CHECK(b.objective ==
              doctest::Approx(a.objective - c * static_cast<double>(a.pairs.size()))
                  .epsilon(1e-9));
    }
}

TEST_CASE("permutation equivariance of mask rows") {
    std::mt19937 rng(777);
    for (int trial = 0; trial < 50; ++trial) {
        MatchingProblem p = random_problem(rng);
        int n = p.similarity.n_masks;
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);

        MatchingProblem q = p;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < p.similarity.n_categories; ++j)
                q.similarity.at(perm[i], j) = p.similarity.at(i, j);

        Assignment a = solve_matching(p);
        Assignment b = solve_matching(q);
        std::vector<std::pair<int, int>> mapped;
        for (auto [i, j] : a.pairs) mapped.emplace_back(perm[i], j);
        std::sort(mapped.begin(), mapped.end());
        CHECK(mapped == b.pairs);  // random similarities are generically tie-free
        CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-9));
    }
}
