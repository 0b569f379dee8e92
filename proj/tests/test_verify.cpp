#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "specscale/specscale.hpp"

using namespace specscale;

namespace {

ToyLM fixed(std::vector<double> row) {
    const int v = static_cast<int>(row.size());
    return ToyLM::from_function(v, 0, [&](std::span<const Token>) { return row; });
}

/// Empirical distribution of the first `length` committed tokens.
std::map<std::vector<Token>, double> empirical(const ToyLM& target, const ToyLM& draft, const TreeParams& p,
                                                int length, int runs, std::uint64_t seed) {
    std::map<std::vector<Token>, double> out;
    for (int r = 0; r < runs; ++r) {
        const auto res = run_decode(target, draft, {}, length, p, DraftMode::Sampled,
                                    CounterRng::derive(seed, static_cast<std::uint64_t>(r)));
        out[std::vector<Token>(res.tokens.begin(), res.tokens.begin() + length)] += 1.0 / runs;
    }
    return out;
}

}  // namespace

TEST(VerifyGreedy, IdenticalModelsAcceptWholeChain) {
    std::mt19937_64 gen(1);
    const auto lm = oracle::random_lm(gen, 4, 1);
    for (int d = 1; d <= 5; ++d) {
        const auto tree = build_tree(lm, {}, {2, d, 64}, DraftMode::Greedy, 0);
        const auto out = verify_greedy(lm, {}, tree);
        EXPECT_EQ(out.accepted_count, d + 1);
        EXPECT_FALSE(out.rejected_at.has_value());
        EXPECT_EQ(out.tokens, oracle::greedy_decode(lm, {}, d + 1));
    }
}

TEST(VerifyGreedy, MissAtRootCommitsReplacementOnly) {
    const auto target = fixed({0.1, 0.2, 0.7});
    const auto draft = fixed({0.5, 0.4, 0.1});
    const auto tree = build_tree(draft, {}, {2, 3, 10}, DraftMode::Greedy, 0);
    const auto out = verify_greedy(target, {}, tree);
    EXPECT_EQ(out.accepted_count, 1);
    EXPECT_EQ(out.tokens, std::vector<Token>{2});
    EXPECT_EQ(out.rejected_at, 0);
    EXPECT_EQ(out.replacement, 2);
}

TEST(VerifyGreedy, ArgmaxTiesGoToLowestToken) {
    const std::vector<double> p{0.4, 0.4, 0.2};
    EXPECT_EQ(argmax_token(p), 0);
}

TEST(VerifyGreedy, CommitsPrefixOfTargetGreedyDecode) {
    std::mt19937_64 gen(2);
    for (int trial = 0; trial < 50; ++trial) {
        const auto target = oracle::random_lm(gen, 3, 1);
        const auto draft = oracle::random_lm(gen, 3, 1);
        const std::vector<Token> prefix{static_cast<Token>(trial % 3)};
        const auto tree = build_tree(draft, prefix, {2, 4, 10}, DraftMode::Greedy, 0);
        const auto out = verify_greedy(target, prefix, tree);
        EXPECT_EQ(out.tokens, oracle::greedy_decode(target, prefix, out.accepted_count));
    }
}

TEST(VerifySampled, HandCalculatedTwoTokenCase) {
    const auto target = fixed({0.5, 0.5});
    const auto draft = fixed({1.0, 0.0});
    const auto tree = build_tree(draft, {}, {1, 1, 1}, DraftMode::Sampled, 0);
    ASSERT_EQ(tree.size(), 2u);
    ASSERT_EQ(tree.nodes[1].token, 0);
    int zeros = 0, rejections = 0;
    const int n = 40000;
    for (int s = 0; s < n; ++s) {
        const auto out = verify_sampled(target, {}, tree, static_cast<std::uint64_t>(s));
        if (out.tokens[0] == 0) {
            ++zeros;
            EXPECT_EQ(out.accepted_count, 2);
        } else {
            ++rejections;
            EXPECT_EQ(out.replacement, 1);
            EXPECT_EQ(out.accepted_count, 1);
        }
    }
    EXPECT_NEAR(double(zeros) / n, 0.5, 0.01);
    EXPECT_EQ(zeros + rejections, n);
}

TEST(VerifySampled, IdenticalModelsAlwaysAccept) {
    std::mt19937_64 gen(4);
    const auto lm = oracle::random_lm(gen, 4, 1);
    for (std::uint64_t s = 0; s < 500; ++s) {
        const auto tree = build_tree(lm, {}, {1, 3, 3}, DraftMode::Sampled, s);
        EXPECT_EQ(verify_sampled(lm, {}, tree, s + 1).accepted_count, 4);
    }
}

TEST(VerifySampled, ResidualDistribution) {
    const std::vector<double> p{0.5, 0.3, 0.2}, q{0.2, 0.6, 0.2};
    const auto r = residual_distribution(p, q);
    EXPECT_DOUBLE_EQ(r[0], 1.0);
    EXPECT_DOUBLE_EQ(r[1], 0.0);
    EXPECT_THROW(residual_distribution(p, p), InvariantViolation);
}

TEST(VerifySampled, ZeroDraftProbabilityIsAnInvariantViolation) {
    const auto target = fixed({0.5, 0.5});
    auto tree = build_tree(fixed({0.5, 0.5}), {}, {1, 1, 1}, DraftMode::Sampled, 0);
    tree.nodes[1].draft_prob = 0.0;
    EXPECT_THROW(verify_sampled(target, {}, tree, 0), ZeroDraftProb);
}

TEST(VerifySampled, ChainOutputMatchesTarget) {
    std::mt19937_64 gen(8);
    const auto target = oracle::random_lm(gen, 3, 1);
    const auto draft = oracle::random_lm(gen, 3, 1);
    const auto exact = oracle::sequence_distribution(target, {}, 2);
    const auto emp = empirical(target, draft, {1, 2, 2}, 2, 30000, 77);
    EXPECT_LT(oracle::total_variation(exact, emp), 0.02);
}

TEST(VerifySampled, BranchingTreeOutputMatchesTarget) {
    std::mt19937_64 gen(9);
    const auto target = oracle::random_lm(gen, 3, 1);
    const auto draft = oracle::random_lm(gen, 3, 1);
    const auto exact = oracle::sequence_distribution(target, {}, 2);
    const auto emp = empirical(target, draft, {2, 2, 5}, 2, 30000, 78);
    EXPECT_LT(oracle::total_variation(exact, emp), 0.02);
}
