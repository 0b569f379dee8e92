#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "specscale/draft_tree.hpp"
#include "specscale/error.hpp"
#include "specscale/rng.hpp"
#include "specscale/toy_lm.hpp"

namespace specscale {

class ZeroDraftProb : public InvariantViolation {
public:
    using InvariantViolation::InvariantViolation;
};

/// Tokens committed by one verification pass. The last token is either a
/// replacement (after a rejection) or a bonus token drawn past an accepted
/// leaf, so accepted_count >= 1.
struct VerifyOutcome {
    std::vector<Token> tokens;
    int accepted_count = 0;
    std::optional<int> rejected_at;  // depth level (0 = root's children) of the rejection
    std::optional<Token> replacement;

    int accepted_drafts() const { return accepted_count - 1; }
};

inline Token argmax_token(std::span<const double> p) {
    return static_cast<Token>(std::max_element(p.begin(), p.end()) - p.begin());
}

/// Temperature-0 verification: follow the child matching the target's
/// argmax at each level.
inline VerifyOutcome verify_greedy(const ToyLM& target, std::span<const Token> prefix, const DraftTree& tree) {
    VerifyOutcome out;
    std::vector<Token> ctx(prefix.begin(), prefix.end());
    int cur = 0;
    while (true) {
        const Token best = argmax_token(target.next(ctx));
        const auto& kids = tree.children[static_cast<std::size_t>(cur)];
        const auto hit = std::find_if(kids.begin(), kids.end(), [&](int k) {
            return tree.nodes[static_cast<std::size_t>(k)].token == best;
        });
        out.tokens.push_back(best);
        if (hit == kids.end()) {
            if (!kids.empty()) {
                out.rejected_at = tree.nodes[static_cast<std::size_t>(cur)].depth;
                out.replacement = best;
            }
            break;
        }
        ctx.push_back(best);
        cur = *hit;
    }
    out.accepted_count = static_cast<int>(out.tokens.size());
    return out;
}

/// Residual distribution norm(max(0, p - q)). Throws if it has no mass,
/// which cannot happen after a genuine rejection.
inline std::vector<double> residual_distribution(std::span<const double> p, std::span<const double> q) {
    std::vector<double> r(p.size());
    double mass = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        r[i] = std::max(0.0, p[i] - q[i]);
        mass += r[i];
    }
    if (!(mass > 0.0)) throw InvariantViolation("residual distribution has no mass after a rejection");
    for (double& v : r) v /= mass;
    return r;
}

/// Stochastic verification. Each child x of the current node is accepted
/// with probability min(1, p(x) / q(x)). After a rejection p becomes
/// norm(max(0, p - q)) and x is removed from q (renormalized) before the next
/// sibling is tried; if every sibling is rejected a replacement is drawn from
/// the final p. For trees drafted in Sampled mode the committed tokens follow
/// the target distribution exactly.
inline VerifyOutcome verify_sampled(const ToyLM& target, std::span<const Token> prefix, const DraftTree& tree,
                                    std::uint64_t seed) {
    CounterRng rng(seed);
    VerifyOutcome out;
    std::vector<Token> ctx(prefix.begin(), prefix.end());
    int cur = 0;
    while (true) {
        const auto target_row = target.next(ctx);
        std::vector<double> p(target_row.begin(), target_row.end());
        const auto& kids = tree.children[static_cast<std::size_t>(cur)];
        if (kids.empty()) {
            out.tokens.push_back(sample_index(p, rng));
            break;
        }
        std::vector<double> q = tree.draft_rows[static_cast<std::size_t>(cur)];
        if (q.size() != p.size()) throw InvariantViolation("verify_sampled: draft row missing for expanded node");

        int accepted = -1;
        for (int k : kids) {
            const auto& node = tree.nodes[static_cast<std::size_t>(k)];
            const auto x = static_cast<std::size_t>(node.token);
            if (!(node.draft_prob > 0.0) || !(q[x] > 0.0)) {
                throw ZeroDraftProb("draft probability is zero at node " + std::to_string(k));
            }
            const double accept = std::min(1.0, p[x] / q[x]);
            if (rng.next_double() < accept) {
                accepted = k;
                break;
            }
            p = residual_distribution(p, q);
            q[x] = 0.0;
            double rest = 0;
            for (double v : q) rest += v;
            if (rest > 0.0) {
                for (double& v : q) v /= rest;
            }
        }
        if (accepted < 0) {
            const Token t = sample_index(p, rng);
            out.tokens.push_back(t);
            out.rejected_at = tree.nodes[static_cast<std::size_t>(cur)].depth;
            out.replacement = t;
            break;
        }
        const Token t = tree.nodes[static_cast<std::size_t>(accepted)].token;
        out.tokens.push_back(t);
        ctx.push_back(t);
        cur = accepted;
    }
    out.accepted_count = static_cast<int>(out.tokens.size());
    return out;
}

}  // namespace specscale
