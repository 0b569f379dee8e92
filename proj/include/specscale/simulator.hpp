#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "specscale/draft_tree.hpp"
#include "specscale/error.hpp"
#include "specscale/format.hpp"
#include "specscale/rng.hpp"
#include "specscale/toy_lm.hpp"
#include "specscale/verify.hpp"

namespace specscale {

struct DecodeResult {
    double acceptance_rate = 0;      // mean accepted_count per cycle
    std::vector<Token> tokens;       // committed tokens, prefix excluded
    std::vector<VerifyOutcome> per_cycle;
};

inline DraftMode parse_draft_mode(std::string_view s) {
    if (s == "greedy") return DraftMode::Greedy;
    if (s == "sampled") return DraftMode::Sampled;
    throw ParseError("mode must be greedy or sampled, got '" + std::string(s) + "'");
}

/// Draft-then-verify loop. Cycle c drafts with stream derive(seed, 2c) and
/// verifies with derive(seed, 2c + 1). Greedy mode pairs a greedy tree with
/// argmax verification; Sampled mode pairs a sampled tree with stochastic
/// verification.
inline DecodeResult run_decode(const ToyLM& target, const ToyLM& draft, std::span<const Token> prefix, int cycles,
                               const TreeParams& params, DraftMode mode, std::uint64_t seed) {
    if (cycles < 1) throw ValidationError("cycles", "must be >= 1");
    if (target.vocab() != draft.vocab()) throw ValidationError("vocab", "target and draft vocabularies differ");

    DecodeResult result;
    std::vector<Token> ctx(prefix.begin(), prefix.end());
    long total = 0;
    for (int c = 0; c < cycles; ++c) {
        const auto cycle = static_cast<std::uint64_t>(c);
        const DraftTree tree = build_tree(draft, ctx, params, mode, CounterRng::derive(seed, 2 * cycle));
        VerifyOutcome outcome = mode == DraftMode::Greedy
                                    ? verify_greedy(target, ctx, tree)
                                    : verify_sampled(target, ctx, tree, CounterRng::derive(seed, 2 * cycle + 1));
        if (outcome.accepted_count < 1 || outcome.accepted_count > tree.max_depth() + 1) {
            throw InvariantViolation("accepted_count " + std::to_string(outcome.accepted_count) +
                                     " outside [1, max_depth + 1]");
        }
        ctx.insert(ctx.end(), outcome.tokens.begin(), outcome.tokens.end());
        result.tokens.insert(result.tokens.end(), outcome.tokens.begin(), outcome.tokens.end());
        total += outcome.accepted_count;
        result.per_cycle.push_back(std::move(outcome));
    }
    result.acceptance_rate = static_cast<double>(total) / cycles;
    return result;
}

inline constexpr std::string_view kSimCsvHeader = "cycle,accepted_count,rejected_at,replacement_token";

/// Missing rejection/replacement (a bonus token ended the cycle) is an empty field.
inline std::string simulation_csv(const DecodeResult& r) {
    std::string out(kSimCsvHeader);
    out += "\n";
    for (std::size_t i = 0; i < r.per_cycle.size(); ++i) {
        const auto& o = r.per_cycle[i];
        out += std::to_string(i) + "," + std::to_string(o.accepted_count) + "," +
               (o.rejected_at ? std::to_string(*o.rejected_at) : "") + "," +
               (o.replacement ? std::to_string(*o.replacement) : "") + "\n";
    }
    return out;
}

}  // namespace specscale
