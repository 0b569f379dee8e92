#pragma once

// Candidate token trees drafted from a ToyLM, and the ancestor attention
// mask used to verify every path in a single pass.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "specscale/error.hpp"
#include "specscale/rng.hpp"
#include "specscale/toy_lm.hpp"

namespace specscale {

inline constexpr int kNoParent = -1;

struct TreeNode {
    int id = 0;
    int parent = kNoParent;
    Token token = kBeginToken;  // root carries no token
    double draft_prob = 1.0;    // P_draft(token | prefix, ancestor path)
    double path_prob = 1.0;     // product of draft_prob along the path
    int depth = 0;
};

enum class DraftMode { Greedy, Sampled };

struct TreeParams {
    int top_c = 1;   // children per expanded node
    int depth = 1;   // maximum node depth
    int budget = 1;  // maximum non-root nodes (top_k)
};

/// Nodes are in breadth-first order: the root first, every parent before its
/// children, siblings in drafting order.
struct DraftTree {
    std::vector<TreeNode> nodes;
    std::vector<std::vector<int>> children;
    // Draft distribution each node's children were drawn from; empty for
    // nodes that were never expanded.
    std::vector<Distribution> draft_rows;
    int top_c = 1;

    std::size_t size() const { return nodes.size(); }

    int max_depth() const {
        int d = 0;
        for (const auto& n : nodes) d = std::max(d, n.depth);
        return d;
    }

    /// Number of root-to-leaf paths (M).
    int path_count() const {
        int leaves = 0;
        for (std::size_t i = 1; i < nodes.size(); ++i) leaves += children[i].empty() ? 1 : 0;
        return leaves;
    }

    std::vector<Token> path_tokens(int node) const {
        std::vector<Token> path;
        for (int n = node; n > 0; n = nodes[static_cast<std::size_t>(n)].parent) {
            path.push_back(nodes[static_cast<std::size_t>(n)].token);
        }
        std::reverse(path.begin(), path.end());
        return path;
    }
};

namespace detail {

struct ChildCandidate {
    Token token;
    double prob;
};

inline std::vector<ChildCandidate> draft_children(std::span<const double> row, int top_c, DraftMode mode,
                                                  CounterRng& rng) {
    std::vector<ChildCandidate> out;
    if (mode == DraftMode::Greedy) {
        std::vector<Token> order(row.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](Token a, Token b) {
            return row[static_cast<std::size_t>(a)] > row[static_cast<std::size_t>(b)];
        });
        for (Token t : order) {
            if (static_cast<int>(out.size()) == top_c) break;
            if (row[static_cast<std::size_t>(t)] > 0.0) out.push_back({t, row[static_cast<std::size_t>(t)]});
        }
        return out;
    }
    // Distinct draws without replacement, in draw order.
    std::vector<double> remaining(row.begin(), row.end());
    for (int i = 0; i < top_c; ++i) {
        if (std::none_of(remaining.begin(), remaining.end(), [](double w) { return w > 0.0; })) break;
        const int t = sample_index(remaining, rng);
        out.push_back({t, row[static_cast<std::size_t>(t)]});
        remaining[static_cast<std::size_t>(t)] = 0.0;
    }
    return out;
}

}  // namespace detail

/// Best-first drafting under a node budget. A node becomes eligible once its
/// parent is in the tree and its previous sibling (in drafting order) is too;
/// among eligible nodes the highest path probability is admitted next, ties
/// broken by (depth, token, parent). Since children never outrank parents,
/// in Greedy mode this keeps exactly the `budget` highest-path-probability
/// nodes. In Sampled mode kept siblings are always a prefix of the draw order.
inline DraftTree build_tree(const ToyLM& draft, std::span<const Token> prefix, const TreeParams& params,
                            DraftMode mode, std::uint64_t seed) {
    if (params.top_c < 1) throw ValidationError("top_c", "must be >= 1");
    if (params.depth < 1) throw ValidationError("depth", "must be >= 1");
    if (params.budget < 1) throw ValidationError("budget", "must be >= 1");
    if (params.top_c > draft.vocab()) {
        throw ValidationError("top_c", "exceeds vocabulary size " + std::to_string(draft.vocab()));
    }

    CounterRng rng(seed);

    struct Admitted {
        int parent;
        int sibling;
        Token token;
        double prob;
        double path_prob;
        int depth;
    };
    std::vector<Admitted> admitted{{kNoParent, 0, kBeginToken, 1.0, 1.0, 0}};
    std::vector<std::vector<detail::ChildCandidate>> drafted;
    std::vector<Distribution> rows;
    std::vector<Token> context(prefix.begin(), prefix.end());

    struct Candidate {
        double path_prob;
        int depth;
        Token token;
        int parent;
        int sibling;
    };
    auto worse = [](const Candidate& a, const Candidate& b) {
        if (a.path_prob != b.path_prob) return a.path_prob < b.path_prob;
        if (a.depth != b.depth) return a.depth > b.depth;
        if (a.token != b.token) return a.token > b.token;
        return a.parent > b.parent;
    };
    std::priority_queue<Candidate, std::vector<Candidate>, decltype(worse)> frontier(worse);

    auto path_of = [&](int idx) {
        std::vector<Token> path;
        for (int n = idx; n > 0; n = admitted[static_cast<std::size_t>(n)].parent) {
            path.push_back(admitted[static_cast<std::size_t>(n)].token);
        }
        std::reverse(path.begin(), path.end());
        return path;
    };
    auto push_child = [&](int parent, int sibling) {
        const auto& kids = drafted[static_cast<std::size_t>(parent)];
        if (sibling >= static_cast<int>(kids.size())) return;
        const auto& p = admitted[static_cast<std::size_t>(parent)];
        frontier.push({p.path_prob * kids[static_cast<std::size_t>(sibling)].prob, p.depth + 1,
                       kids[static_cast<std::size_t>(sibling)].token, parent, sibling});
    };
    auto expand = [&](int idx) {
        drafted.emplace_back();
        rows.emplace_back();
        if (admitted[static_cast<std::size_t>(idx)].depth >= params.depth) return;
        context.resize(prefix.size());
        const auto path = path_of(idx);
        context.insert(context.end(), path.begin(), path.end());
        const auto row = draft.next(context);
        rows.back().assign(row.begin(), row.end());
        drafted.back() = detail::draft_children(row, params.top_c, mode, rng);
        push_child(idx, 0);
    };

    expand(0);
    while (static_cast<int>(admitted.size()) - 1 < params.budget && !frontier.empty()) {
        const Candidate c = frontier.top();
        frontier.pop();
        const auto& kid = drafted[static_cast<std::size_t>(c.parent)][static_cast<std::size_t>(c.sibling)];
        admitted.push_back({c.parent, c.sibling, c.token, kid.prob, c.path_prob, c.depth});
        push_child(c.parent, c.sibling + 1);
        expand(static_cast<int>(admitted.size()) - 1);
    }

    // Renumber breadth-first.
    std::vector<std::vector<int>> kids_of(admitted.size());
    for (std::size_t i = 1; i < admitted.size(); ++i) kids_of[static_cast<std::size_t>(admitted[i].parent)].push_back(static_cast<int>(i));
    for (auto& k : kids_of) {
        std::sort(k.begin(), k.end(), [&](int a, int b) {
            return admitted[static_cast<std::size_t>(a)].sibling < admitted[static_cast<std::size_t>(b)].sibling;
        });
    }

    DraftTree tree;
    tree.top_c = params.top_c;
    std::vector<int> order{0};
    std::vector<int> new_id(admitted.size(), -1);
    new_id[0] = 0;
    for (std::size_t head = 0; head < order.size(); ++head) {
        for (int k : kids_of[static_cast<std::size_t>(order[head])]) {
            new_id[static_cast<std::size_t>(k)] = static_cast<int>(order.size());
            order.push_back(k);
        }
    }
    tree.nodes.resize(order.size());
    tree.children.resize(order.size());
    tree.draft_rows.resize(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto old = static_cast<std::size_t>(order[i]);
        const auto& a = admitted[old];
        TreeNode& n = tree.nodes[i];
        n.id = static_cast<int>(i);
        n.parent = a.parent == kNoParent ? kNoParent : new_id[static_cast<std::size_t>(a.parent)];
        n.token = a.token;
        n.draft_prob = a.prob;
        n.path_prob = a.path_prob;
        n.depth = a.depth;
        tree.draft_rows[i] = std::move(rows[old]);
        for (int k : kids_of[old]) tree.children[i].push_back(new_id[static_cast<std::size_t>(k)]);
    }
    return tree;
}

/// Square visibility matrix over tree nodes (root included): node i may
/// attend to node j iff j is i or an ancestor of i. The committed prefix is
/// visible to every node and is not represented.
class TreeMask {
public:
    TreeMask() = default;
    explicit TreeMask(std::size_t n) : n_(n), bits_(n * n, 0) {}

    std::size_t size() const { return n_; }
    bool visible(std::size_t row, std::size_t col) const { return bits_[row * n_ + col] != 0; }
    void set(std::size_t row, std::size_t col, bool v = true) { bits_[row * n_ + col] = v ? 1 : 0; }

    bool operator==(const TreeMask&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<std::uint8_t> bits_;
};

inline TreeMask tree_mask(const DraftTree& tree) {
    const std::size_t n = tree.size();
    TreeMask mask(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int parent = tree.nodes[i].parent;
        if (parent != kNoParent) {
            if (static_cast<std::size_t>(parent) >= i) throw InvariantViolation("tree_mask: parent after child");
            for (std::size_t j = 0; j < n; ++j) {
                if (mask.visible(static_cast<std::size_t>(parent), j)) mask.set(i, j);
            }
        }
        mask.set(i, i);
    }
    return mask;
}

}  // namespace specscale
