#pragma once

// Order-n Markov table over a small vocabulary; stands in for both the
// target and the draft distribution in the decoding simulator.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "specscale/error.hpp"
#include "specscale/format.hpp"

namespace specscale {

using Token = int;
using Distribution = std::vector<double>;

/// Pads contexts shorter than the model order. Written as `^` in files.
inline constexpr Token kBeginToken = -1;

class ToyLM {
public:
    static constexpr int kMaxVocab = 16;
    static constexpr double kRowTolerance = 1e-12;

    ToyLM() = default;

    /// Builds the full table by evaluating `row` on every valid context
    /// (begin tokens only as a leading run).
    static ToyLM from_function(int vocab, int order, const std::function<Distribution(std::span<const Token>)>& row) {
        ToyLM lm = empty(vocab, order);
        for (const auto& ctx : lm.contexts()) lm.set_row(ctx, row(ctx));
        lm.check_total();
        return lm;
    }

    static ToyLM uniform(int vocab, int order = 0) {
        return from_function(vocab, order, [vocab](std::span<const Token>) {
            return Distribution(static_cast<std::size_t>(vocab), 1.0 / vocab);
        });
    }

    int vocab() const { return vocab_; }
    int order() const { return order_; }

    /// Next-token distribution given the full history; only the last
    /// `order` tokens matter.
    std::span<const double> next(std::span<const Token> history) const {
        std::size_t index = 0;
        const auto n = static_cast<std::size_t>(order_);
        for (std::size_t i = 0; i < n; ++i) {
            // Position i of the context window, left-padded with begin tokens.
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(history.size()) - static_cast<std::ptrdiff_t>(n - i);
            const Token t = src >= 0 ? history[static_cast<std::size_t>(src)] : kBeginToken;
            if (t != kBeginToken && (t < 0 || t >= vocab_)) {
                throw ValidationError("token", "out of range: " + std::to_string(t));
            }
            index = index * radix() + digit(t);
        }
        return {rows_.data() + index * static_cast<std::size_t>(vocab_), static_cast<std::size_t>(vocab_)};
    }

    /// Every valid context, shortest padding last.
    std::vector<std::vector<Token>> contexts() const {
        std::vector<std::vector<Token>> out;
        for (int pad = order_; pad >= 0; --pad) {
            const int free = order_ - pad;
            std::size_t combos = 1;
            for (int i = 0; i < free; ++i) combos *= static_cast<std::size_t>(vocab_);
            for (std::size_t c = 0; c < combos; ++c) {
                std::vector<Token> ctx(static_cast<std::size_t>(order_), kBeginToken);
                std::size_t rem = c;
                for (int i = order_ - 1; i >= pad; --i) {
                    ctx[static_cast<std::size_t>(i)] = static_cast<Token>(rem % static_cast<std::size_t>(vocab_));
                    rem /= static_cast<std::size_t>(vocab_);
                }
                out.push_back(std::move(ctx));
            }
        }
        return out;
    }

    static ToyLM parse(std::string_view text, const std::string& origin = "<toylm>") {
        auto lines = split(text, '\n');
        std::size_t i = 0;
        auto next_content = [&]() -> std::string_view {
            while (i < lines.size()) {
                auto line = lines[i++];
                if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
                line = trim(line);
                if (!line.empty()) return line;
            }
            return {};
        };
        auto where = [&] { return origin + ":" + std::to_string(i); };

        const auto header = next_content();
        if (header.empty()) throw ParseError(origin + ": empty file");
        std::int64_t vocab = -1, order = -1;
        for (auto field : split_ws(header)) {
            const auto eq = field.find('=');
            if (eq == std::string_view::npos) throw ParseError(where() + ": malformed header field");
            const auto key = field.substr(0, eq);
            std::int64_t v = 0;
            if (!parse_int(field.substr(eq + 1), v)) throw ParseError(where() + ": bad header value");
            if (key == "vocab") {
                vocab = v;
            } else if (key == "order") {
                order = v;
            } else {
                throw ParseError(where() + ": unknown header key '" + std::string(key) + "'");
            }
        }
        if (vocab < 0 || order < 0) throw ParseError(origin + ": header must be 'vocab=<n> order=<k>'");
        ToyLM lm = empty(static_cast<int>(vocab), static_cast<int>(order));

        for (auto line = next_content(); !line.empty(); line = next_content()) {
            const auto colon = line.find(':');
            if (colon == std::string_view::npos) throw ParseError(where() + ": expected 'ctx : probs'");
            std::vector<Token> ctx;
            for (auto tok : split_ws(line.substr(0, colon))) {
                if (tok == "^") {
                    ctx.push_back(kBeginToken);
                    continue;
                }
                std::int64_t t = 0;
                if (!parse_int(tok, t)) throw ParseError(where() + ": bad context token '" + std::string(tok) + "'");
                ctx.push_back(static_cast<Token>(t));
            }
            Distribution row;
            for (auto tok : split_ws(line.substr(colon + 1))) {
                double p = 0;
                if (!parse_real(tok, p)) throw ParseError(where() + ": bad probability '" + std::string(tok) + "'");
                row.push_back(p);
            }
            try {
                if (lm.has_row(ctx)) throw ValidationError("context", "duplicate row");
                lm.set_row(ctx, row);
            } catch (const ValidationError& e) {
                throw ParseError(where() + ": " + e.what());
            }
        }
        try {
            lm.check_total();
        } catch (const ValidationError& e) {
            throw ParseError(origin + ": " + e.what());
        }
        return lm;
    }

    static ToyLM load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ParseError("cannot open '" + path.string() + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path.string());
    }

    std::string to_text() const {
        std::ostringstream out;
        out << "vocab=" << vocab_ << " order=" << order_ << "\n";
        for (const auto& ctx : contexts()) {
            for (std::size_t i = 0; i < ctx.size(); ++i) {
                if (i) out << ' ';
                out << (ctx[i] == kBeginToken ? std::string("^") : std::to_string(ctx[i]));
            }
            out << (ctx.empty() ? ":" : " :");
            for (double p : next(ctx)) out << ' ' << format_double(p);
            out << "\n";
        }
        return out.str();
    }

    bool operator==(const ToyLM&) const = default;

private:
    static ToyLM empty(int vocab, int order) {
        if (vocab < 1 || vocab > kMaxVocab) {
            throw ValidationError("vocab", "must be in [1, " + std::to_string(kMaxVocab) + "]");
        }
        if (order < 0) throw ValidationError("order", "must be >= 0");
        std::size_t n = 1;
        for (int i = 0; i < order; ++i) {
            n *= static_cast<std::size_t>(vocab + 1);
            if (n > (std::size_t{1} << 20)) throw ValidationError("order", "context table too large");
        }
        ToyLM lm;
        lm.vocab_ = vocab;
        lm.order_ = order;
        lm.rows_.assign(n * static_cast<std::size_t>(vocab), 0.0);
        lm.present_.assign(n, 0);
        return lm;
    }

    std::size_t radix() const { return static_cast<std::size_t>(vocab_) + 1; }
    std::size_t digit(Token t) const {
        return t == kBeginToken ? static_cast<std::size_t>(vocab_) : static_cast<std::size_t>(t);
    }

    std::size_t index_of(std::span<const Token> ctx) const {
        if (ctx.size() != static_cast<std::size_t>(order_)) {
            throw ValidationError("context", "expected " + std::to_string(order_) + " tokens, got " +
                                                 std::to_string(ctx.size()));
        }
        bool seen_real = false;
        std::size_t index = 0;
        for (Token t : ctx) {
            if (t == kBeginToken) {
                if (seen_real) throw ValidationError("context", "begin token after a real token");
            } else if (t < 0 || t >= vocab_) {
                throw ValidationError("context", "token out of range: " + std::to_string(t));
            } else {
                seen_real = true;
            }
            index = index * radix() + digit(t);
        }
        return index;
    }

    bool has_row(std::span<const Token> ctx) const { return present_[index_of(ctx)] != 0; }

    void set_row(std::span<const Token> ctx, const Distribution& row) {
        if (row.size() != static_cast<std::size_t>(vocab_)) {
            throw ValidationError("row", "expected " + std::to_string(vocab_) + " probabilities, got " +
                                             std::to_string(row.size()));
        }
        double sum = 0;
        for (double p : row) {
            if (!(p >= 0.0) || !std::isfinite(p)) throw ValidationError("row", "probabilities must be finite and >= 0");
            sum += p;
        }
        if (std::abs(sum - 1.0) > kRowTolerance) {
            throw ValidationError("row", "probabilities sum to " + format_double(sum) + ", not 1");
        }
        const auto idx = index_of(ctx);
        std::copy(row.begin(), row.end(), rows_.begin() + static_cast<std::ptrdiff_t>(idx * static_cast<std::size_t>(vocab_)));
        present_[idx] = 1;
    }

    void check_total() const {
        for (const auto& ctx : contexts()) {
            if (!has_row(ctx)) {
                std::string s;
                for (Token t : ctx) s += (t == kBeginToken ? std::string("^") : std::to_string(t)) + " ";
                throw ValidationError("context", "missing row for context [" + std::string(trim(s)) + "]");
            }
        }
    }

    int vocab_ = 0;
    int order_ = 0;
    std::vector<double> rows_;
    std::vector<char> present_;
};

}  // namespace specscale
