#pragma once

// Per-operator FLOP and memory-access accounting for one decode cycle of a
// draft-and-verify decoder: the target model verifies a candidate tree, the
// draft model runs D autoregressive steps, then re-prefills the accepted
// tokens. Memory is counted in elements; bytes are applied by the roofline.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "specscale/config.hpp"
#include "specscale/error.hpp"
#include "specscale/format.hpp"

namespace specscale {

enum class Op {
    FC,
    QKV_Proj,
    Self_Attention,
    Out_Proj,
    UpGate_Proj,
    Down_Proj,
    Residual,
    LayerNorm,
    Activation,
    LM_Head,
};

inline constexpr std::array<Op, 10> kAllOps = {
    Op::FC,          Op::QKV_Proj,  Op::Self_Attention, Op::Out_Proj,   Op::UpGate_Proj,
    Op::Down_Proj,   Op::Residual,  Op::LayerNorm,      Op::Activation, Op::LM_Head,
};

inline constexpr std::string_view op_name(Op op) {
    switch (op) {
        case Op::FC: return "FC";
        case Op::QKV_Proj: return "QKV_Proj";
        case Op::Self_Attention: return "Self_Attention";
        case Op::Out_Proj: return "Out_Proj";
        case Op::UpGate_Proj: return "UpGate_Proj";
        case Op::Down_Proj: return "Down_Proj";
        case Op::Residual: return "Residual";
        case Op::LayerNorm: return "LayerNorm";
        case Op::Activation: return "Activation";
        case Op::LM_Head: return "LM_Head";
    }
    return "?";
}

inline std::optional<Op> op_from_name(std::string_view name) {
    for (Op op : kAllOps) {
        if (op_name(op) == name) return op;
    }
    return std::nullopt;
}

template <class T>
struct BasicOpCost {
    Op op = Op::FC;
    T flops{};
    T read_elems{};
    T write_elems{};

    bool operator==(const BasicOpCost&) const = default;
};

/// Per-op costs plus totals. Totals are maintained by add(), so they always
/// equal the sum over per_op.
template <class T>
struct BasicWorkload {
    std::vector<BasicOpCost<T>> per_op;
    T total_flops{};
    T total_read{};
    T total_write{};
    T total_mem_elems{};

    const BasicOpCost<T>* find(Op op) const {
        for (const auto& c : per_op) {
            if (c.op == op) return &c;
        }
        return nullptr;
    }

    // Merges into an existing entry for the same op.
    void add(const BasicOpCost<T>& cost);

    BasicWorkload& operator+=(const BasicWorkload& other) {
        for (const auto& c : other.per_op) add(c);
        return *this;
    }

    bool operator==(const BasicWorkload&) const = default;
};

using OpCost = BasicOpCost<Count>;
using WorkloadBreakdown = BasicWorkload<Count>;
using RelaxedWorkload = BasicWorkload<double>;

namespace detail {

/// int64 with overflow-checked + and *.
class Checked {
public:
    constexpr Checked(Count v = 0) : v_(v) {}  // NOLINT(google-explicit-constructor)
    constexpr Count value() const { return v_; }

    friend Checked operator+(Checked a, Checked b) {
        Count r = 0;
        if (__builtin_add_overflow(a.v_, b.v_, &r)) throw OverflowError("workload count overflows int64");
        return Checked(r);
    }
    friend Checked operator*(Checked a, Checked b) {
        Count r = 0;
        if (__builtin_mul_overflow(a.v_, b.v_, &r)) throw OverflowError("workload count overflows int64");
        return Checked(r);
    }
    Checked& operator+=(Checked o) { return *this = *this + o; }

private:
    Count v_;
};

inline Count unwrap(Checked c) { return c.value(); }
inline double unwrap(double d) { return d; }

template <class T>
inline T add_counts(T a, T b) {
    if constexpr (std::is_integral_v<T>) {
        return unwrap(Checked(a) + Checked(b));
    } else {
        return a + b;
    }
}

/// Per-op rows for one forward pass. A is Checked (exact integer
/// accounting) or double (real-relaxed token counts). Per-layer rows are
/// multiplied by `layers`; FC and LM_Head are counted once.
template <class A>
std::vector<BasicOpCost<A>> op_rows(const ModelSpec& m, A b, A s, A s_pre, bool with_fc, A layers) {
    const A h = A(m.hidden_dim);
    const A hkv = A(m.kv_dim);
    const A hmlp = A(m.mlp_dim);
    const A V = A(m.vocab);
    const A bs = b * s;
    const A bsh = bs * h;
    const A ctx = s + s_pre;

    std::vector<BasicOpCost<A>> rows;
    rows.reserve(kAllOps.size());

    if (with_fc) {
        rows.push_back({Op::FC, A(4) * bsh * h, A(2) * bsh + A(2) * h * h, bsh});
    }

    auto layer = [&](Op op, A flops, A read, A write) {
        rows.push_back({op, flops * layers, read * layers, write * layers});
    };
    layer(Op::QKV_Proj, A(2) * bsh * (h + A(2) * hkv), bsh + (h + A(1)) * (h + A(2) * hkv), bs * (h + A(2) * hkv));
    layer(Op::Self_Attention, A(4) * bs * ctx * h, bsh + A(2) * b * ctx * hkv, bsh);
    layer(Op::Out_Proj, A(2) * bsh * h, bsh + h * h, bsh);
    layer(Op::UpGate_Proj, A(4) * bsh * hmlp, A(2) * (bsh + h * hmlp), A(2) * bs * hmlp);
    layer(Op::Down_Proj, A(2) * bsh * hmlp, bs * hmlp + h * hmlp, bsh);
    layer(Op::Residual, A(0), A(4) * bsh, A(2) * bsh);
    layer(Op::LayerNorm, A(0), A(2) * (h + bsh), A(2) * bsh);
    layer(Op::Activation, A(0), A(2) * bs * hmlp, bs * hmlp);

    rows.push_back({Op::LM_Head, A(2) * bsh * V, bsh + h * V, bs * V});
    return rows;
}

}  // namespace detail

template <class T>
void BasicWorkload<T>::add(const BasicOpCost<T>& cost) {
    using detail::add_counts;
    bool merged = false;
    for (auto& c : per_op) {
        if (c.op == cost.op) {
            c.flops = add_counts(c.flops, cost.flops);
            c.read_elems = add_counts(c.read_elems, cost.read_elems);
            c.write_elems = add_counts(c.write_elems, cost.write_elems);
            merged = true;
            break;
        }
    }
    if (!merged) per_op.push_back(cost);
    total_flops = add_counts(total_flops, cost.flops);
    total_read = add_counts(total_read, cost.read_elems);
    total_write = add_counts(total_write, cost.write_elems);
    total_mem_elems = add_counts(total_read, total_write);
}

/// Exact integer costs of one forward pass over `s` new tokens with `s_pre`
/// cached context tokens.
inline WorkloadBreakdown op_costs(const ModelSpec& spec, Count b, Count s, Count s_pre, bool with_fc,
                                  Count layers) {
    if (b < 1) throw ValidationError("b", "must be >= 1");
    if (s < 1) throw ValidationError("s", "must be >= 1");
    if (s_pre < 0) throw ValidationError("s_pre", "must be >= 0");
    if (layers < 1) throw ValidationError("layers", "must be >= 1");
    using detail::Checked;
    WorkloadBreakdown w;
    for (const auto& r : detail::op_rows<Checked>(spec, b, s, s_pre, with_fc, layers)) {
        w.add({r.op, r.flops.value(), r.read_elems.value(), r.write_elems.value()});
    }
    return w;
}

/// Same formulas with real-valued token counts. Polynomial in s, so this is
/// the exact continuous extension of op_costs.
inline RelaxedWorkload relaxed_op_costs(const ModelSpec& spec, double b, double s, double s_pre, bool with_fc,
                                        Count layers) {
    RelaxedWorkload w;
    for (const auto& r : detail::op_rows<double>(spec, b, s, s_pre, with_fc, static_cast<double>(layers))) {
        w.add(r);
    }
    return w;
}

template <class T>
BasicWorkload<T> scaled(const BasicWorkload<T>& w, Count factor) {
    BasicWorkload<T> out;
    for (const auto& c : w.per_op) {
        if constexpr (std::is_integral_v<T>) {
            using detail::Checked;
            out.add({c.op, (Checked(c.flops) * factor).value(), (Checked(c.read_elems) * factor).value(),
                     (Checked(c.write_elems) * factor).value()});
        } else {
            const auto f = static_cast<double>(factor);
            out.add({c.op, c.flops * f, c.read_elems * f, c.write_elems * f});
        }
    }
    return out;
}

enum class Stage { TargetVerify, DraftDecodeStep, DraftPrefill };

inline constexpr std::string_view stage_name(Stage s) {
    switch (s) {
        case Stage::TargetVerify: return "TargetVerify";
        case Stage::DraftDecodeStep: return "DraftDecodeStep";
        case Stage::DraftPrefill: return "DraftPrefill";
    }
    return "?";
}

/// Draft prefill re-encodes the accepted tokens; t_acc is an average, so it
/// is rounded to a whole, positive token count.
inline Count prefill_tokens(double accepted_tokens) {
    return std::max<Count>(1, static_cast<Count>(std::llround(accepted_tokens)));
}

struct PassKind {
    Stage stage = Stage::TargetVerify;
    Count tokens = 1;

    // The target processes every candidate node plus the root token.
    static PassKind target_verify(const DeployConfig& d) { return {Stage::TargetVerify, d.topk_paths + 1}; }
    static PassKind draft_step(const DeployConfig& d) { return {Stage::DraftDecodeStep, d.draft_tokens}; }
    static PassKind draft_prefill(const DeployConfig& d) {
        return {Stage::DraftPrefill, prefill_tokens(d.accepted_tokens)};
    }
};

inline WorkloadBreakdown pass_workload(const ModelSpec& spec, const DeployConfig& deploy, const PassKind& pass) {
    if (pass.tokens < 1) throw ValidationError("token_count", "must be >= 1");
    switch (pass.stage) {
        case Stage::TargetVerify:
            return op_costs(spec, deploy.batch, pass.tokens, deploy.prefill_len, false, spec.target_layers);
        case Stage::DraftDecodeStep:
        case Stage::DraftPrefill:
            return op_costs(spec, deploy.batch, pass.tokens, deploy.prefill_len, true, spec.draft_layers);
    }
    throw InvariantViolation("pass_workload: unknown stage");
}

/// One verify pass, D draft steps and one draft prefill.
inline WorkloadBreakdown cycle_workload(const ModelSpec& spec, const DeployConfig& deploy) {
    WorkloadBreakdown total = pass_workload(spec, deploy, PassKind::target_verify(deploy));
    if (spec.draft_steps > 0) {
        total += scaled(pass_workload(spec, deploy, PassKind::draft_step(deploy)), spec.draft_steps);
    }
    total += pass_workload(spec, deploy, PassKind::draft_prefill(deploy));
    return total;
}

/// Real-valued cycle workload used by the top_k planner.
inline RelaxedWorkload relaxed_cycle_workload(const ModelSpec& spec, double batch, double prefill_len,
                                              double verify_tokens, double draft_tokens, double prefill_tok) {
    RelaxedWorkload total = relaxed_op_costs(spec, batch, verify_tokens, prefill_len, false, spec.target_layers);
    if (spec.draft_steps > 0) {
        total += scaled(relaxed_op_costs(spec, batch, draft_tokens, prefill_len, true, spec.draft_layers),
                        spec.draft_steps);
    }
    total += relaxed_op_costs(spec, batch, prefill_tok, prefill_len, true, spec.draft_layers);
    return total;
}

inline constexpr std::string_view kBreakdownCsvHeader = "op,flops,read_elems,write_elems";

inline std::string to_csv(const WorkloadBreakdown& w) {
    std::ostringstream out;
    out << kBreakdownCsvHeader << "\n";
    for (const auto& c : w.per_op) {
        out << op_name(c.op) << "," << c.flops << "," << c.read_elems << "," << c.write_elems << "\n";
    }
    return out.str();
}

inline WorkloadBreakdown breakdown_from_csv(std::string_view text) {
    auto lines = split(text, '\n');
    if (lines.empty() || trim(lines.front()) != kBreakdownCsvHeader) {
        throw ParseError("breakdown CSV: expected header '" + std::string(kBreakdownCsvHeader) + "'");
    }
    WorkloadBreakdown w;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto line = trim(lines[i]);
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != 4) throw ParseError("breakdown CSV: expected 4 columns on line " + std::to_string(i + 1));
        const auto op = op_from_name(cells[0]);
        if (!op) throw ParseError("breakdown CSV: unknown op '" + std::string(cells[0]) + "'");
        OpCost c{*op};
        if (!parse_int(cells[1], c.flops) || !parse_int(cells[2], c.read_elems) ||
            !parse_int(cells[3], c.write_elems)) {
            throw ParseError("breakdown CSV: bad integer on line " + std::to_string(i + 1));
        }
        w.add(c);
    }
    return w;
}

}  // namespace specscale
