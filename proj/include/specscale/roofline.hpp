#pragma once

// Roofline analysis of a speculative decode cycle and the batch-adaptive
// top_k planner: pick the candidate-tree size whose arithmetic intensity
// lands on the hardware's critical intensity P_peak / B_mem.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "specscale/config.hpp"
#include "specscale/error.hpp"
#include "specscale/format.hpp"
#include "specscale/workload.hpp"

namespace specscale {

enum class Regime { MemoryBound, ComputeBound };

inline constexpr std::string_view regime_name(Regime r) {
    return r == Regime::MemoryBound ? "MemoryBound" : "ComputeBound";
}

/// Accepted tokens per cycle as a function of top_k: either a measured
/// constant, or the saturating fit t_acc = -6.25 * (0.2 kappa)^(top_k / 30) + 6
/// clamped to [0, top_k + 1].
class AcceptanceModel {
public:
    enum class Form { Constant, Saturating };

    static constexpr double kMinKappa = 0.9;
    static constexpr double kMaxKappa = 1.2;

    static AcceptanceModel constant(double accepted_tokens) {
        if (!(accepted_tokens > 0.0)) throw ValidationError("t_acc", "must be > 0");
        return AcceptanceModel(Form::Constant, accepted_tokens);
    }

    static AcceptanceModel saturating(double kappa) {
        if (!(kappa >= kMinKappa && kappa <= kMaxKappa)) {
            throw ValidationError("kappa", "must lie in [0.9, 1.2], got " + format_double(kappa));
        }
        return AcceptanceModel(Form::Saturating, kappa);
    }

    /// Parses `const:<t_acc>` or `eq8:<kappa>`.
    static AcceptanceModel parse(std::string_view text) {
        const auto colon = text.find(':');
        if (colon == std::string_view::npos) {
            throw ParseError("acceptance model must be const:<t_acc> or eq8:<kappa>, got '" + std::string(text) + "'");
        }
        const auto kind = text.substr(0, colon);
        double v = 0;
        if (!parse_real(text.substr(colon + 1), v)) {
            throw ParseError("acceptance model: bad number in '" + std::string(text) + "'");
        }
        if (kind == "const") return constant(v);
        if (kind == "eq8") return saturating(v);
        throw ParseError("acceptance model: unknown kind '" + std::string(kind) + "'");
    }

    Form form() const { return form_; }
    double value() const { return value_; }

    double operator()(double topk) const {
        if (form_ == Form::Constant) return value_;
        const double raw = -6.25 * std::pow(0.2 * value_, topk / 30.0) + 6.0;
        return std::clamp(raw, 0.0, topk + 1.0);
    }

    std::string to_string() const {
        return (form_ == Form::Constant ? "const:" : "eq8:") + format_double(value_);
    }

private:
    AcceptanceModel(Form f, double v) : form_(f), value_(v) {}

    Form form_;
    double value_;
};

inline double critical_intensity(const HardwareSpec& hw) { return hw.peak_flops / hw.mem_bandwidth; }

/// FLOP per byte of one cycle, using the deploy config's own t_acc.
inline double intensity(const ModelSpec& spec, const HardwareSpec& hw, const DeployConfig& deploy) {
    const auto w = cycle_workload(spec, deploy);
    return static_cast<double>(w.total_flops) /
           (static_cast<double>(w.total_mem_elems) * static_cast<double>(hw.dtype_bytes));
}

struct RooflinePoint {
    double intensity = 0;
    Regime regime = Regime::MemoryBound;
    double latency_s = 0;
    double throughput_tps = 0;
    Count batch = 1;
    Count topk = 0;
    double accepted_tokens = 0;

    bool operator==(const RooflinePoint&) const = default;
};

/// Roofline latency bound for a given amount of work: the slower of compute
/// time and memory time.
struct RooflineTiming {
    double compute_s = 0;
    double memory_s = 0;
    double latency_s = 0;
    double intensity = 0;
    Regime regime = Regime::MemoryBound;
};

inline RooflineTiming roofline_timing(double flops, double mem_bytes, const HardwareSpec& hw) {
    RooflineTiming t;
    t.compute_s = flops / hw.peak_flops;
    t.memory_s = mem_bytes / hw.mem_bandwidth;
    t.latency_s = std::max(t.compute_s, t.memory_s);
    t.intensity = flops / mem_bytes;
    t.regime = t.intensity < critical_intensity(hw) ? Regime::MemoryBound : Regime::ComputeBound;
    return t;
}

/// Latency and throughput of one full cycle. t_acc comes from `acc`
/// evaluated at the deploy's top_k and also sizes the draft prefill pass.
inline RooflinePoint roofline_point(const ModelSpec& spec, const HardwareSpec& hw, const DeployConfig& deploy,
                                    const AcceptanceModel& acc) {
    DeployConfig d = deploy;
    d.accepted_tokens = acc(static_cast<double>(deploy.topk_paths));
    const auto w = cycle_workload(spec, d);
    const double bytes = static_cast<double>(w.total_mem_elems) * static_cast<double>(hw.dtype_bytes);
    const auto t = roofline_timing(static_cast<double>(w.total_flops), bytes, hw);

    RooflinePoint p;
    p.intensity = t.intensity;
    p.regime = t.regime;
    p.latency_s = t.latency_s;
    p.throughput_tps = static_cast<double>(d.batch) * d.accepted_tokens / t.latency_s;
    p.batch = d.batch;
    p.topk = d.topk_paths;
    p.accepted_tokens = d.accepted_tokens;
    return p;
}

/// Intensity with top_k relaxed to a real number; token counts enter the
/// polynomial closed forms directly.
inline double relaxed_intensity(const ModelSpec& spec, const HardwareSpec& hw, const DeployConfig& base,
                                const AcceptanceModel& acc, double topk) {
    const double t_acc = acc(topk);
    const auto w = relaxed_cycle_workload(spec, static_cast<double>(base.batch), static_cast<double>(base.prefill_len),
                                          topk + 1.0, static_cast<double>(base.draft_tokens), std::max(1.0, t_acc));
    return w.total_flops / (w.total_mem_elems * static_cast<double>(hw.dtype_bytes));
}

enum class PlanStatus { Ok, AlreadyComputeBound, NoRoot };

inline constexpr std::string_view plan_status_name(PlanStatus s) {
    switch (s) {
        case PlanStatus::Ok: return "ok";
        case PlanStatus::AlreadyComputeBound: return "already_compute_bound";
        case PlanStatus::NoRoot: return "no_root";
    }
    return "?";
}

struct PlanResult {
    double optimal_topk_real = 1;
    Count optimal_topk_int = 1;
    double achieved_intensity = 0;
    double throughput_at_opt = 0;
    PlanStatus status = PlanStatus::Ok;
    Count batch = 1;
};

inline constexpr Count kMaxPlannedTopk = Count{1} << 20;
inline constexpr double kPlanRelTol = 1e-9;

/// Solves I(b, top_k) = I_crit for top_k by bisection over the relaxed
/// intensity. base.topk_paths is ignored; b, s_pre and k come from `base`.
inline PlanResult plan_topk(const ModelSpec& spec, const HardwareSpec& hw, const DeployConfig& base,
                            const AcceptanceModel& acc) {
    const double target = critical_intensity(hw);
    auto excess = [&](double x) { return relaxed_intensity(spec, hw, base, acc, x) - target; };
    auto point_at = [&](Count topk) {
        DeployConfig d = base;
        d.topk_paths = topk;
        return roofline_point(spec, hw, d, acc);
    };

    PlanResult r;
    r.batch = base.batch;
    if (excess(1.0) >= 0.0) {
        r.status = PlanStatus::AlreadyComputeBound;
        r.optimal_topk_real = 1.0;
        r.optimal_topk_int = 1;
        r.achieved_intensity = relaxed_intensity(spec, hw, base, acc, 1.0);
        r.throughput_at_opt = point_at(1).throughput_tps;
        return r;
    }
    const auto cap = static_cast<double>(kMaxPlannedTopk);
    if (excess(cap) < 0.0) {
        r.status = PlanStatus::NoRoot;
        r.optimal_topk_real = cap;
        r.optimal_topk_int = kMaxPlannedTopk;
        r.achieved_intensity = relaxed_intensity(spec, hw, base, acc, cap);
        r.throughput_at_opt = point_at(kMaxPlannedTopk).throughput_tps;
        return r;
    }

    double lo = 1.0;
    double hi = cap;
    while (hi - lo > kPlanRelTol * hi) {
        const double mid = 0.5 * (lo + hi);
        if (excess(mid) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    r.optimal_topk_real = 0.5 * (lo + hi);
    r.achieved_intensity = relaxed_intensity(spec, hw, base, acc, r.optimal_topk_real);

    // Largest integer whose intensity does not exceed I_crit; a root sitting
    // on an integer is taken as that integer.
    auto fits = [&](Count k) { return relaxed_intensity(spec, hw, base, acc, static_cast<double>(k)) <= target * (1.0 + 1e-12); };
    Count k = std::max<Count>(1, static_cast<Count>(std::floor(r.optimal_topk_real)));
    if (fits(k + 1)) ++k;
    r.optimal_topk_int = k;
    r.throughput_at_opt = point_at(k).throughput_tps;
    return r;
}

/// Inclusive start, exclusive stop.
struct TopkRange {
    Count start = 1;
    Count stop = 2;
    Count step = 1;

    static TopkRange parse(std::string_view text) {
        const auto parts = split(text, ':');
        TopkRange r;
        if (parts.size() != 3 || !parse_int(parts[0], r.start) || !parse_int(parts[1], r.stop) ||
            !parse_int(parts[2], r.step)) {
            throw ParseError("range must be start:stop:step, got '" + std::string(text) + "'");
        }
        r.validate();
        return r;
    }

    void validate() const {
        if (start < 0) throw ValidationError("range", "start must be >= 0");
        if (step < 1) throw ValidationError("range", "step must be >= 1");
        if (stop <= start) throw ValidationError("range", "empty range (stop <= start)");
    }

    std::vector<Count> values() const {
        validate();
        std::vector<Count> v;
        for (Count x = start; x < stop; x += step) v.push_back(x);
        return v;
    }
};

inline std::vector<RooflinePoint> throughput_curve(const ModelSpec& spec, const HardwareSpec& hw,
                                                   const DeployConfig& base, const AcceptanceModel& acc,
                                                   const TopkRange& range) {
    std::vector<RooflinePoint> curve;
    for (Count k : range.values()) {
        DeployConfig d = base;
        d.topk_paths = k;
        curve.push_back(roofline_point(spec, hw, d, acc));
    }
    return curve;
}

/// Index of the highest throughput; the first one wins ties.
inline std::size_t argmax_throughput(const std::vector<RooflinePoint>& curve) {
    if (curve.empty()) throw ValidationError("curve", "empty");
    std::size_t best = 0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        if (curve[i].throughput_tps > curve[best].throughput_tps) best = i;
    }
    return best;
}

struct InterplayRow {
    Count batch = 1;
    double kappa = 1;
    Count argmax_topk = 0;
    double max_throughput_tps = 0;
};

/// For every (b, kappa) pair, in that nesting order, the throughput-maximizing
/// top_k under the saturating acceptance model.
inline std::vector<InterplayRow> interplay_sweep(const ModelSpec& spec, const HardwareSpec& hw,
                                                 const DeployConfig& base, const std::vector<Count>& batches,
                                                 const std::vector<double>& kappas, const TopkRange& range) {
    std::vector<InterplayRow> rows;
    for (Count b : batches) {
        DeployConfig d = base;
        d.batch = b;
        validate(d);
        for (double kappa : kappas) {
            const auto curve = throughput_curve(spec, hw, d, AcceptanceModel::saturating(kappa), range);
            const auto& best = curve[argmax_throughput(curve)];
            rows.push_back({b, kappa, best.topk, best.throughput_tps});
        }
    }
    return rows;
}

inline constexpr std::string_view kCurveCsvHeader = "b,top_k,intensity,regime,latency_s,throughput_tps";
inline constexpr std::string_view kInterplayCsvHeader = "b,kappa,argmax_top_k,max_throughput_tps";
inline constexpr std::string_view kPlanCsvHeader =
    "b,optimal_topk_real,optimal_topk_int,achieved_intensity,throughput_tps,status";

inline std::string curve_row(const RooflinePoint& p) {
    return std::to_string(p.batch) + "," + std::to_string(p.topk) + "," + format_double(p.intensity) + "," +
           std::string(regime_name(p.regime)) + "," + format_double(p.latency_s) + "," +
           format_double(p.throughput_tps);
}

inline std::string curve_to_csv(const std::vector<RooflinePoint>& curve) {
    std::string out(kCurveCsvHeader);
    out += "\n";
    for (const auto& p : curve) out += curve_row(p) + "\n";
    return out;
}

/// Parses curve CSV back into points (accepted_tokens is not carried).
inline std::vector<RooflinePoint> curve_from_csv(std::string_view text) {
    auto lines = split(text, '\n');
    if (lines.empty() || trim(lines.front()) != kCurveCsvHeader) {
        throw ParseError("curve CSV: expected header '" + std::string(kCurveCsvHeader) + "'");
    }
    std::vector<RooflinePoint> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto line = trim(lines[i]);
        if (line.empty()) continue;
        const auto c = split(line, ',');
        RooflinePoint p;
        bool ok = c.size() == 6 && parse_int(c[0], p.batch) && parse_int(c[1], p.topk) &&
                  parse_real(c[2], p.intensity) && parse_real(c[4], p.latency_s) && parse_real(c[5], p.throughput_tps);
        if (ok && c[3] == regime_name(Regime::MemoryBound)) {
            p.regime = Regime::MemoryBound;
        } else if (ok && c[3] == regime_name(Regime::ComputeBound)) {
            p.regime = Regime::ComputeBound;
        } else {
            throw ParseError("curve CSV: malformed line " + std::to_string(i + 1));
        }
        out.push_back(p);
    }
    return out;
}

inline std::string interplay_to_csv(const std::vector<InterplayRow>& rows) {
    std::string out(kInterplayCsvHeader);
    out += "\n";
    for (const auto& r : rows) {
        out += std::to_string(r.batch) + "," + format_double(r.kappa) + "," + std::to_string(r.argmax_topk) + "," +
               format_double(r.max_throughput_tps) + "\n";
    }
    return out;
}

inline std::string plan_row(const PlanResult& r) {
    return std::to_string(r.batch) + "," + format_double(r.optimal_topk_real) + "," +
           std::to_string(r.optimal_topk_int) + "," + format_double(r.achieved_intensity) + "," +
           format_double(r.throughput_at_opt) + "," + std::string(plan_status_name(r.status));
}

}  // namespace specscale
