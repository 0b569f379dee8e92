#pragma once

// Architecture, hardware and deployment parameters plus the flat
// `key = value` config format they are loaded from.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "specscale/error.hpp"
#include "specscale/format.hpp"

namespace specscale {

using Count = std::int64_t;

struct ModelSpec {
    Count hidden_dim = 1;     // h
    Count kv_dim = 1;         // h_kv
    Count mlp_dim = 1;        // h_mlp
    Count target_layers = 1;  // l
    Count vocab = 1;          // V
    Count draft_layers = 1;   // L_d
    Count draft_steps = 1;    // D, may be 0 (no autoregressive draft steps)
    Count num_heads = 1;      // n_h, carried but unused by the workload formulas

    bool operator==(const ModelSpec&) const = default;
};

struct HardwareSpec {
    double peak_flops = 1.0;     // FLOP/s
    double mem_bandwidth = 1.0;  // bytes/s
    Count dtype_bytes = 2;

    bool operator==(const HardwareSpec&) const = default;
};

struct DeployConfig {
    Count batch = 1;
    Count prefill_len = 0;
    Count topk_paths = 1;       // candidate nodes verified per cycle, 0 = plain decode
    Count draft_tokens = 1;     // tokens fed per draft step (k)
    double accepted_tokens = 1; // t_acc, tokens committed per cycle

    bool operator==(const DeployConfig&) const = default;
};

inline void validate(const ModelSpec& m) {
    auto positive = [](Count v, const char* field) {
        if (v < 1) throw ValidationError(field, "must be >= 1, got " + std::to_string(v));
    };
    positive(m.hidden_dim, "h");
    positive(m.kv_dim, "h_kv");
    positive(m.mlp_dim, "h_mlp");
    positive(m.target_layers, "l");
    positive(m.vocab, "V");
    positive(m.draft_layers, "L_d");
    positive(m.num_heads, "n_h");
    if (m.draft_steps < 0) {
        throw ValidationError("D", "must be >= 0, got " + std::to_string(m.draft_steps));
    }
    if (m.kv_dim > m.hidden_dim) {
        throw ValidationError("h_kv", "must not exceed h (" + std::to_string(m.hidden_dim) + ")");
    }
    if (m.hidden_dim % m.num_heads != 0) {
        throw ValidationError("n_h", "must divide h (" + std::to_string(m.hidden_dim) + ")");
    }
}

inline void validate(const HardwareSpec& hw) {
    if (!(hw.peak_flops > 0.0)) throw ValidationError("P_peak", "must be > 0");
    if (!(hw.mem_bandwidth > 0.0)) throw ValidationError("B_mem", "must be > 0");
    if (hw.dtype_bytes < 1) throw ValidationError("dtype_bytes", "must be >= 1");
}

inline void validate(const DeployConfig& d) {
    if (d.batch < 1) throw ValidationError("b", "must be >= 1, got " + std::to_string(d.batch));
    if (d.prefill_len < 0) throw ValidationError("s_pre", "must be >= 0");
    if (d.topk_paths < 0) throw ValidationError("top_k", "must be >= 0");
    if (d.draft_tokens < 1) throw ValidationError("k", "must be >= 1");
    if (!(d.accepted_tokens > 0.0)) throw ValidationError("t_acc", "must be > 0");
}

/// Parsed `key = value` text. Blank lines and `#` comments are ignored;
/// duplicate keys are a parse error.
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::string_view text, const std::string& origin = "<text>") {
        KeyValueConfig cfg;
        cfg.origin_ = origin;
        std::size_t line_no = 0;
        for (auto raw : split(text, '\n')) {
            ++line_no;
            if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
            const auto line = trim(raw);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) {
                throw ParseError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
            }
            const std::string key(trim(line.substr(0, eq)));
            const std::string value(trim(line.substr(eq + 1)));
            if (key.empty() || value.empty()) {
                throw ParseError(origin + ":" + std::to_string(line_no) + ": empty key or value");
            }
            if (!cfg.values_.emplace(key, value).second) {
                throw ParseError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
            }
        }
        return cfg;
    }

    static KeyValueConfig load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ParseError("cannot open '" + path.string() + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path.string());
    }

    void require_known(const std::set<std::string>& known) const {
        for (const auto& [key, _] : values_) {
            if (!known.count(key)) throw ValidationError(key, "unknown key in " + origin_);
        }
    }

    std::optional<std::string> raw(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        return it->second;
    }

    Count integer(const std::string& key, std::optional<Count> fallback = std::nullopt) const {
        auto text = raw(key);
        if (!text) {
            if (fallback) return *fallback;
            throw ValidationError(key, "missing required key in " + origin_);
        }
        Count v = 0;
        if (!parse_int(*text, v)) throw ParseError(origin_ + ": '" + key + "' is not an integer: " + *text);
        return v;
    }

    double real(const std::string& key, std::optional<double> fallback = std::nullopt) const {
        auto text = raw(key);
        if (!text) {
            if (fallback) return *fallback;
            throw ValidationError(key, "missing required key in " + origin_);
        }
        double v = 0;
        if (!parse_real(*text, v)) throw ParseError(origin_ + ": '" + key + "' is not a number: " + *text);
        return v;
    }

private:
    std::string origin_;
    std::map<std::string, std::string> values_;
};

inline ModelSpec model_spec_from(const KeyValueConfig& cfg) {
    cfg.require_known({"h", "h_kv", "h_mlp", "l", "V", "L_d", "D", "n_h"});
    ModelSpec m;
    m.hidden_dim = cfg.integer("h");
    m.kv_dim = cfg.integer("h_kv");
    m.mlp_dim = cfg.integer("h_mlp");
    m.target_layers = cfg.integer("l");
    m.vocab = cfg.integer("V");
    m.draft_layers = cfg.integer("L_d");
    m.draft_steps = cfg.integer("D");
    m.num_heads = cfg.integer("n_h");
    validate(m);
    return m;
}

inline HardwareSpec hardware_spec_from(const KeyValueConfig& cfg) {
    cfg.require_known({"P_peak", "B_mem", "dtype_bytes"});
    HardwareSpec hw;
    hw.peak_flops = cfg.real("P_peak");
    hw.mem_bandwidth = cfg.real("B_mem");
    hw.dtype_bytes = cfg.integer("dtype_bytes", 2);
    validate(hw);
    return hw;
}

inline DeployConfig deploy_config_from(const KeyValueConfig& cfg) {
    cfg.require_known({"b", "s_pre", "top_k", "k", "t_acc"});
    DeployConfig d;
    d.batch = cfg.integer("b");
    d.prefill_len = cfg.integer("s_pre");
    d.topk_paths = cfg.integer("top_k");
    d.draft_tokens = cfg.integer("k");
    d.accepted_tokens = cfg.real("t_acc");
    validate(d);
    return d;
}

inline ModelSpec load_model_spec(const std::filesystem::path& path) {
    return model_spec_from(KeyValueConfig::load(path));
}

inline HardwareSpec load_hardware_spec(const std::filesystem::path& path) {
    return hardware_spec_from(KeyValueConfig::load(path));
}

inline DeployConfig load_deploy_config(const std::filesystem::path& path) {
    return deploy_config_from(KeyValueConfig::load(path));
}

inline std::string to_config_text(const ModelSpec& m) {
    std::ostringstream out;
    out << "h = " << m.hidden_dim << "\n"
        << "h_kv = " << m.kv_dim << "\n"
        << "h_mlp = " << m.mlp_dim << "\n"
        << "l = " << m.target_layers << "\n"
        << "V = " << m.vocab << "\n"
        << "L_d = " << m.draft_layers << "\n"
        << "D = " << m.draft_steps << "\n"
        << "n_h = " << m.num_heads << "\n";
    return out.str();
}

inline std::string to_config_text(const HardwareSpec& hw) {
    return "P_peak = " + format_double(hw.peak_flops) + "\n" +
           "B_mem = " + format_double(hw.mem_bandwidth) + "\n" +
           "dtype_bytes = " + std::to_string(hw.dtype_bytes) + "\n";
}

inline std::string to_config_text(const DeployConfig& d) {
    return "b = " + std::to_string(d.batch) + "\n" +
           "s_pre = " + std::to_string(d.prefill_len) + "\n" +
           "top_k = " + std::to_string(d.topk_paths) + "\n" +
           "k = " + std::to_string(d.draft_tokens) + "\n" +
           "t_acc = " + format_double(d.accepted_tokens) + "\n";
}

}  // namespace specscale
