// specscale command-line front end.
//
// Exit codes: 0 on success, 1 on user error (bad flags, unreadable or invalid
// input), 2 when an internal invariant fails.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "specscale/specscale.hpp"

namespace {

using namespace specscale;

constexpr int kExitUser = 1;
constexpr int kExitInternal = 2;

std::vector<Count> parse_count_list(const std::string& text, const std::string& what) {
    std::vector<Count> out;
    for (auto cell : split(text, ',')) {
        Count v = 0;
        if (!parse_int(cell, v)) throw ParseError(what + ": bad integer '" + std::string(cell) + "'");
        out.push_back(v);
    }
    return out;
}

std::vector<double> parse_real_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    for (auto cell : split(text, ',')) {
        double v = 0;
        if (!parse_real(cell, v)) throw ParseError(what + ": bad number '" + std::string(cell) + "'");
        out.push_back(v);
    }
    return out;
}

void write_output(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw ParseError("cannot write '" + out_path + "'");
    f << text;
    if (!f) throw ParseError("write failed for '" + out_path + "'");
}

struct AnalyzeArgs {
    std::string model, hardware, deploy, format = "csv", acc_model;
};

std::string run_analyze(const AnalyzeArgs& a) {
    const auto spec = load_model_spec(a.model);
    const auto hw = load_hardware_spec(a.hardware);
    const auto deploy = load_deploy_config(a.deploy);
    const auto acc = a.acc_model.empty() ? AcceptanceModel::constant(deploy.accepted_tokens)
                                         : AcceptanceModel::parse(a.acc_model);
    const auto point = roofline_point(spec, hw, deploy, acc);
    DeployConfig used = deploy;
    used.accepted_tokens = point.accepted_tokens;
    const auto w = cycle_workload(spec, used);

    std::ostringstream out;
    if (a.format == "csv") {
        out << to_csv(w) << "\n" << kCurveCsvHeader << "\n" << curve_row(point) << "\n";
        return out.str();
    }
    out << "workload per cycle\n";
    for (const auto& c : w.per_op) {
        out << "  " << op_name(c.op) << ": flops=" << c.flops << " read_elems=" << c.read_elems
            << " write_elems=" << c.write_elems << "\n";
    }
    out << "  total: flops=" << w.total_flops << " mem_elems=" << w.total_mem_elems << "\n";
    out << "roofline\n"
        << "  b=" << point.batch << "\n"
        << "  top_k=" << point.topk << "\n"
        << "  accepted_tokens=" << format_double(point.accepted_tokens) << "\n"
        << "  intensity=" << format_double(point.intensity) << "\n"
        << "  critical_intensity=" << format_double(critical_intensity(hw)) << "\n"
        << "  regime=" << regime_name(point.regime) << "\n"
        << "  latency_s=" << format_double(point.latency_s) << "\n"
        << "  throughput_tps=" << format_double(point.throughput_tps) << "\n";
    return out.str();
}

struct PlanArgs {
    std::string model, hardware, batch_list, acc_model = "eq8:1";
    Count batch = 1, prefill = 0, draft_tokens = 10;
};

std::string run_plan(const PlanArgs& a) {
    const auto spec = load_model_spec(a.model);
    const auto hw = load_hardware_spec(a.hardware);
    const auto acc = AcceptanceModel::parse(a.acc_model);
    const auto batches = a.batch_list.empty() ? std::vector<Count>{a.batch} : parse_count_list(a.batch_list, "batch-list");

    std::string out(kPlanCsvHeader);
    out += "\n";
    for (Count b : batches) {
        DeployConfig d;
        d.batch = b;
        d.prefill_len = a.prefill;
        d.draft_tokens = a.draft_tokens;
        validate(d);
        out += plan_row(plan_topk(spec, hw, d, acc)) + "\n";
    }
    return out;
}

struct FitArgs {
    std::string csv, form;
};

std::string run_fit(const FitArgs& a) {
    const auto form = parse_law_form(a.form);
    const auto series = ingest_csv(a.csv);
    return fit_report_json(fit(series, form)).dump(2) + "\n";
}

struct SimulateArgs {
    std::string target, draft, mode = "greedy", prefix;
    int cycles = 1, depth = 1, topc = 1, budget = 1;
    std::uint64_t seed = 0;
};

std::string run_simulate(const SimulateArgs& a) {
    const auto target = ToyLM::load(a.target);
    const auto draft = ToyLM::load(a.draft);
    std::vector<Token> prefix;
    if (!a.prefix.empty()) {
        for (Count t : parse_count_list(a.prefix, "prefix")) {
            if (t < 0 || t >= target.vocab()) throw ValidationError("prefix", "token out of range: " + std::to_string(t));
            prefix.push_back(static_cast<Token>(t));
        }
    }
    const TreeParams params{a.topc, a.depth, a.budget};
    const auto result = run_decode(target, draft, prefix, a.cycles, params, parse_draft_mode(a.mode), a.seed);
    return "acceptance_rate=" + format_double(result.acceptance_rate) + "\n" + simulation_csv(result);
}

struct SweepArgs {
    std::string what, model, hardware, deploy, topk_range, batch_list, kappa_list = "0.9,1.0,1.1,1.2", acc_model, out;
    Count batch = 0;
};

std::string run_sweep(const SweepArgs& a) {
    const auto range = TopkRange::parse(a.topk_range);
    const auto spec = load_model_spec(a.model);
    const auto hw = load_hardware_spec(a.hardware);
    DeployConfig base = load_deploy_config(a.deploy);
    if (a.batch > 0) base.batch = a.batch;

    if (a.what == "topk-curve") {
        const auto acc = a.acc_model.empty() ? AcceptanceModel::constant(base.accepted_tokens)
                                             : AcceptanceModel::parse(a.acc_model);
        const auto batches = a.batch_list.empty() ? std::vector<Count>{base.batch}
                                                  : parse_count_list(a.batch_list, "batch-list");
        std::string out(kCurveCsvHeader);
        out += "\n";
        for (Count b : batches) {
            DeployConfig d = base;
            d.batch = b;
            validate(d);
            for (const auto& p : throughput_curve(spec, hw, d, acc, range)) out += curve_row(p) + "\n";
        }
        return out;
    }
    if (a.what == "interplay") {
        const auto batches = a.batch_list.empty() ? std::vector<Count>{base.batch}
                                                  : parse_count_list(a.batch_list, "batch-list");
        const auto kappas = parse_real_list(a.kappa_list, "kappa-list");
        return interplay_to_csv(interplay_sweep(spec, hw, base, batches, kappas, range));
    }
    throw ParseError("--what must be topk-curve or interplay, got '" + a.what + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Roofline analysis, top_k planning, scaling-law fitting and toy speculative decoding"};
    app.require_subcommand(1, 1);

    AnalyzeArgs analyze;
    auto* cmd_analyze = app.add_subcommand("analyze", "Per-op workload and roofline point of one cycle");
    cmd_analyze->add_option("--model", analyze.model, "Model config file")->required()->check(CLI::ExistingFile);
    cmd_analyze->add_option("--hardware", analyze.hardware, "Hardware config file")->required()->check(CLI::ExistingFile);
    cmd_analyze->add_option("--deploy", analyze.deploy, "Deploy config file")->required()->check(CLI::ExistingFile);
    cmd_analyze->add_option("--format", analyze.format, "Output format")->check(CLI::IsMember({"csv", "human"}));
    cmd_analyze->add_option("--acc-model", analyze.acc_model, "const:<t_acc> or eq8:<kappa>; default const from deploy");

    PlanArgs plan;
    auto* cmd_plan = app.add_subcommand("plan", "Solve for the top_k that reaches the critical intensity");
    cmd_plan->add_option("--model", plan.model, "Model config file")->required()->check(CLI::ExistingFile);
    cmd_plan->add_option("--hardware", plan.hardware, "Hardware config file")->required()->check(CLI::ExistingFile);
    auto* opt_batch = cmd_plan->add_option("--batch", plan.batch, "Batch size");
    cmd_plan->add_option("--batch-list", plan.batch_list, "Comma-separated batch sizes")->excludes(opt_batch);
    cmd_plan->add_option("--prefill", plan.prefill, "Prefill length s_pre");
    cmd_plan->add_option("--draft-tokens", plan.draft_tokens, "Tokens per draft step k");
    cmd_plan->add_option("--acc-model", plan.acc_model, "const:<t_acc> or eq8:<kappa>");

    FitArgs fit_args;
    auto* cmd_fit = app.add_subcommand("fit", "Fit a scaling law to x,y data");
    cmd_fit->add_option("--csv", fit_args.csv, "CSV with header x,y")->required()->check(CLI::ExistingFile);
    cmd_fit->add_option("--form", fit_args.form, "log10, log2 or invsqrt")->required();

    SimulateArgs sim;
    auto* cmd_sim = app.add_subcommand("simulate", "Draft-tree speculative decoding on toy models");
    cmd_sim->add_option("--target", sim.target, "Target ToyLM file")->required()->check(CLI::ExistingFile);
    cmd_sim->add_option("--draft", sim.draft, "Draft ToyLM file")->required()->check(CLI::ExistingFile);
    cmd_sim->add_option("--cycles", sim.cycles, "Draft/verify cycles")->required();
    cmd_sim->add_option("--depth", sim.depth, "Maximum tree depth")->required();
    cmd_sim->add_option("--topc", sim.topc, "Children per expanded node")->required();
    cmd_sim->add_option("--budget", sim.budget, "Maximum non-root tree nodes")->required();
    cmd_sim->add_option("--mode", sim.mode, "greedy or sampled");
    cmd_sim->add_option("--seed", sim.seed, "RNG seed");
    cmd_sim->add_option("--prefix", sim.prefix, "Comma-separated prompt tokens");

    SweepArgs sweep;
    auto* cmd_sweep = app.add_subcommand("sweep", "Emit throughput-curve or interplay CSV");
    cmd_sweep->add_option("--what", sweep.what, "topk-curve or interplay")->required();
    cmd_sweep->add_option("--model", sweep.model, "Model config file")->required()->check(CLI::ExistingFile);
    cmd_sweep->add_option("--hardware", sweep.hardware, "Hardware config file")->required()->check(CLI::ExistingFile);
    cmd_sweep->add_option("--deploy", sweep.deploy, "Base deploy config file")->required()->check(CLI::ExistingFile);
    cmd_sweep->add_option("--topk-range", sweep.topk_range, "start:stop:step, stop exclusive")->required();
    auto* opt_sweep_batch = cmd_sweep->add_option("--batch", sweep.batch, "Batch size override");
    cmd_sweep->add_option("--batch-list", sweep.batch_list, "Comma-separated batch sizes")->excludes(opt_sweep_batch);
    cmd_sweep->add_option("--kappa-list", sweep.kappa_list, "Comma-separated kappa values (interplay)");
    cmd_sweep->add_option("--acc-model", sweep.acc_model, "Acceptance model for topk-curve");
    cmd_sweep->add_option("--out", sweep.out, "Write CSV here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUser;
    }

    try {
        if (*cmd_analyze) {
            std::cout << run_analyze(analyze);
        } else if (*cmd_plan) {
            std::cout << run_plan(plan);
        } else if (*cmd_fit) {
            std::cout << run_fit(fit_args);
        } else if (*cmd_sim) {
            std::cout << run_simulate(sim);
        } else if (*cmd_sweep) {
            write_output(run_sweep(sweep), sweep.out);
        }
    } catch (const UserError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUser;
    } catch (const OverflowError& e) {
        // Sizes too large for exact 64-bit counts come from the inputs.
        std::cerr << "error: " << e.what() << "\n";
        return kExitUser;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return 0;
}
