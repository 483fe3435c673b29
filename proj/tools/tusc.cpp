// Command-line front end: construct / verify / devsearch / rafilter /
// dynamics. Machine report (JSON) on stdout, human summary on stderr.
// Exit codes: 0 ok or none-found, 1 witness found / unstable / cycle,
// 2 parse or flag error, 3 unsupported rule, 4 inconsistent state,
// 5 budget exhausted.

#include <tusc/tusc.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <iostream>

namespace {

using tusc::io::Json;

int verbosity() {
    const char* v = std::getenv("TUSC_VERBOSITY");
    if (!v) return 1;
    try {
        return std::stoi(v);
    } catch (...) {
        return 1;
    }
}

void emit(const Json& report, const std::string& summary) {
    std::cout << report.dump(2) << "\n";
    if (verbosity() >= 1) std::cerr << summary << "\n";
}

Json base_report(const std::string& command) {
    Json j;
    j["schema"] = tusc::io::schema_version;
    j["command"] = command;
    return j;
}

tusc::VariantMode parse_mode(const std::string& s) {
    if (s == "standard") return tusc::VariantMode::standard;
    if (s == "sticky") return tusc::VariantMode::sticky;
    if (s == "anonymous") return tusc::VariantMode::anonymous_recipient;
    throw tusc::io::ParseError("unknown mode \"" + s + "\"");
}

const char* mode_name(tusc::VariantMode m) {
    switch (m) {
        case tusc::VariantMode::standard: return "standard";
        case tusc::VariantMode::sticky: return "sticky";
        case tusc::VariantMode::anonymous_recipient: return "anonymous";
    }
    return "?";
}

struct GridFlags {
    int denominator = 1;
    std::string magnitude = "4";
    int coalition_cap = 1;
    std::uint64_t node_budget = 20'000'000;
    int target_alt = 0; // 1-based; 0 = unset

    tusc::GridSpec to_spec() const {
        tusc::GridSpec g;
        g.denominator = denominator;
        g.magnitude = tusc::parse_rational(magnitude);
        g.coalition_cap = coalition_cap;
        g.node_budget = node_budget;
        if (target_alt > 0) g.target_alt = target_alt - 1;
        return g;
    }
};

void add_grid_flags(CLI::App* cmd, GridFlags& g) {
    cmd->add_option("--denominator", g.denominator, "transfer delta granularity 1/d");
    cmd->add_option("--magnitude", g.magnitude, "max |delta|, rational \"p\" or \"p/q\"");
    cmd->add_option("--coalition-cap", g.coalition_cap, "max coalition size");
    cmd->add_option("--node-budget", g.node_budget, "search node budget");
}

int cmd_construct(const std::string& inst_path, int default_override) {
    auto doc = tusc::io::load_instance(inst_path);
    if (default_override > 0) {
        if (default_override > doc.inst.m) throw tusc::io::ParseError("default override out of range");
        doc.rule = tusc::RuleSpec::consensus(default_override - 1, doc.inst.m, doc.rule.tiebreak);
    }
    if (doc.rule.kind != tusc::RuleSpec::Kind::consensus) {
        std::cerr << "construct requires the consensus rule\n";
        return 3;
    }
    const auto t0 = std::chrono::steady_clock::now();
    const tusc::State st = tusc::construct_ir_sne(doc.inst, doc.rule.default_alt, doc.rule.tiebreak);
    const tusc::Verdict v = tusc::verify_ir_sne(doc.inst, doc.rule, st);
    const auto t1 = std::chrono::steady_clock::now();
    Json report = base_report("construct");
    report["state"] = tusc::io::serialize_state(st);
    report["verdict"] = tusc::io::serialize_verdict(v);
    if (verbosity() >= 2)
        report["elapsed_us"] = std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0).count();
    emit(report, std::string("constructed state is ") + (v.stable ? "stable" : "UNSTABLE"));
    return v.stable ? 0 : 1;
}

int cmd_verify(const std::string& inst_path, const std::string& state_path) {
    const auto doc = tusc::io::load_instance(inst_path);
    if (doc.rule.kind != tusc::RuleSpec::Kind::consensus) {
        std::cerr << "verify requires the consensus rule\n";
        return 3;
    }
    const tusc::State st = tusc::io::load_state(state_path, doc.inst.n, doc.inst.m);
    const tusc::Verdict v = tusc::verify_ir_sne(doc.inst, doc.rule, st);
    Json report = base_report("verify");
    report["verdict"] = tusc::io::serialize_verdict(v);
    emit(report, std::string("verdict: ") + tusc::reason_name(v.reason));
    if (v.reason == tusc::Verdict::Reason::state_inconsistent) return 4;
    return v.stable ? 0 : 1;
}

int cmd_devsearch(const std::string& inst_path, const std::string& state_path, const GridFlags& gf,
                  const std::string& mode_str) {
    const auto doc = tusc::io::load_instance(inst_path);
    const tusc::State st = tusc::io::load_state(state_path, doc.inst.n, doc.inst.m);
    const tusc::VariantMode mode = parse_mode(mode_str);
    const tusc::GridResult res = tusc::grid_search(doc.inst, doc.rule, st, gf.to_spec(), mode);
    Json report = base_report("devsearch");
    report["nodes"] = res.nodes;
    switch (res.kind) {
        case tusc::GridResult::Kind::none:
            report["result"] = "none-found";
            emit(report, "no IR deviation within the grid");
            return 0;
        case tusc::GridResult::Kind::found:
            report["result"] = "witness-found";
            report["witness"] = tusc::io::serialize_witness(*res.witness);
            emit(report, "IR deviation found");
            return 1;
        case tusc::GridResult::Kind::exhausted:
            report["result"] = "budget-exhausted";
            emit(report, "search budget exhausted");
            return 5;
    }
    return 2;
}

int cmd_rafilter(const std::string& inst_path, const std::string& state_path, int target_alt) {
    const auto doc = tusc::io::load_instance(inst_path);
    const tusc::State st = tusc::io::load_state(state_path, doc.inst.n, doc.inst.m);
    if (target_alt < 1 || target_alt > doc.inst.m)
        throw tusc::io::ParseError("--target-alt out of range");
    const int b = tusc::apply_rule(doc.rule, st.profile);
    Json report = base_report("rafilter");
    Json all = Json::array();
    for (int j = 0; j < doc.inst.n; ++j)
        all.push_back(tusc::io::serialize_ra_report(
            tusc::reallocatable_amount(doc.inst, st.tau, b, j, target_alt - 1)));
    const tusc::RaReport best = tusc::ra_filter(doc.inst, doc.rule, st, target_alt - 1);
    report["reports"] = std::move(all);
    report["best"] = tusc::io::serialize_ra_report(best);
    emit(report, std::string("best reallocatable-amount report ") + (best.passes ? "passes" : "fails"));
    return best.passes ? 1 : 0;
}

int cmd_dynamics(const std::string& inst_path, const std::string& state_path, const GridFlags& gf,
                 const std::string& mode_str, int max_steps) {
    const auto doc = tusc::io::load_instance(inst_path);
    const tusc::VariantMode mode = parse_mode(mode_str);
    tusc::State start = state_path.empty() ? tusc::truthful_state(doc.inst, doc.rule)
                                           : tusc::io::load_state(state_path, doc.inst.n, doc.inst.m);
    const tusc::DynamicsTrace trace =
        tusc::run_dynamics(doc.inst, doc.rule, mode, start, max_steps, gf.to_spec());
    Json report = base_report("dynamics");
    report["mode"] = mode_name(mode);
    report["trace"] = tusc::io::serialize_trace(trace);
    emit(report, std::string("terminal: ") + tusc::io::terminal_name(trace.terminal));
    switch (trace.terminal) {
        case tusc::DynamicsTrace::Terminal::fixpoint: return 0;
        case tusc::DynamicsTrace::Terminal::cycle: return 1;
        case tusc::DynamicsTrace::Terminal::budget_exhausted: return 5;
    }
    return 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact-arithmetic engine for outcome-contingent transfer equilibria"};
    app.require_subcommand(1);

    std::string inst_path, state_path, mode_str = "standard";
    int default_override = 0, target_alt = 0, max_steps = 50;
    GridFlags gf;

    auto* construct = app.add_subcommand("construct", "build a stable state for a consensus instance");
    construct->add_option("instance", inst_path)->required();
    construct->add_option("--default", default_override, "1-based default alternative override");

    auto* verify = app.add_subcommand("verify", "check a state for stability");
    verify->add_option("instance", inst_path)->required();
    verify->add_option("state", state_path)->required();

    auto* devsearch = app.add_subcommand("devsearch", "grid search for an IR deviation");
    devsearch->add_option("instance", inst_path)->required();
    devsearch->add_option("state", state_path)->required();
    devsearch->add_option("--mode", mode_str, "standard|sticky|anonymous");
    devsearch->add_option("--target-alt", gf.target_alt, "restrict to deviations electing this alternative");
    add_grid_flags(devsearch, gf);

    auto* rafilter = app.add_subcommand("rafilter", "reallocatable-amount reports for a candidate alternative");
    rafilter->add_option("instance", inst_path)->required();
    rafilter->add_option("state", state_path)->required();
    rafilter->add_option("--target-alt", target_alt, "1-based candidate alternative")->required();

    auto* dynamics = app.add_subcommand("dynamics", "iterate first-found deviations until fixpoint or cycle");
    dynamics->add_option("instance", inst_path)->required();
    dynamics->add_option("--state", state_path, "start state (default: truthful, contract-free)");
    dynamics->add_option("--mode", mode_str, "standard|sticky|anonymous");
    dynamics->add_option("--max-steps", max_steps);
    add_grid_flags(dynamics, gf);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (construct->parsed()) return cmd_construct(inst_path, default_override);
        if (verify->parsed()) return cmd_verify(inst_path, state_path);
        if (devsearch->parsed()) return cmd_devsearch(inst_path, state_path, gf, mode_str);
        if (rafilter->parsed()) return cmd_rafilter(inst_path, state_path, target_alt);
        if (dynamics->parsed()) return cmd_dynamics(inst_path, state_path, gf, mode_str, max_steps);
    } catch (const tusc::io::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const tusc::StateError& e) {
        std::cerr << "inconsistent state: " << e.what() << "\n";
        return 4;
    } catch (const tusc::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
