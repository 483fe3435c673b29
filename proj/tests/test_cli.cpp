#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <string>

namespace {

struct RunResult {
    int exit_code;
    std::string output; // stdout and stderr combined
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(TUSC_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[4096];
    size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
    const int status = pclose(pipe);
    REQUIRE(status >= 0);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string fixture(const std::string& name) { return tt::data_path(name); }

nlohmann::json first_json(const std::string& out) {
    // extract the JSON report; stream buffering may reorder it against the
    // one-line human summary, which never contains braces
    const size_t lo = out.find('{');
    const size_t hi = out.rfind('}');
    REQUIRE(lo != std::string::npos);
    REQUIRE(hi != std::string::npos);
    return nlohmann::json::parse(out.substr(lo, hi - lo + 1));
}

} // namespace

TEST_CASE("construct emits the known transfers and verifies them") {
    const auto r = run_cli("construct " + fixture("showcase_instance.json"));
    CHECK(r.exit_code == 0);
    const auto j = first_json(r.output);
    CHECK(j["command"] == "construct");
    const auto& tau = j["state"]["transfers"];
    CHECK(tau[0][0] == "2");
    CHECK(tau[1][0] == "0");
    CHECK(tau[2][0] == "1");
    CHECK(tau[3][0] == "1");
    CHECK(tau[4][0] == "-4");
    CHECK(j["verdict"]["stable"] == true);
}

TEST_CASE("construct honors the default override") {
    // overriding to the welfare-maximizing alternative yields the truthful,
    // contract-free state
    const auto r = run_cli("construct " + fixture("showcase_instance.json") + " --default 1");
    CHECK(r.exit_code == 0);
    const auto j = first_json(r.output);
    CHECK(j["state"]["coalition"].empty());
}

TEST_CASE("construct refuses non-consensus rules") {
    const auto r = run_cli("construct " + fixture("lexicographic_instance.json"));
    CHECK(r.exit_code == 3);
}

TEST_CASE("verify: stable, unstable, and inconsistent states") {
    const std::string inst = fixture("showcase_instance.json");

    SECTION("stable state exits 0") {
        const auto r = run_cli("verify " + inst + " " + fixture("showcase_state.json"));
        CHECK(r.exit_code == 0);
        CHECK(first_json(r.output)["verdict"]["reason"] == "stable-by-theorem-1");
    }
    SECTION("truthful state exits 1 with a grand-coalition witness") {
        const auto r = run_cli("verify " + inst + " " + fixture("showcase_truthful_state.json"));
        CHECK(r.exit_code == 1);
        const auto j = first_json(r.output);
        CHECK(j["verdict"]["reason"] == "not-welfare-maximizing");
        REQUIRE(j["verdict"].contains("witness"));
        CHECK(j["verdict"]["witness"]["to_state"]["coalition"].size() == 5);
    }
    SECTION("inconsistent state exits 4 naming the agent") {
        const auto r = run_cli("verify " + inst + " " + fixture("showcase_bad_state.json"));
        CHECK(r.exit_code == 4);
        CHECK(first_json(r.output)["verdict"]["agent"] == 5);
    }
}

TEST_CASE("malformed input exits 2 with the offending position") {
    const auto r = run_cli("verify " + fixture("malformed_instance.json") + " " +
                           fixture("showcase_state.json"));
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("3/0") != std::string::npos);
    CHECK(r.output.find("row") != std::string::npos);
    CHECK(r.output.find("column") != std::string::npos);
}

TEST_CASE("unknown flags exit 2") {
    const auto r = run_cli("verify --frobnicate x y");
    CHECK(r.exit_code == 2);
}

TEST_CASE("devsearch exit codes distinguish found, none, and exhausted") {
    const std::string inst = fixture("showcase_instance.json");
    const std::string grid = " --denominator 2 --magnitude 8 --coalition-cap 5";

    SECTION("witness found exits 1") {
        const auto r = run_cli("devsearch " + inst + " " + fixture("showcase_truthful_state.json") + grid);
        CHECK(r.exit_code == 1);
        const auto j = first_json(r.output);
        CHECK(j["result"] == "witness-found");
        CHECK(j["witness"]["to_state"]["coalition"] == nlohmann::json::array({5}));
    }
    SECTION("stable state exits 0") {
        const auto r = run_cli("devsearch " + inst + " " + fixture("showcase_state.json") + grid);
        CHECK(r.exit_code == 0);
        CHECK(first_json(r.output)["result"] == "none-found");
    }
    SECTION("tiny node budget exits 5") {
        const auto r =
            run_cli("devsearch " + inst + " " + fixture("showcase_state.json") + grid + " --node-budget 3");
        CHECK(r.exit_code == 5);
        CHECK(first_json(r.output)["result"] == "budget-exhausted");
    }
}

TEST_CASE("rafilter reports all agents and exits 0 when nothing passes") {
    const auto r = run_cli("rafilter " + fixture("showcase_instance.json") + " " +
                           fixture("showcase_state.json") + " --target-alt 2");
    CHECK(r.exit_code == 0);
    const auto j = first_json(r.output);
    CHECK(j["reports"].size() == 5);
    CHECK(j["best"]["passes"] == false);
}

TEST_CASE("dynamics detects the sticky cycle and exits 1") {
    const auto r = run_cli("dynamics " + fixture("two_agent_cycle_instance.json") +
                           " --mode sticky --denominator 2 --magnitude 6 --coalition-cap 2 --max-steps 20");
    CHECK(r.exit_code == 1);
    const auto j = first_json(r.output);
    CHECK(j["trace"]["terminal"] == "cycle");
    CHECK(j["trace"]["cycle_period"].get<int>() >= 2);
}

TEST_CASE("dynamics reaches a fixpoint from a stable state and exits 0") {
    const auto r = run_cli("dynamics " + fixture("showcase_instance.json") + " --state " +
                           fixture("showcase_state.json") +
                           " --denominator 2 --magnitude 8 --coalition-cap 5 --max-steps 5");
    CHECK(r.exit_code == 0);
    CHECK(first_json(r.output)["trace"]["terminal"] == "fixpoint");
}
