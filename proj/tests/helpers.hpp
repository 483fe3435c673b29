#pragma once

// Shared test fixtures and generators.

#include <tusc/tusc.hpp>

#include <random>
#include <string>

namespace tt {

using namespace tusc;

inline std::string data_path(const std::string& name) { return std::string(TUSC_DATA_DIR) + "/" + name; }

// n=5, m=2 worked example: default alternative 2, welfare 17 vs 13.
inline Instance showcase_instance() {
    return Instance{5, 2, {{2, 4}, {1, 1}, {2, 3}, {1, 2}, {11, 3}}};
}

inline RuleSpec showcase_rule() { return RuleSpec::consensus(1, 2); }

// The known stable state of the worked example.
inline State showcase_state() {
    State st;
    st.tau = {{2, 0}, {0, 0}, {1, 0}, {1, 0}, {-4, 0}};
    st.profile = {{0, 1}, {0, 1}, {0, 1}, {0, 1}, {0, 1}};
    st.coalition = {0, 1, 2, 3, 4};
    return st;
}

// Two-agent instance whose sticky dynamics cycle forever.
inline Instance two_agent_cycle_instance() { return Instance{2, 2, {{3, 0}, {0, 1}}}; }

// Three-agent instance (tie parameter 1/2) whose anonymous-recipient
// dynamics cycle forever.
inline Instance three_agent_cycle_instance() {
    return Instance{3, 2, {{1, 1}, {1, 2}, {Rational(7, 2), 1}}};
}

// The four blocking states of the three-agent cycle, in order; winners
// alternate 1, 2, 1, 2. Profiles are truthful, coalitions are the donors.
inline std::vector<State> three_agent_cycle_states() {
    const Instance inst = three_agent_cycle_instance();
    const RuleSpec rule = RuleSpec::consensus(1, 2);
    const Rational h(1, 2);
    std::vector<Matrix> taus = {
        {{0, -1}, {1, 0}, {-1, 1}},
        {{0, -1}, {1, 1}, {-1, 0}},
        {{0, -1}, {2 + h, 1}, {-2 - h, 0}},
        {{0, -1}, {2 + h, 0}, {-2 - h, 1}},
    };
    std::vector<State> states;
    for (const auto& tau : taus) {
        State st;
        st.tau = tau;
        st.profile = truthful_profile(effective_utilities(inst, tau), rule.tiebreak);
        for (int i = 0; i < inst.n; ++i)
            for (int a = 0; a < inst.m; ++a)
                if (tau[i][a] < 0) st.coalition.insert(i);
        states.push_back(std::move(st));
    }
    return states;
}

inline Instance random_instance(std::mt19937& rng, int max_n = 6, int max_m = 4, int max_u = 20) {
    std::uniform_int_distribution<int> nd(1, max_n), md(1, max_m), ud(0, max_u);
    Instance inst;
    inst.n = nd(rng);
    inst.m = md(rng);
    inst.u.assign(inst.n, std::vector<Rational>(inst.m));
    for (auto& row : inst.u)
        for (auto& v : row) v = ud(rng);
    return inst;
}

// A default alternative that does not maximize social welfare, if one exists.
inline std::optional<int> non_maximizing_default(const Instance& inst, std::mt19937& rng) {
    const auto sw = social_welfare_all(inst);
    const Rational mx = *std::max_element(sw.begin(), sw.end());
    std::vector<int> losers;
    for (int a = 0; a < inst.m; ++a)
        if (sw[a] < mx) losers.push_back(a);
    if (losers.empty()) return std::nullopt;
    return losers[std::uniform_int_distribution<size_t>(0, losers.size() - 1)(rng)];
}

} // namespace tt
