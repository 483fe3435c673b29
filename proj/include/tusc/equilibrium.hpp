#pragma once

// Consensus-rule equilibrium theory: the full stability verifier and the
// linear-time constructor that stacks transfers along the welfare order.

#include <tusc/witness.hpp>

namespace tusc {

struct Verdict {
    enum class Reason {
        stable_by_theorem_1,
        ir_infeasible_from_truthful,
        not_welfare_maximizing,
        coverage_violated,
        slack_condition,
        state_inconsistent,
    };
    bool stable = false;
    Reason reason = Reason::stable_by_theorem_1;
    int agent = -1;      // named violator where applicable
    int slack_case = 0;  // 1..3 when reason == slack_condition
    std::optional<DeviationWitness> witness;
    std::string detail;
};

inline const char* reason_name(Verdict::Reason r) {
    switch (r) {
        case Verdict::Reason::stable_by_theorem_1: return "stable-by-theorem-1";
        case Verdict::Reason::ir_infeasible_from_truthful: return "IR-infeasible-from-truthful";
        case Verdict::Reason::not_welfare_maximizing: return "not-welfare-maximizing";
        case Verdict::Reason::coverage_violated: return "coverage-violated";
        case Verdict::Reason::slack_condition: return "slack-condition";
        case Verdict::Reason::state_inconsistent: return "state-inconsistent";
    }
    return "?";
}

inline Verdict verify_ir_sne(const Instance& inst, const RuleSpec& rule, const State& st) {
    if (rule.kind != RuleSpec::Kind::consensus)
        throw PreconditionError("verification supports the consensus rule only");
    Verdict v;
    try {
        validate_state(inst, rule, st);
    } catch (const StateError& e) {
        v.stable = false;
        v.reason = Verdict::Reason::state_inconsistent;
        v.agent = e.agent;
        v.detail = e.what();
        return v;
    }

    const auto sw = social_welfare_all(inst);
    const Rational max_sw = *std::max_element(sw.begin(), sw.end());
    const State truthful = truthful_state(inst, rule);
    const int b = apply_rule(rule, st.profile);

    // The truthful, contract-free state is stable exactly when its winner
    // maximizes welfare; the coverage condition does not apply to it.
    if (st == truthful) {
        if (sw[b] == max_sw) {
            v.stable = true;
            v.reason = Verdict::Reason::stable_by_theorem_1;
        } else {
            v.stable = false;
            v.reason = Verdict::Reason::not_welfare_maximizing;
            v.witness = grand_coalition_deviation(inst, rule, st);
        }
        return v;
    }

    // Condition 1: IR-feasibility from the truthful state.
    bool feasible = false;
    try {
        feasible = is_ir_deviation(inst, rule, truthful, st);
    } catch (const StateError& e) {
        v.agent = e.agent;
        v.detail = e.what();
    }
    if (!feasible) {
        v.stable = false;
        v.reason = Verdict::Reason::ir_infeasible_from_truthful;
        if (v.agent < 0) {
            const int w0 = apply_rule(rule, truthful.profile);
            for (int i : st.coalition) {
                if (inst.u[i][b] + st.tau[i][b] < inst.u[i][w0]) {
                    v.agent = i;
                    v.detail = "worse off than at the truthful state";
                    break;
                }
            }
            if (v.agent < 0) v.detail = "no coalition member strictly gains over the truthful state";
        }
        return v;
    }

    // Condition 2: efficiency and coverage.
    if (sw[b] != max_sw) {
        v.stable = false;
        v.reason = Verdict::Reason::not_welfare_maximizing;
        v.witness = grand_coalition_deviation(inst, rule, st);
        return v;
    }
    const Matrix U = effective_utilities(inst, st.tau);
    if (!full_coverage(U, b)) {
        v.stable = false;
        v.reason = Verdict::Reason::coverage_violated;
        for (int i = 0; i < inst.n && v.agent < 0; ++i)
            for (int a = 0; a < inst.m; ++a)
                if (U[i][a] > U[i][b]) {
                    v.agent = i;
                    v.detail = "prefers alternative " + std::to_string(a + 1) + " over the winner";
                    break;
                }
        return v;
    }
    // Full coverage of a maximizer forces equal utilities across all
    // maximizers (the inequalities bind); a failure here would indicate an
    // arithmetic bug, not an unstable state.
    for (int x = 0; x < inst.m; ++x) {
        if (sw[x] != max_sw) continue;
        for (int i = 0; i < inst.n; ++i)
            if (U[i][x] != U[i][b]) throw Error("coverage invariant violated across welfare maximizers");
    }

    // Condition 3: no receiver at b trips a slack condition.
    for (int i = 0; i < inst.n; ++i) {
        if (st.tau[i][b] <= 0) continue;
        const SlackVerdict sv = slack_conditions(inst, rule, st, i);
        if (sv.p1 || sv.p2 || sv.p3) {
            v.stable = false;
            v.reason = Verdict::Reason::slack_condition;
            v.agent = i;
            v.slack_case = sv.p1 ? 1 : sv.p2 ? 2 : 3;
            v.witness = construct_slack_witness(inst, rule, st, sv);
            return v;
        }
    }

    v.stable = true;
    v.reason = Verdict::Reason::stable_by_theorem_1;
    return v;
}

// Stacked-transfer construction. Alternatives strictly above the default in
// social welfare form a chain ending at the default; every alternative weakly
// below the default is pinned by welfare-ratio scaling. Walking the chain
// upward, receivers are lifted exactly to the next level's utility and donors
// pay the deficit greedily in agent order, each down to (at worst) the next
// level. Greedy filling keeps the arithmetic division-free, so integer inputs
// stay integer no matter how long the chain is; a proportional split instead
// compounds denominators exponentially in the chain length.
inline State construct_ir_sne(const Instance& inst, int a_star, Ranking tiebreak = {}) {
    inst.validate();
    if (a_star < 0 || a_star >= inst.m) throw DimensionError("default alternative out of range");
    const RuleSpec rule = RuleSpec::consensus(a_star, inst.m, std::move(tiebreak));
    const auto sw = social_welfare_all(inst);
    const Rational max_sw = *std::max_element(sw.begin(), sw.end());
    // If the truthful winner (the default, or a unanimous favorite) already
    // maximizes welfare, the truthful contract-free state is the answer.
    // A unanimous favorite always maximizes welfare, so past this point the
    // truthful winner is the default. The unanimity probe avoids building the
    // full sorted profile: each agent's tiebroken top is O(m) and mismatches
    // exit early.
    {
        const auto tbpos = tiebreak_positions(rule.tiebreak);
        int unanimous = -1;
        for (int i = 0; i < inst.n; ++i) {
            int top = 0;
            for (int a = 1; a < inst.m; ++a)
                if (inst.u[i][a] > inst.u[i][top] ||
                    (inst.u[i][a] == inst.u[i][top] && tbpos[a] < tbpos[top]))
                    top = a;
            if (i == 0) {
                unanimous = top;
            } else if (top != unanimous) {
                unanimous = -1;
                break;
            }
        }
        const int truthful_winner = unanimous >= 0 ? unanimous : a_star;
        if (sw[truthful_winner] == max_sw) return truthful_state(inst, rule);
    }

    std::vector<int> chain; // sw strictly above the default, best first
    std::vector<int> scaled;
    for (int a = 0; a < inst.m; ++a) {
        if (a == a_star) continue;
        (sw[a] > sw[a_star] ? chain : scaled).push_back(a);
    }
    std::stable_sort(chain.begin(), chain.end(), [&](int a, int b) { return sw[a] > sw[b]; });
    std::stable_sort(scaled.begin(), scaled.end(), [&](int a, int b) { return sw[a] > sw[b]; });

    State st;
    st.tau.assign(inst.n, std::vector<Rational>(inst.m, Rational(0)));
    for (int a : scaled) {
        if (sw[a_star] == 0) {
            // Nonnegative utilities with zero welfare force a zero column.
            continue;
        }
        const Rational ratio = sw[a] / sw[a_star];
        for (int i = 0; i < inst.n; ++i) st.tau[i][a] = ratio * inst.u[i][a_star] - inst.u[i][a];
    }

    // U at the level just below the current chain element; starts at the
    // default's column. Total surplus exceeds the deficit by exactly the
    // welfare gap to the level below, so the greedy fill always terminates
    // with deficit 0. When the chain columns are all integral the walk runs
    // on plain big integers, which skips per-operation normalization.
    std::vector<char> donor_ever(inst.n, 0);
    bool integral = rational_den(sw[a_star]) == 1;
    for (int i = 0; i < inst.n && integral; ++i) {
        if (rational_den(inst.u[i][a_star]) != 1) integral = false;
        for (size_t k = 0; k < chain.size() && integral; ++k)
            if (rational_den(inst.u[i][chain[k]]) != 1) integral = false;
    }
    if (integral) {
        std::vector<BigInt> next(inst.n), col(inst.n);
        for (int i = 0; i < inst.n; ++i) next[i] = rational_num(inst.u[i][a_star]);
        for (int k = static_cast<int>(chain.size()) - 1; k >= 0; --k) {
            const int t = chain[k];
            for (int i = 0; i < inst.n; ++i) col[i] = rational_num(inst.u[i][t]);
            BigInt deficit(0);
            for (int i = 0; i < inst.n; ++i)
                if (col[i] < next[i]) deficit += next[i] - col[i];
            for (int i = 0; i < inst.n; ++i) {
                if (col[i] < next[i]) {
                    st.tau[i][t] = Rational(next[i] - col[i]); // lifted exactly
                } else if (col[i] > next[i] && deficit > 0) {
                    const BigInt pay = std::min(deficit, BigInt(col[i] - next[i]));
                    donor_ever[i] = 1;
                    st.tau[i][t] = Rational(-pay);
                    deficit -= pay;
                    next[i] = col[i] - pay;
                } else {
                    next[i] = std::move(col[i]);
                }
            }
        }
    } else {
        std::vector<Rational> next(inst.n);
        for (int i = 0; i < inst.n; ++i) next[i] = inst.u[i][a_star];
        for (int k = static_cast<int>(chain.size()) - 1; k >= 0; --k) {
            const int t = chain[k];
            Rational deficit(0);
            for (int i = 0; i < inst.n; ++i)
                if (inst.u[i][t] < next[i]) deficit += next[i] - inst.u[i][t];
            for (int i = 0; i < inst.n; ++i) {
                const Rational& ui = inst.u[i][t];
                if (ui < next[i]) {
                    st.tau[i][t] = next[i] - ui; // lifted exactly; next[i] unchanged
                } else if (ui > next[i] && deficit > 0) {
                    const Rational pay = std::min(deficit, Rational(ui - next[i]));
                    donor_ever[i] = 1;
                    st.tau[i][t] = -pay;
                    deficit -= pay;
                    next[i] = ui - pay;
                } else {
                    next[i] = ui;
                }
            }
        }
    }

    const int b = chain.front();
    for (int i = 0; i < inst.n; ++i) {
        // Donors anywhere (chain or scaled columns) must participate.
        const bool donor = donor_ever[i] ||
                           std::any_of(st.tau[i].begin(), st.tau[i].end(),
                                       [](const Rational& v) { return v < 0; });
        if (donor) {
            st.coalition.insert(i);
            continue;
        }
        // Strategic voters: anyone whose base-utility argmax set is not
        // exactly the winner (ties included, matching S = N in the worked
        // example).
        bool unique_top_b = true;
        for (int a = 0; a < inst.m && unique_top_b; ++a) {
            if (a == b) continue;
            if (inst.u[i][a] >= inst.u[i][b]) unique_top_b = false;
        }
        if (!unique_top_b) st.coalition.insert(i);
    }

    // The move from the truthful state must be strict for some participant.
    // The welfare gap guarantees a strict gainer at b; pull the lowest one in
    // if every current member merely breaks even.
    {
        bool strict = false;
        for (int i : st.coalition)
            if (inst.u[i][b] + st.tau[i][b] > inst.u[i][a_star]) strict = true;
        if (!strict) {
            for (int i = 0; i < inst.n; ++i) {
                if (inst.u[i][b] + st.tau[i][b] > inst.u[i][a_star]) {
                    st.coalition.insert(i);
                    break;
                }
            }
        }
    }

    // Coalition members may vote any ranking topping the winner; a single
    // welfare-ordered ranking works for all of them. Outsiders get their
    // exact truthful ranking.
    Ranking member_order;
    member_order.reserve(inst.m);
    member_order.insert(member_order.end(), chain.begin(), chain.end());
    member_order.push_back(a_star);
    member_order.insert(member_order.end(), scaled.begin(), scaled.end());

    const auto tbpos = tiebreak_positions(rule.tiebreak);
    Matrix U; // only needed when outsiders exist
    st.profile.resize(inst.n);
    for (int i = 0; i < inst.n; ++i) {
        if (st.coalition.count(i)) {
            st.profile[i] = member_order;
        } else {
            if (U.empty()) U = effective_utilities(inst, st.tau);
            st.profile[i] = truthful_ranking(U[i], tbpos);
        }
    }
    return st;
}

} // namespace tusc
