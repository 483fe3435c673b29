#pragma once

// Constructive deviation witnesses: the three slack cases and the
// grand-coalition move to a welfare maximizer. Every constructor validates
// its own output with is_ir_deviation before returning.

#include <tusc/slack.hpp>

namespace tusc {

struct DeviationWitness {
    enum class Case { p1, p2, p3, grand_coalition, ra_lexicographic, grid };
    State to_state;
    RuleSpec rule;
    Case case_tag = Case::grid;
    std::optional<Rational> epsilon;
    // Per-member utility delta at the new winner relative to the old one.
    std::vector<std::pair<int, Rational>> ledger;
};

inline const char* case_name(DeviationWitness::Case c) {
    switch (c) {
        case DeviationWitness::Case::p1: return "P1";
        case DeviationWitness::Case::p2: return "P2";
        case DeviationWitness::Case::p3: return "P3";
        case DeviationWitness::Case::grand_coalition: return "grand-coalition";
        case DeviationWitness::Case::ra_lexicographic: return "RA-lexicographic";
        case DeviationWitness::Case::grid: return "grid";
    }
    return "?";
}

namespace detail {

inline Ranking ranking_with_top(const std::vector<Rational>& row, const std::vector<int>& tbpos, int top) {
    Ranking r = truthful_ranking(row, tbpos);
    auto it = std::find(r.begin(), r.end(), top);
    std::rotate(r.begin(), it, it + 1);
    return r;
}

// Completes a witness: members vote for the intended winner, everyone else
// votes truthfully, and any agent whose truthful top under the new transfers
// is not the intended winner is pulled into the coalition (their vote is the
// only thing that changes, so IR holds weakly for them). `excluded` must end
// up outside the coalition and topping the winner truthfully.
inline State finalize_towards_winner(const Instance& inst, const RuleSpec& rule, const State& from,
                                     Matrix tau2, Coalition members, int winner, int excluded = -1) {
    const Matrix U2 = effective_utilities(inst, tau2);
    const auto tbpos = tiebreak_positions(rule.tiebreak);
    for (int k = 0; k < inst.n; ++k) {
        if (k == excluded || members.count(k)) continue;
        if (truthful_top(U2[k], tbpos) != winner) members.insert(k);
    }
    if (excluded >= 0 && members.count(excluded))
        throw Error("witness construction requires the sacrificed receiver outside the coalition");
    State to;
    to.tau = std::move(tau2);
    to.coalition = std::move(members);
    to.profile.resize(inst.n);
    for (int k = 0; k < inst.n; ++k) {
        if (to.coalition.count(k))
            to.profile[k] = ranking_with_top(U2[k], tbpos, winner);
        else
            to.profile[k] = truthful_ranking(U2[k], tbpos);
    }
    return to;
}

inline std::vector<std::pair<int, Rational>> utility_ledger(const Instance& inst, const RuleSpec& rule,
                                                            const State& from, const State& to) {
    const int w_from = apply_rule(rule, from.profile);
    const int w_to = apply_rule(rule, to.profile);
    std::vector<std::pair<int, Rational>> ledger;
    for (int i : to.coalition)
        ledger.emplace_back(i, (inst.u[i][w_to] + to.tau[i][w_to]) - (inst.u[i][w_from] + from.tau[i][w_from]));
    return ledger;
}

} // namespace detail

inline DeviationWitness construct_slack_witness(const Instance& inst, const RuleSpec& rule,
                                                const State& st, const SlackVerdict& verdict) {
    if (!verdict.p1 && !verdict.p2 && !verdict.p3)
        throw PreconditionError("no slack condition holds");
    const WitnessPlan& plan = *verdict.plan;
    const int i = plan.receiver;
    const int b = plan.winner;

    Matrix tau2 = st.tau;
    Coalition active;
    if (plan.case_tag == 1) {
        tau2[i][b] -= plan.amount_b;
        tau2[plan.j_b][b] += plan.amount_b;
        active.insert(plan.j_b);
    } else {
        tau2[i][b] -= plan.amount_b;
        const int sink_b = plan.case_tag == 2 ? plan.j_b : plan.j_star;
        tau2[sink_b][b] += plan.amount_b;
        active.insert(sink_b);
        for (const auto& [x, jx] : plan.loose) {
            tau2[i][x] -= plan.amount_nba;
            tau2[jx][x] += plan.amount_nba;
            active.insert(jx);
        }
        for (int x : plan.binding) { // case 3 only
            tau2[i][x] -= plan.amount_nba;
            tau2[plan.j_star][x] += plan.amount_nba;
        }
    }

    DeviationWitness w;
    w.rule = rule;
    w.case_tag = plan.case_tag == 1   ? DeviationWitness::Case::p1
                 : plan.case_tag == 2 ? DeviationWitness::Case::p2
                                      : DeviationWitness::Case::p3;
    w.epsilon = plan.amount_b;
    w.to_state = detail::finalize_towards_winner(inst, rule, st, std::move(tau2), std::move(active), b, i);
    if (!is_ir_deviation(inst, rule, st, w.to_state))
        throw Error("slack witness failed IR validation");
    if (apply_rule(rule, w.to_state.profile) != b)
        throw Error("slack witness changed the winner");
    w.ledger = detail::utility_ledger(inst, rule, st, w.to_state);
    return w;
}

// Prop.-1 move: the grand coalition switches to the lowest-index welfare
// maximizer, keeps the old winner's column as the disagreement payoff, and
// splits the welfare gain equally.
inline DeviationWitness grand_coalition_deviation(const Instance& inst, const RuleSpec& rule, const State& st) {
    const int c = apply_rule(rule, st.profile);
    const auto sw = social_welfare_all(inst);
    const Rational max_sw = *std::max_element(sw.begin(), sw.end());
    if (sw[c] == max_sw) throw PreconditionError("winner already maximizes social welfare");
    int b = 0;
    while (sw[b] != max_sw) ++b;

    const Rational share = (sw[b] - sw[c]) / inst.n;
    Matrix tau2(inst.n, std::vector<Rational>(inst.m, Rational(0)));
    for (int i = 0; i < inst.n; ++i) {
        const Rational target_b = inst.u[i][c] + st.tau[i][c] + share; // U'_i(b)
        tau2[i][c] = st.tau[i][c];
        tau2[i][b] = target_b - inst.u[i][b];
        for (int a = 0; a < inst.m; ++a) {
            if (a == b || a == c) continue;
            // Cap every other alternative below b by welfare-ratio scaling;
            // sw[b] > sw[c] >= 0 so the division is safe.
            tau2[i][a] = (sw[a] / sw[b]) * target_b - inst.u[i][a];
        }
    }

    Coalition members;
    const Matrix U2 = effective_utilities(inst, tau2);
    const auto tbpos = tiebreak_positions(rule.tiebreak);
    for (int i = 0; i < inst.n; ++i)
        if (tau2[i] != st.tau[i] || truthful_top(U2[i], tbpos) != b) members.insert(i);
    if (members.empty()) members.insert(0); // n == 1 pure revote

    DeviationWitness w;
    w.rule = rule;
    w.case_tag = DeviationWitness::Case::grand_coalition;
    w.epsilon = share;
    w.to_state = detail::finalize_towards_winner(inst, rule, st, std::move(tau2), std::move(members), b);
    if (!is_ir_deviation(inst, rule, st, w.to_state))
        throw Error("grand-coalition witness failed IR validation");
    if (apply_rule(rule, w.to_state.profile) != b)
        throw Error("grand-coalition witness missed the welfare maximizer");
    w.ledger = detail::utility_ledger(inst, rule, st, w.to_state);
    return w;
}

} // namespace tusc
