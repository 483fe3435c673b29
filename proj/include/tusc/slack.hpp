#pragma once

// Next-best-alternative machinery and the three per-receiver slack
// conditions that decide whether a welfare-preserving redistribution can
// profit some coalition at a receiver's expense.

#include <tusc/core.hpp>

#include <map>
#include <optional>

namespace tusc {

struct NbaReport {
    int agent = -1;
    std::set<int> nba;     // argmax_{a != b} U_i(a)
    std::set<int> binding; // x in nba with every donor tight
    // x -> (J_x = donors at x, Jbar_x = tight donors at x)
    std::map<int, std::pair<std::set<int>, std::set<int>>> tight_donor_sets;
};

inline NbaReport nba_report(const Instance& inst, const Matrix& tau, int b, int i) {
    check_shape(inst, tau);
    if (inst.m < 2) throw PreconditionError("next-best alternatives require m >= 2");
    const Matrix U = effective_utilities(inst, tau);
    if (!full_coverage(U, b)) throw PreconditionError("winner lacks full coverage");

    NbaReport rep;
    rep.agent = i;
    Rational best;
    bool have = false;
    for (int a = 0; a < inst.m; ++a) {
        if (a == b) continue;
        if (!have || U[i][a] > best) {
            best = U[i][a];
            have = true;
        }
    }
    for (int a = 0; a < inst.m; ++a)
        if (a != b && U[i][a] == best) rep.nba.insert(a);

    for (int x : rep.nba) {
        std::set<int> J, Jbar;
        for (int j = 0; j < inst.n; ++j) {
            if (tau[j][x] < 0) {
                J.insert(j);
                if (U[j][x] == U[j][b]) Jbar.insert(j);
            }
        }
        if (J == Jbar) rep.binding.insert(x);
        rep.tight_donor_sets[x] = {std::move(J), std::move(Jbar)};
    }
    return rep;
}

// Everything construct_slack_witness needs to materialize a deviation.
struct WitnessPlan {
    int case_tag = 0; // 1, 2 or 3
    int receiver = -1;
    int winner = -1;
    int j_b = -1;               // donor receiving at b (cases 1 and 2)
    int j_star = -1;            // tight absorber (case 3)
    std::map<int, int> loose;   // x -> loose donor j_x withdrawing at x
    std::set<int> binding;      // case 3: alternatives routed through j_star
    Rational amount_b;          // withdrawn from the receiver at b
    Rational amount_nba;        // withdrawn from the receiver at each NBA alternative
};

struct SlackVerdict {
    int agent = -1;
    bool p1 = false;
    bool p2 = false;
    bool p3 = false;
    std::optional<WitnessPlan> plan;
};

namespace detail {
inline int lowest_donor(const Matrix& tau, int a) {
    for (int j = 0; j < static_cast<int>(tau.size()); ++j)
        if (tau[j][a] < 0) return j;
    return -1;
}
} // namespace detail

// Lemma-3 conditions for receiver i at winner b = f(P). P1 is evaluated
// first; P2/P3 are only meaningful (and only reported) when P1 fails, which
// under full coverage means U_i(b) ties its best rival.
inline SlackVerdict slack_conditions(const Instance& inst, const RuleSpec& rule, const State& st, int i) {
    validate_state(inst, rule, st);
    const int b = apply_rule(rule, st.profile);
    const Matrix U = effective_utilities(inst, st.tau);
    const auto sw = social_welfare_all(inst);
    const Rational max_sw = *std::max_element(sw.begin(), sw.end());
    if (sw[b] != max_sw) throw PreconditionError("winner does not maximize social welfare");
    if (!full_coverage(U, b)) throw PreconditionError("winner lacks full coverage");
    if (st.tau[i][b] <= 0) throw PreconditionError("agent receives nothing at the winner");

    SlackVerdict v;
    v.agent = i;

    // P1: strict slack at b. With m == 1 there is no rival, so the slack is
    // unbounded and only tau_i(b) limits the withdrawal.
    Rational max_rival;
    bool have_rival = false;
    for (int a = 0; a < inst.m; ++a) {
        if (a == b) continue;
        if (!have_rival || U[i][a] > max_rival) {
            max_rival = U[i][a];
            have_rival = true;
        }
    }
    if (!have_rival || U[i][b] > max_rival) {
        v.p1 = true;
        WitnessPlan plan;
        plan.case_tag = 1;
        plan.receiver = i;
        plan.winner = b;
        plan.j_b = detail::lowest_donor(st.tau, b); // exists by budget balance
        Rational amt = st.tau[i][b];
        if (have_rival) {
            const Rational beta = U[i][b] - max_rival;
            if (beta < amt) amt = beta;
        }
        plan.amount_b = amt / 2;
        v.plan = plan;
        return v;
    }

    const NbaReport rep = nba_report(inst, st.tau, b, i);
    for (int x : rep.nba)
        if (st.tau[i][x] <= 0) return v; // Case 1 of the necessity proof: all flags false

    // Bounds shared by P2 and P3: slack towards non-NBA alternatives and the
    // amounts i receives over b and each NBA alternative.
    Rational bound(0);
    bool have_bound = false;
    auto tighten = [&](const Rational& c) {
        if (!have_bound || c < bound) {
            bound = c;
            have_bound = true;
        }
    };
    for (int a = 0; a < inst.m; ++a)
        if (a != b && !rep.nba.count(a)) tighten(U[i][b] - U[i][a]);
    tighten(st.tau[i][b]);
    for (int x : rep.nba) tighten(st.tau[i][x]);

    if (rep.binding.empty()) {
        v.p2 = true;
        WitnessPlan plan;
        plan.case_tag = 2;
        plan.receiver = i;
        plan.winner = b;
        plan.j_b = detail::lowest_donor(st.tau, b);
        for (int x : rep.nba) {
            const auto& [J, Jbar] = rep.tight_donor_sets.at(x);
            for (int j : J)
                if (!Jbar.count(j)) {
                    plan.loose[x] = j;
                    tighten(-st.tau[j][x]);
                    break;
                }
        }
        // The receiver must keep b as unique truthful top after the
        // withdrawals, so NBA alternatives lose twice as much as b.
        plan.amount_nba = bound / 2;
        plan.amount_b = bound / 4;
        v.plan = plan;
        return v;
    }

    // P3: a single agent tight across every binding alternative.
    std::set<int> candidates;
    bool first = true;
    for (int x : rep.binding) {
        const auto& Jbar = rep.tight_donor_sets.at(x).second;
        if (first) {
            candidates = Jbar;
            first = false;
        } else {
            std::set<int> inter;
            for (int j : candidates)
                if (Jbar.count(j)) inter.insert(j);
            candidates = std::move(inter);
        }
        if (candidates.empty()) break;
    }
    if (candidates.empty()) return v;

    v.p3 = true;
    WitnessPlan plan;
    plan.case_tag = 3;
    plan.receiver = i;
    plan.winner = b;
    plan.j_star = *candidates.begin();
    plan.binding = rep.binding;
    for (int x : rep.binding) tighten(-st.tau[plan.j_star][x]);
    for (int x : rep.nba) {
        if (rep.binding.count(x)) continue;
        const auto& [J, Jbar] = rep.tight_donor_sets.at(x);
        for (int j : J)
            if (!Jbar.count(j)) {
                plan.loose[x] = j;
                tighten(-st.tau[j][x]);
                break;
            }
    }
    plan.amount_nba = bound / 2;
    plan.amount_b = bound / 4;
    v.plan = plan;
    return v;
}

} // namespace tusc
