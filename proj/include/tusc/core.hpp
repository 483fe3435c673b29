#pragma once

// Primitive operations: contract netting, effective utilities, truthful
// profiles, the two concrete AMR rules, coverage / participation predicates,
// state validation and the IR-deviation test.

#include <tusc/types.hpp>

#include <algorithm>

namespace tusc {

// tau_i(a) = incoming minus outgoing. The netted form is budget balanced by
// construction (each promise appears once with each sign).
inline Matrix net_contracts(const ContractMatrix& cm) {
    cm.validate();
    Matrix tau(cm.n, std::vector<Rational>(cm.m, Rational(0)));
    for (int i = 0; i < cm.n; ++i)
        for (int j = 0; j < cm.n; ++j)
            for (int a = 0; a < cm.m; ++a) {
                const Rational& p = cm.c[i][j][a];
                if (p == 0) continue;
                tau[j][a] += p;
                tau[i][a] -= p;
            }
    return tau;
}

inline bool is_budget_balanced(const Matrix& tau) {
    if (tau.empty()) return true;
    const int m = static_cast<int>(tau[0].size());
    for (int a = 0; a < m; ++a) {
        Rational sum(0);
        for (const auto& row : tau) sum += row[a];
        if (sum != 0) return false;
    }
    return true;
}

inline void check_shape(const Instance& inst, const Matrix& tau) {
    if (static_cast<int>(tau.size()) != inst.n) throw DimensionError("transfer scheme has wrong row count");
    for (const auto& row : tau)
        if (static_cast<int>(row.size()) != inst.m)
            throw DimensionError("transfer scheme has wrong column count");
}

inline Matrix effective_utilities(const Instance& inst, const Matrix& tau) {
    check_shape(inst, tau);
    Matrix U = inst.u;
    for (int i = 0; i < inst.n; ++i)
        for (int a = 0; a < inst.m; ++a) U[i][a] += tau[i][a];
    return U;
}

inline Rational social_welfare(const Instance& inst, int a) {
    if (a < 0 || a >= inst.m) throw DimensionError("alternative out of range");
    Rational sw(0);
    for (int i = 0; i < inst.n; ++i) sw += inst.u[i][a];
    return sw;
}

inline std::vector<Rational> social_welfare_all(const Instance& inst) {
    std::vector<Rational> sw(inst.m, Rational(0));
    for (int i = 0; i < inst.n; ++i)
        for (int a = 0; a < inst.m; ++a) sw[a] += inst.u[i][a];
    return sw;
}

// Positions of each alternative in the tiebreak order; lower = preferred.
inline std::vector<int> tiebreak_positions(const Ranking& tiebreak) {
    std::vector<int> pos(tiebreak.size());
    for (int k = 0; k < static_cast<int>(tiebreak.size()); ++k) pos[tiebreak[k]] = k;
    return pos;
}

inline Ranking truthful_ranking(const std::vector<Rational>& row, const std::vector<int>& tbpos) {
    Ranking r = ascending_ranking(static_cast<int>(row.size()));
    std::stable_sort(r.begin(), r.end(), [&](int a, int b) {
        if (row[a] != row[b]) return row[a] > row[b];
        return tbpos[a] < tbpos[b];
    });
    return r;
}

inline int truthful_top(const std::vector<Rational>& row, const std::vector<int>& tbpos) {
    int best = 0;
    for (int a = 1; a < static_cast<int>(row.size()); ++a)
        if (row[a] > row[best] || (row[a] == row[best] && tbpos[a] < tbpos[best])) best = a;
    return best;
}

inline VoteProfile truthful_profile(const Matrix& U, const Ranking& tiebreak) {
    const auto tbpos = tiebreak_positions(tiebreak);
    VoteProfile p;
    p.reserve(U.size());
    for (const auto& row : U) p.push_back(truthful_ranking(row, tbpos));
    return p;
}

inline int apply_rule(const RuleSpec& rule, const VoteProfile& profile) {
    if (profile.empty()) throw DimensionError("empty vote profile");
    const int m = static_cast<int>(profile[0].size());
    rule.validate(m);
    for (const auto& r : profile)
        if (!is_permutation_ranking(r, m)) throw DimensionError("ranking is not a permutation");

    bool unanimous = true;
    const int first_top = profile[0][0];
    for (const auto& r : profile)
        if (r[0] != first_top) {
            unanimous = false;
            break;
        }
    if (rule.kind == RuleSpec::Kind::consensus)
        return unanimous ? first_top : rule.default_alt;

    if (unanimous) return first_top;
    std::vector<char> topped(m, 0);
    for (const auto& r : profile) topped[r[0]] = 1;
    for (int o : rule.order)
        if (topped[o]) return o;
    return rule.order.back(); // unreachable: some alternative is topped
}

inline bool full_coverage(const Matrix& U, int b) {
    for (const auto& row : U)
        for (const Rational& v : row)
            if (v > row[b]) return false;
    return true;
}

// Lemma-1 test: i's participation in the move tau -> tau2 is observable iff
// some alternative's net transfer drops below min(tau_i(a), 0).
inline bool observable_participation(const Matrix& tau, const Matrix& tau2, int i) {
    for (int a = 0; a < static_cast<int>(tau[i].size()); ++a) {
        const Rational floor = tau[i][a] < 0 ? tau[i][a] : Rational(0);
        if (tau2[i][a] < floor) return true;
    }
    return false;
}

// Strict state consistency, used for verifier inputs: budget balance, every
// donor participates, and every non-participant votes truthfully w.r.t. u+tau.
inline void validate_state(const Instance& inst, const RuleSpec& rule, const State& st) {
    inst.validate();
    rule.validate(inst.m);
    check_shape(inst, st.tau);
    if (static_cast<int>(st.profile.size()) != inst.n)
        throw DimensionError("vote profile has wrong agent count");
    for (int i = 0; i < inst.n; ++i)
        if (!is_permutation_ranking(st.profile[i], inst.m))
            throw StateError(i, "ranking is not a permutation");
    for (int i : st.coalition)
        if (i < 0 || i >= inst.n) throw DimensionError("coalition member out of range");
    if (!is_budget_balanced(st.tau)) {
        for (int a = 0; a < inst.m; ++a) {
            Rational sum(0);
            for (int i = 0; i < inst.n; ++i) sum += st.tau[i][a];
            if (sum != 0) throw StateError(0, "transfer scheme violates budget balance at alternative " + std::to_string(a + 1));
        }
    }
    const Matrix U = effective_utilities(inst, st.tau);
    const auto tbpos = tiebreak_positions(rule.tiebreak);
    for (int i = 0; i < inst.n; ++i) {
        const bool member = st.coalition.count(i) != 0;
        if (!member) {
            for (int a = 0; a < inst.m; ++a)
                if (st.tau[i][a] < 0) throw StateError(i, "donates without participating");
            if (st.profile[i] != truthful_ranking(U[i], tbpos))
                throw StateError(i, "non-participant votes strategically");
        }
    }
}

// Def. 1 membership requirements for a deviation target, relative to a source
// state. Weaker than validate_state: persisting donors need not join the
// deviating coalition; only observably-changed agents and strategic voters
// must. In sticky mode outsiders keep their source votes instead of revoting
// truthfully.
inline void validate_deviation_target(const Instance& inst, const RuleSpec& rule, const State& from,
                                      const State& to, VariantMode mode = VariantMode::standard) {
    check_shape(inst, to.tau);
    if (static_cast<int>(to.profile.size()) != inst.n)
        throw DimensionError("vote profile has wrong agent count");
    if (!is_budget_balanced(to.tau)) throw StateError(0, "deviation violates budget balance");
    const Matrix U2 = effective_utilities(inst, to.tau);
    const auto tbpos = tiebreak_positions(rule.tiebreak);
    for (int i = 0; i < inst.n; ++i) {
        if (to.coalition.count(i)) continue;
        if (observable_participation(from.tau, to.tau, i))
            throw StateError(i, "observable transfer change without participating");
        if (mode == VariantMode::sticky) {
            if (to.profile[i] != from.profile[i])
                throw StateError(i, "non-participant changed vote under sticky behavior");
        } else {
            if (to.profile[i] != truthful_ranking(U2[i], tbpos))
                throw StateError(i, "non-participant votes strategically");
        }
    }
}

// Def. 2: every coalition member weakly gains at the new winner, at least one
// strictly. Throws StateError if the target state assigns a required agent
// outside the coalition.
inline bool is_ir_deviation(const Instance& inst, const RuleSpec& rule, const State& from,
                            const State& to, VariantMode mode = VariantMode::standard) {
    validate_deviation_target(inst, rule, from, to, mode);
    if (to.coalition.empty()) return false;
    const int w_from = apply_rule(rule, from.profile);
    const int w_to = apply_rule(rule, to.profile);
    bool strict = false;
    for (int i : to.coalition) {
        const Rational before = inst.u[i][w_from] + from.tau[i][w_from];
        const Rational after = inst.u[i][w_to] + to.tau[i][w_to];
        if (after < before) return false;
        if (after > before) strict = true;
    }
    return strict;
}

inline State truthful_state(const Instance& inst, const RuleSpec& rule) {
    State st;
    st.tau.assign(inst.n, std::vector<Rational>(inst.m, Rational(0)));
    st.profile = truthful_profile(inst.u, rule.tiebreak);
    return st;
}

} // namespace tusc
