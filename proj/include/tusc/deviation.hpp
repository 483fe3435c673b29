#pragma once

// Deviation machinery beyond consensus verification: reallocatable amounts
// and their lexicographic-rule witnesses, a bounded exhaustive grid search
// over transfer deltas, and the iterative-deviation dynamics runner.

#include <tusc/equilibrium.hpp>

#include <cstdint>
#include <map>

namespace tusc {

// ---------------------------------------------------------------------------
// Reallocatable amounts (indifferent-donor filter).

struct RaReport {
    int target = -1; // j
    int alt = -1;    // a-hat
    std::set<int> donors;
    Rational ra{0};
    Rational gap{0}; // U_j(b) - U_j(a-hat)
    bool passes = false;
};

inline RaReport reallocatable_amount(const Instance& inst, const Matrix& tau, int b, int j, int ahat) {
    check_shape(inst, tau);
    if (ahat == b) throw PreconditionError("candidate alternative equals the winner");
    if (ahat < 0 || ahat >= inst.m || j < 0 || j >= inst.n)
        throw DimensionError("index out of range");
    const Matrix U = effective_utilities(inst, tau);
    if (!full_coverage(U, b)) throw PreconditionError("winner lacks full coverage");

    RaReport rep;
    rep.target = j;
    rep.alt = ahat;
    for (int i = 0; i < inst.n; ++i) {
        if (i == j) continue;
        if (U[i][b] == U[i][ahat] && tau[i][ahat] < 0) {
            rep.donors.insert(i);
            rep.ra += -tau[i][ahat];
        }
    }
    if (tau[j][ahat] < 0) rep.ra += -tau[j][ahat];
    rep.gap = U[j][b] - U[j][ahat];
    rep.passes = rep.ra > rep.gap;
    return rep;
}

// Best report over all target agents for a fixed candidate alternative:
// maximize ra - gap, ties towards the lowest agent.
inline RaReport ra_filter(const Instance& inst, const RuleSpec& rule, const State& st, int ahat) {
    const int b = apply_rule(rule, st.profile);
    RaReport best;
    for (int j = 0; j < inst.n; ++j) {
        RaReport rep = reallocatable_amount(inst, st.tau, b, j, ahat);
        if (best.target < 0 || rep.ra - rep.gap > best.ra - best.gap) best = std::move(rep);
    }
    return best;
}

// Materializes a passing report as a deviation under the lexicographic rule
// whose order puts the candidate alternative first and the old winner last.
// Funding is capped by the withdrawable mass held by unflagged receivers at
// the candidate alternative; the definition of the reallocatable amount can
// exceed that mass when the target itself receives there, in which case no
// witness exists and an error is raised.
inline DeviationWitness construct_ra_deviation(const Instance& inst, const RuleSpec& rule, const State& st,
                                               const RaReport& report) {
    if (!report.passes) throw PreconditionError("report does not pass the reallocatable-amount test");
    const int b = apply_rule(rule, st.profile);
    const int j = report.target;
    const int ahat = report.alt;

    Ranking order;
    order.push_back(ahat);
    for (int a = 0; a < inst.m; ++a)
        if (a != ahat && a != b) order.push_back(a);
    if (b != ahat) order.push_back(b);
    const RuleSpec lex = RuleSpec::lexicographic(std::move(order), rule.tiebreak);

    Rational withdrawable(0);
    for (int i = 0; i < inst.n; ++i)
        if (i != j && st.tau[i][ahat] > 0) withdrawable += st.tau[i][ahat];
    Rational fund = report.ra;
    Rational reclaim = st.tau[j][ahat] < 0 ? -st.tau[j][ahat] : Rational(0);
    // The target's own reclaimed donation needs no external counterparty
    // beyond the receivers it was financing, which are part of the
    // withdrawable mass by budget balance.
    if (fund > withdrawable) fund = withdrawable;
    if (fund <= report.gap)
        throw Error("reallocatable amount cannot be materialized: only " + rational_str(fund) +
                    " withdrawable against a gap of " + rational_str(report.gap));

    Matrix tau2 = st.tau;
    tau2[j][ahat] += fund;
    for (int i = 0; i < inst.n; ++i) {
        if (i == j || st.tau[i][ahat] <= 0) continue;
        tau2[i][ahat] -= fund * st.tau[i][ahat] / withdrawable;
    }

    Coalition members = report.donors;
    members.insert(j);
    const Matrix U2 = effective_utilities(inst, tau2);
    const auto tbpos = tiebreak_positions(lex.tiebreak);
    State to;
    to.tau = std::move(tau2);
    to.coalition = members;
    to.profile.resize(inst.n);
    for (int k = 0; k < inst.n; ++k) {
        if (k == j)
            to.profile[k] = detail::ranking_with_top(U2[k], tbpos, ahat);
        else if (members.count(k))
            to.profile[k] = detail::ranking_with_top(U2[k], tbpos, b);
        else
            to.profile[k] = truthful_ranking(U2[k], tbpos);
    }

    DeviationWitness w;
    w.rule = lex;
    w.case_tag = DeviationWitness::Case::ra_lexicographic;
    w.epsilon = fund;
    w.to_state = std::move(to);
    if (apply_rule(lex, w.to_state.profile) != ahat)
        throw Error("reallocatable-amount witness missed the candidate alternative");
    if (!is_ir_deviation(inst, lex, st, w.to_state))
        throw Error("reallocatable-amount witness failed IR validation");
    w.ledger = detail::utility_ledger(inst, lex, st, w.to_state);
    (void)reclaim;
    return w;
}

// ---------------------------------------------------------------------------
// Bounded grid falsifier.

struct GridSpec {
    int denominator = 1;          // transfer deltas are multiples of 1/denominator
    Rational magnitude{0};        // |delta| <= magnitude
    int coalition_cap = 1;        // maximum coalition size
    std::uint64_t node_budget = 20'000'000;
    std::optional<int> target_alt; // restrict to deviations electing this alternative
};

struct GridResult {
    enum class Kind { none, found, exhausted };
    Kind kind = Kind::none;
    std::optional<DeviationWitness> witness;
    std::uint64_t nodes = 0;
};

namespace detail {

inline long long floor_int(const Rational& r) {
    BigInt q = numerator(r) / denominator(r);
    if (numerator(r) % denominator(r) != 0 && numerator(r) < 0) --q;
    return q.convert_to<long long>();
}
inline long long ceil_int(const Rational& r) {
    BigInt q = numerator(r) / denominator(r);
    if (numerator(r) % denominator(r) != 0 && numerator(r) > 0) ++q;
    return q.convert_to<long long>();
}

// k_hi - k_lo >= gap, between two cells of the same (outsider) agent row.
struct DiffConstraint {
    int hi_alt;
    int lo_alt;
    long long gap;
};

class GridSearcher {
  public:
    GridSearcher(const Instance& inst, const RuleSpec& rule, const State& from, const GridSpec& grid,
                 VariantMode mode)
        : inst_(inst), rule_(rule), from_(from), grid_(grid), mode_(mode) {
        U_from_ = effective_utilities(inst, from.tau);
        w_from_ = apply_rule(rule, from.profile);
        d_ = grid.denominator;
        kmax_ = floor_int(grid.magnitude * d_);
        tbpos_ = tiebreak_positions(rule.tiebreak);
        col_order_.reserve(inst.m);
    }

    GridResult run() {
        GridResult res;
        std::vector<int> members;
        for (int size = 1; size <= std::min(grid_.coalition_cap, inst_.n) && !done(); ++size) {
            members.assign(size, 0);
            std::iota(members.begin(), members.end(), 0);
            while (true) {
                search_coalition(members);
                if (done()) break;
                // next lexicographic combination
                int k = size - 1;
                while (k >= 0 && members[k] == inst_.n - size + k) --k;
                if (k < 0) break;
                ++members[k];
                for (int t = k + 1; t < size; ++t) members[t] = members[t - 1] + 1;
            }
        }
        res.nodes = nodes_;
        if (found_) {
            res.kind = GridResult::Kind::found;
            res.witness = std::move(witness_);
        } else if (exhausted_) {
            res.kind = GridResult::Kind::exhausted;
        }
        return res;
    }

  private:
    bool done() const { return found_ || exhausted_; }

    void search_coalition(const std::vector<int>& members) {
        is_member_.assign(inst_.n, 0);
        for (int i : members) is_member_[i] = 1;
        // Agents whose top vote is enumerated: coalition members always; in
        // standard semantics outsiders too (their intended truthful top
        // becomes a constraint on their transfer deltas). Under sticky
        // semantics outsider votes are frozen.
        std::vector<int> tops(inst_.n, 0);
        std::vector<int> free_agents;
        for (int i = 0; i < inst_.n; ++i) {
            if (is_member_[i] || mode_ != VariantMode::sticky)
                free_agents.push_back(i);
            else
                tops[i] = from_.profile[i][0];
        }
        std::vector<int> odo(free_agents.size(), 0);
        while (!done()) {
            for (size_t k = 0; k < free_agents.size(); ++k) tops[free_agents[k]] = odo[k];
            search_root(members, tops);
            // advance odometer, last agent fastest
            int k = static_cast<int>(odo.size()) - 1;
            while (k >= 0 && odo[k] == inst_.m - 1) odo[k--] = 0;
            if (k < 0) break;
            ++odo[k];
        }
    }

    static int winner_of_tops(const RuleSpec& rule, const std::vector<int>& tops) {
        const bool unanimous = std::all_of(tops.begin(), tops.end(), [&](int t) { return t == tops[0]; });
        if (unanimous) return tops[0];
        if (rule.kind == RuleSpec::Kind::consensus) return rule.default_alt;
        for (int o : rule.order)
            if (std::find(tops.begin(), tops.end(), o) != tops.end()) return o;
        return rule.order.back();
    }

    void search_root(const std::vector<int>& members, const std::vector<int>& tops) {
        const int n = inst_.n, m = inst_.m;
        const int w = winner_of_tops(rule_, tops);
        if (grid_.target_alt && *grid_.target_alt != w) return;

        // Per-cell integer bounds in grid units.
        lo_.assign(n * m, -kmax_);
        hi_.assign(n * m, kmax_);
        diffs_.assign(n, {});
        for (int i = 0; i < n; ++i) {
            for (int a = 0; a < m; ++a) {
                if (!is_member_[i]) {
                    // Lemma-1 floor: an outsider's net transfer may not drop
                    // below min(tau_i(a), 0).
                    if (from_.tau[i][a] >= 0) {
                        const long long f = ceil_int(-from_.tau[i][a] * d_);
                        lo_[i * m + a] = std::max(lo_[i * m + a], f);
                    } else {
                        lo_[i * m + a] = std::max(lo_[i * m + a], 0LL);
                    }
                } else if (a == w) {
                    // Member IR at the new winner.
                    const Rational need = U_from_[i][w_from_] - U_from_[i][w];
                    lo_[i * m + a] = std::max(lo_[i * m + a], ceil_int(need * d_));
                }
                if (lo_[i * m + a] > hi_[i * m + a]) return;
            }
            if (!is_member_[i] && mode_ != VariantMode::sticky) {
                // Intended truthful top for this outsider.
                const int t = tops[i];
                for (int a = 0; a < m; ++a) {
                    if (a == t) continue;
                    const Rational diff = (U_from_[i][a] - U_from_[i][t]) * d_;
                    const bool strict = tbpos_[a] < tbpos_[t];
                    diffs_[i].push_back({t, a, strict ? floor_int(diff) + 1 : ceil_int(diff)});
                }
            }
        }
        // Aggregate prune: the coalition's total at the new winner cannot
        // exceed what outsiders can surrender there.
        {
            Rational cap(0), need(0);
            for (int i = 0; i < n; ++i) {
                if (is_member_[i]) {
                    cap += U_from_[i][w];
                    need += U_from_[i][w_from_];
                } else {
                    cap -= Rational(lo_[i * m + w]) / d_;
                }
            }
            if (cap <= need) return;
        }
        // Column feasibility.
        for (int a = 0; a < m; ++a) {
            long long slo = 0, shi = 0;
            for (int i = 0; i < n; ++i) {
                slo += lo_[i * m + a];
                shi += hi_[i * m + a];
            }
            if (slo > 0 || shi < 0) return;
        }

        col_order_.clear();
        col_order_.push_back(w);
        for (int a = 0; a < m; ++a)
            if (a != w) col_order_.push_back(a);
        val_.assign(n * m, 0);
        assigned_.assign(n * m, 0);
        cur_members_ = &members;
        cur_tops_ = &tops;
        cur_w_ = w;
        dfs(0, 0, 0, lo_, hi_);
    }

    // Assign cells column-by-column (winner column first), agents ascending;
    // the last agent of each column is forced by budget balance. Values are
    // tried by ascending magnitude so minimal redistributions are found
    // first.
    bool dfs(int col_idx, int agent, long long colsum, std::vector<long long> lo, std::vector<long long> hi) {
        if (done()) return true;
        const int n = inst_.n, m = inst_.m;
        if (col_idx == m) return leaf();
        const int a = col_order_[col_idx];
        if (agent == n) {
            if (a == cur_w_ && !strict_possible()) return false;
            return dfs(col_idx + 1, 0, 0, std::move(lo), std::move(hi));
        }
        const int cell = agent * m + a;
        if (++nodes_ > grid_.node_budget) {
            exhausted_ = true;
            return true;
        }

        auto try_value = [&](long long v) -> bool {
            if (v < lo[cell] || v > hi[cell]) return false;
            if (agent == n - 1 && colsum + v != 0) return false;
            std::vector<long long> lo2 = lo, hi2 = hi;
            // Propagate difference constraints touching this cell.
            for (const auto& c : diffs_[agent]) {
                const int hc = agent * m + c.hi_alt, lc = agent * m + c.lo_alt;
                if (hc == cell) {
                    if (assigned_[lc]) {
                        if (v - val_[lc] < c.gap) return false;
                    } else {
                        hi2[lc] = std::min(hi2[lc], v - c.gap);
                        if (lo2[lc] > hi2[lc]) return false;
                    }
                } else if (lc == cell) {
                    if (assigned_[hc]) {
                        if (val_[hc] - v < c.gap) return false;
                    } else {
                        lo2[hc] = std::max(lo2[hc], v + c.gap);
                        if (lo2[hc] > hi2[hc]) return false;
                    }
                }
            }
            val_[cell] = v;
            assigned_[cell] = 1;
            // Remaining-column-sum feasibility for this column.
            long long rlo = 0, rhi = 0;
            for (int i = agent + 1; i < n; ++i) {
                rlo += lo2[i * m + a];
                rhi += hi2[i * m + a];
            }
            const long long s = colsum + v;
            bool ok = false;
            if (-s >= rlo && -s <= rhi) ok = dfs(col_idx, agent + 1, s, std::move(lo2), std::move(hi2));
            assigned_[cell] = 0;
            return ok || done();
        };

        if (agent == n - 1) return try_value(-colsum);
        // Ascending magnitude, positive before negative on ties.
        const long long span = std::max(std::abs(lo[cell]), std::abs(hi[cell]));
        for (long long mag = 0; mag <= span; ++mag) {
            if (try_value(mag)) return true;
            if (mag > 0 && try_value(-mag)) return true;
        }
        return false;
    }

    bool strict_possible() const {
        const int m = inst_.m;
        for (int i : *cur_members_)
            if (U_from_[i][cur_w_] + Rational(val_[i * m + cur_w_]) / d_ > U_from_[i][w_from_]) return true;
        return false;
    }

    bool leaf() {
        const int n = inst_.n, m = inst_.m;
        State to;
        to.tau = from_.tau;
        for (int i = 0; i < n; ++i)
            for (int a = 0; a < m; ++a)
                if (val_[i * m + a] != 0) to.tau[i][a] += Rational(val_[i * m + a]) / d_;
        to.coalition.insert(cur_members_->begin(), cur_members_->end());
        const Matrix U2 = effective_utilities(inst_, to.tau);
        to.profile.resize(n);
        for (int i = 0; i < n; ++i) {
            if (to.coalition.count(i)) {
                to.profile[i] = ranking_with_top(U2[i], tbpos_, (*cur_tops_)[i]);
            } else if (mode_ == VariantMode::sticky) {
                to.profile[i] = from_.profile[i];
            } else {
                to.profile[i] = truthful_ranking(U2[i], tbpos_);
                if (to.profile[i][0] != (*cur_tops_)[i]) return false; // cannot happen
            }
        }
        if (apply_rule(rule_, to.profile) != cur_w_) return false;
        if (!is_ir_deviation(inst_, rule_, from_, to, mode_)) return false;
        DeviationWitness w;
        w.rule = rule_;
        w.case_tag = DeviationWitness::Case::grid;
        w.ledger = utility_ledger(inst_, rule_, from_, to);
        w.to_state = std::move(to);
        witness_ = std::move(w);
        found_ = true;
        return true;
    }

    const Instance& inst_;
    const RuleSpec& rule_;
    const State& from_;
    const GridSpec& grid_;
    VariantMode mode_;
    Matrix U_from_;
    int w_from_ = 0;
    int d_ = 1;
    long long kmax_ = 0;
    std::vector<int> tbpos_;
    std::vector<char> is_member_;
    std::vector<long long> lo_, hi_, val_;
    std::vector<char> assigned_;
    std::vector<std::vector<DiffConstraint>> diffs_;
    std::vector<int> col_order_;
    const std::vector<int>* cur_members_ = nullptr;
    const std::vector<int>* cur_tops_ = nullptr;
    int cur_w_ = 0;
    std::uint64_t nodes_ = 0;
    bool found_ = false;
    bool exhausted_ = false;
    std::optional<DeviationWitness> witness_;
};

} // namespace detail

// Exhaustive search over coalitions (by size, then lexicographic), intended
// top votes (agent-major, alternatives ascending) and budget-balanced
// transfer deltas in {-M..M}/d, returning the first IR deviation in that
// order. Outsider transfers are bounded below by the Lemma-1 observation
// floor; outsider votes are truthful (standard/anonymous) or frozen (sticky).
inline GridResult grid_search(const Instance& inst, const RuleSpec& rule, const State& st,
                              const GridSpec& grid, VariantMode mode = VariantMode::standard) {
    inst.validate();
    rule.validate(inst.m);
    if (grid.denominator < 1) throw PreconditionError("grid denominator must be at least 1");
    if (grid.magnitude < 0) throw PreconditionError("grid magnitude must be nonnegative");
    detail::GridSearcher s(inst, rule, st, grid, mode);
    return s.run();
}

// ---------------------------------------------------------------------------
// Iterative-deviation dynamics.

struct DynamicsTrace {
    enum class Terminal { fixpoint, cycle, budget_exhausted };
    std::vector<State> states; // states[0] = start
    std::vector<DeviationWitness> steps;
    Terminal terminal = Terminal::budget_exhausted;
    int cycle_entry = -1;
    int cycle_period = 0;
    std::vector<int> winners; // winner of each state in `states`
};

inline DynamicsTrace run_dynamics(const Instance& inst, const RuleSpec& rule, VariantMode mode,
                                  const State& start, int max_steps, const GridSpec& grid) {
    DynamicsTrace trace;
    std::map<State, int> seen;
    State cur = start;
    trace.states.push_back(cur);
    trace.winners.push_back(apply_rule(rule, cur.profile));
    seen[cur] = 0;
    for (int step = 0; step < max_steps; ++step) {
        GridResult res = grid_search(inst, rule, cur, grid, mode);
        if (res.kind == GridResult::Kind::exhausted) {
            trace.terminal = DynamicsTrace::Terminal::budget_exhausted;
            return trace;
        }
        if (res.kind == GridResult::Kind::none) {
            trace.terminal = DynamicsTrace::Terminal::fixpoint;
            return trace;
        }
        cur = res.witness->to_state;
        trace.steps.push_back(std::move(*res.witness));
        trace.states.push_back(cur);
        trace.winners.push_back(apply_rule(rule, cur.profile));
        auto [it, fresh] = seen.emplace(cur, static_cast<int>(trace.states.size()) - 1);
        if (!fresh) {
            trace.terminal = DynamicsTrace::Terminal::cycle;
            trace.cycle_entry = it->second;
            trace.cycle_period = static_cast<int>(trace.states.size()) - 1 - it->second;
            return trace;
        }
    }
    trace.terminal = DynamicsTrace::Terminal::budget_exhausted;
    return trace;
}

} // namespace tusc
