#pragma once

// Domain types: instances, contracts, transfer schemes, vote profiles,
// states and rule specifications. Agents and alternatives are 0-based
// internally; file formats are 1-based (see io.hpp).

#include <tusc/rational.hpp>

#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace tusc {

using Matrix = std::vector<std::vector<Rational>>; // agent-major, n x m
using Ranking = std::vector<int>;                  // alternatives, best first
using VoteProfile = std::vector<Ranking>;
using Coalition = std::set<int>;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
    using Error::Error;
};

struct PreconditionError : Error {
    using Error::Error;
};

// Raised when a state (or a deviation target) violates a consistency
// clause attributable to a specific agent.
struct StateError : Error {
    int agent; // 0-based
    StateError(int agent_, const std::string& clause)
        : Error("agent " + std::to_string(agent_ + 1) + ": " + clause), agent(agent_) {}
};

struct Instance {
    int n = 0;
    int m = 0;
    Matrix u; // u[i][a] >= 0

    bool operator==(const Instance&) const = default;

    void validate() const {
        if (n < 1 || m < 1) throw DimensionError("instance requires n >= 1 and m >= 1");
        if (static_cast<int>(u.size()) != n) throw DimensionError("utility matrix has wrong row count");
        for (int i = 0; i < n; ++i) {
            if (static_cast<int>(u[i].size()) != m)
                throw DimensionError("utility matrix has wrong column count");
            for (int a = 0; a < m; ++a)
                if (u[i][a] < 0) throw StateError(i, "negative base utility");
        }
    }
};

// c[i][j][a] = promise from i to j conditional on alternative a.
struct ContractMatrix {
    int n = 0;
    int m = 0;
    std::vector<Matrix> c;

    void validate() const {
        if (static_cast<int>(c.size()) != n) throw DimensionError("contract matrix has wrong shape");
        for (int i = 0; i < n; ++i) {
            if (static_cast<int>(c[i].size()) != n) throw DimensionError("contract matrix has wrong shape");
            for (int j = 0; j < n; ++j) {
                if (static_cast<int>(c[i][j].size()) != m)
                    throw DimensionError("contract matrix has wrong shape");
                for (int a = 0; a < m; ++a) {
                    if (i == j && c[i][j][a] != 0) throw StateError(i, "nonzero self-promise");
                    if (c[i][j][a] < 0) throw StateError(i, "negative raw promise");
                }
            }
        }
    }
};

struct State {
    VoteProfile profile;
    Matrix tau;
    Coalition coalition;

    bool operator==(const State&) const = default;
    bool operator<(const State& o) const {
        if (tau != o.tau) return tau < o.tau;
        if (profile != o.profile) return profile < o.profile;
        return coalition < o.coalition;
    }
};

inline Ranking ascending_ranking(int m) {
    Ranking r(m);
    std::iota(r.begin(), r.end(), 0);
    return r;
}

inline bool is_permutation_ranking(const Ranking& r, int m) {
    if (static_cast<int>(r.size()) != m) return false;
    std::vector<char> seen(m, 0);
    for (int a : r) {
        if (a < 0 || a >= m || seen[a]) return false;
        seen[a] = 1;
    }
    return true;
}

struct RuleSpec {
    enum class Kind { consensus, lexicographic };
    Kind kind = Kind::consensus;
    int default_alt = 0; // consensus only
    Ranking order;       // lexicographic only
    Ranking tiebreak;    // global tie-break for truthful voting and argmax selection

    static RuleSpec consensus(int default_alt, int m, Ranking tiebreak = {}) {
        RuleSpec r;
        r.kind = Kind::consensus;
        r.default_alt = default_alt;
        r.tiebreak = tiebreak.empty() ? ascending_ranking(m) : std::move(tiebreak);
        return r;
    }
    static RuleSpec lexicographic(Ranking order, Ranking tiebreak = {}) {
        RuleSpec r;
        r.kind = Kind::lexicographic;
        r.tiebreak = tiebreak.empty() ? ascending_ranking(static_cast<int>(order.size()))
                                      : std::move(tiebreak);
        r.order = std::move(order);
        return r;
    }

    void validate(int m) const {
        if (!is_permutation_ranking(tiebreak, m)) throw DimensionError("tiebreak is not a permutation");
        if (kind == Kind::consensus) {
            if (default_alt < 0 || default_alt >= m)
                throw DimensionError("consensus default out of range");
        } else {
            if (!is_permutation_ranking(order, m))
                throw DimensionError("lexicographic order is not a permutation");
        }
    }
};

// Deviation semantics for the dynamics runner. Standard: outsiders revote
// truthfully under the new transfers. Sticky: outsiders keep their previous
// votes. Anonymous-recipient: coalition membership is inferred from net
// transfer changes only; at the net-transfer level the membership
// requirement coincides with the standard observable-participation test.
enum class VariantMode { standard, sticky, anonymous_recipient };

} // namespace tusc
