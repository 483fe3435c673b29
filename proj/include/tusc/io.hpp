#pragma once

// Strict serialization: instance and state files in, machine reports out.
// File indices are 1-based; everything in memory is 0-based. Rationals are
// rendered as "p" or "p/q" strings, never as decimals. Unknown fields are
// rejected so regression fixtures cannot drift silently.

#include <tusc/deviation.hpp>

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace tusc::io {

using Json = nlohmann::ordered_json;

inline constexpr int schema_version = 1;

struct ParseError : Error {
    using Error::Error;
};

namespace detail {

inline void expect_fields(const Json& j, std::initializer_list<const char*> required,
                          std::initializer_list<const char*> optional, const std::string& where) {
    if (!j.is_object()) throw ParseError(where + ": expected an object");
    for (const char* f : required)
        if (!j.contains(f)) throw ParseError(where + ": missing field \"" + f + "\"");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto known = [&](std::initializer_list<const char*> fields) {
            for (const char* f : fields)
                if (it.key() == f) return true;
            return false;
        };
        if (!known(required) && !known(optional))
            throw ParseError(where + ": unknown field \"" + it.key() + "\"");
    }
}

inline int parse_index(const Json& j, int limit, const std::string& where) {
    if (!j.is_number_integer())
        throw ParseError(where + ": expected a 1-based integer index");
    const long long v = j.get<long long>();
    if (v < 1 || v > limit)
        throw ParseError(where + ": index " + std::to_string(v) + " out of range 1.." + std::to_string(limit));
    return static_cast<int>(v) - 1;
}

} // namespace detail

inline Rational parse_rational_field(const Json& j, const std::string& where) {
    if (j.is_number_integer()) return Rational(j.get<long long>());
    if (j.is_string()) {
        if (auto r = try_parse_rational(j.get<std::string>())) return *r;
        throw ParseError(where + ": malformed rational \"" + j.get<std::string>() + "\"");
    }
    throw ParseError(where + ": rationals must be integers or \"p/q\" strings");
}

inline Matrix parse_matrix(const Json& j, int n, int m, const std::string& where) {
    if (!j.is_array() || static_cast<int>(j.size()) != n)
        throw ParseError(where + ": expected " + std::to_string(n) + " rows");
    Matrix out(n, std::vector<Rational>(m));
    for (int i = 0; i < n; ++i) {
        if (!j[i].is_array() || static_cast<int>(j[i].size()) != m)
            throw ParseError(where + " row " + std::to_string(i + 1) + ": expected " + std::to_string(m) +
                             " entries");
        for (int a = 0; a < m; ++a)
            out[i][a] = parse_rational_field(j[i][a], where + " row " + std::to_string(i + 1) + " column " +
                                                          std::to_string(a + 1));
    }
    return out;
}

inline Json matrix_to_json(const Matrix& mat) {
    Json rows = Json::array();
    for (const auto& row : mat) {
        Json r = Json::array();
        for (const Rational& v : row) r.push_back(rational_str(v));
        rows.push_back(std::move(r));
    }
    return rows;
}

inline Ranking parse_index_list(const Json& j, int m, const std::string& where) {
    if (!j.is_array()) throw ParseError(where + ": expected an index list");
    Ranking r;
    for (size_t k = 0; k < j.size(); ++k)
        r.push_back(detail::parse_index(j[k], m, where + "[" + std::to_string(k + 1) + "]"));
    return r;
}

inline Json index_list_to_json(const Ranking& r) {
    Json out = Json::array();
    for (int a : r) out.push_back(a + 1);
    return out;
}

// ---------------------------------------------------------------------------
// Instance files.

struct InstanceDoc {
    Instance inst;
    RuleSpec rule;
};

inline InstanceDoc parse_instance(const Json& j) {
    detail::expect_fields(j, {"schema", "agents", "alternatives", "utilities", "rule"}, {"tiebreak"},
                          "instance");
    if (!j["schema"].is_number_integer() || j["schema"].get<int>() != schema_version)
        throw ParseError("instance: unsupported schema version");
    InstanceDoc doc;
    if (!j["agents"].is_number_integer() || !j["alternatives"].is_number_integer())
        throw ParseError("instance: agents/alternatives must be integers");
    doc.inst.n = j["agents"].get<int>();
    doc.inst.m = j["alternatives"].get<int>();
    if (doc.inst.n < 1 || doc.inst.m < 1) throw ParseError("instance: agents and alternatives must be >= 1");
    doc.inst.u = parse_matrix(j["utilities"], doc.inst.n, doc.inst.m, "utilities");

    const Json& rj = j["rule"];
    if (!rj.is_object() || !rj.contains("type") || !rj["type"].is_string())
        throw ParseError("rule: expected an object with a \"type\"");
    Ranking tiebreak;
    if (j.contains("tiebreak")) {
        tiebreak = parse_index_list(j["tiebreak"], doc.inst.m, "tiebreak");
        if (!is_permutation_ranking(tiebreak, doc.inst.m))
            throw ParseError("tiebreak: not a permutation of the alternatives");
    }
    const std::string type = rj["type"].get<std::string>();
    if (type == "consensus") {
        detail::expect_fields(rj, {"type", "default"}, {}, "rule");
        const int def = detail::parse_index(rj["default"], doc.inst.m, "rule.default");
        doc.rule = RuleSpec::consensus(def, doc.inst.m, std::move(tiebreak));
    } else if (type == "lexicographic") {
        detail::expect_fields(rj, {"type", "order"}, {}, "rule");
        Ranking order = parse_index_list(rj["order"], doc.inst.m, "rule.order");
        if (!is_permutation_ranking(order, doc.inst.m))
            throw ParseError("rule.order: not a permutation of the alternatives");
        if (tiebreak.empty()) tiebreak = ascending_ranking(doc.inst.m);
        doc.rule = RuleSpec::lexicographic(std::move(order), std::move(tiebreak));
    } else {
        throw ParseError("rule: unknown type \"" + type + "\"");
    }
    try {
        doc.inst.validate();
    } catch (const Error& e) {
        throw ParseError(std::string("instance: ") + e.what());
    }
    return doc;
}

inline Json serialize_instance(const InstanceDoc& doc) {
    Json j;
    j["schema"] = schema_version;
    j["agents"] = doc.inst.n;
    j["alternatives"] = doc.inst.m;
    j["utilities"] = matrix_to_json(doc.inst.u);
    Json rj;
    if (doc.rule.kind == RuleSpec::Kind::consensus) {
        rj["type"] = "consensus";
        rj["default"] = doc.rule.default_alt + 1;
    } else {
        rj["type"] = "lexicographic";
        rj["order"] = index_list_to_json(doc.rule.order);
    }
    j["rule"] = std::move(rj);
    j["tiebreak"] = index_list_to_json(doc.rule.tiebreak);
    return j;
}

// ---------------------------------------------------------------------------
// State files.

inline State parse_state(const Json& j, int n, int m) {
    detail::expect_fields(j, {"schema", "profile", "transfers", "coalition"}, {}, "state");
    if (!j["schema"].is_number_integer() || j["schema"].get<int>() != schema_version)
        throw ParseError("state: unsupported schema version");
    State st;
    if (!j["profile"].is_array() || static_cast<int>(j["profile"].size()) != n)
        throw ParseError("profile: expected " + std::to_string(n) + " rankings");
    for (int i = 0; i < n; ++i) {
        Ranking r = parse_index_list(j["profile"][i], m, "profile row " + std::to_string(i + 1));
        if (!is_permutation_ranking(r, m))
            throw ParseError("profile row " + std::to_string(i + 1) + ": not a permutation");
        st.profile.push_back(std::move(r));
    }
    st.tau = parse_matrix(j["transfers"], n, m, "transfers");
    for (int i : parse_index_list(j["coalition"], n, "coalition")) st.coalition.insert(i);
    return st;
}

inline Json serialize_state(const State& st) {
    Json j;
    j["schema"] = schema_version;
    Json prof = Json::array();
    for (const auto& r : st.profile) prof.push_back(index_list_to_json(r));
    j["profile"] = std::move(prof);
    j["transfers"] = matrix_to_json(st.tau);
    Json coal = Json::array();
    for (int i : st.coalition) coal.push_back(i + 1);
    j["coalition"] = std::move(coal);
    return j;
}

// ---------------------------------------------------------------------------
// Report payloads.

inline Json serialize_rule(const RuleSpec& rule) {
    Json j;
    if (rule.kind == RuleSpec::Kind::consensus) {
        j["type"] = "consensus";
        j["default"] = rule.default_alt + 1;
    } else {
        j["type"] = "lexicographic";
        j["order"] = index_list_to_json(rule.order);
    }
    j["tiebreak"] = index_list_to_json(rule.tiebreak);
    return j;
}

inline Json serialize_witness(const DeviationWitness& w) {
    Json j;
    j["case"] = case_name(w.case_tag);
    j["rule"] = serialize_rule(w.rule);
    if (w.epsilon) j["epsilon"] = rational_str(*w.epsilon);
    j["to_state"] = serialize_state(w.to_state);
    Json ledger = Json::array();
    for (const auto& [agent, gain] : w.ledger) {
        Json e;
        e["agent"] = agent + 1;
        e["gain"] = rational_str(gain);
        ledger.push_back(std::move(e));
    }
    j["ledger"] = std::move(ledger);
    return j;
}

inline Json serialize_verdict(const Verdict& v) {
    Json j;
    j["stable"] = v.stable;
    j["reason"] = reason_name(v.reason);
    if (v.agent >= 0) j["agent"] = v.agent + 1;
    if (v.slack_case > 0) j["slack_case"] = v.slack_case;
    if (!v.detail.empty()) j["detail"] = v.detail;
    if (v.witness) j["witness"] = serialize_witness(*v.witness);
    return j;
}

inline Json serialize_ra_report(const RaReport& r) {
    Json j;
    j["target"] = r.target + 1;
    j["alternative"] = r.alt + 1;
    Json donors = Json::array();
    for (int i : r.donors) donors.push_back(i + 1);
    j["donors"] = std::move(donors);
    j["reallocatable"] = rational_str(r.ra);
    j["gap"] = rational_str(r.gap);
    j["passes"] = r.passes;
    return j;
}

inline const char* terminal_name(DynamicsTrace::Terminal t) {
    switch (t) {
        case DynamicsTrace::Terminal::fixpoint: return "fixpoint";
        case DynamicsTrace::Terminal::cycle: return "cycle";
        case DynamicsTrace::Terminal::budget_exhausted: return "budget-exhausted";
    }
    return "?";
}

inline Json serialize_trace(const DynamicsTrace& trace) {
    Json j;
    j["terminal"] = terminal_name(trace.terminal);
    if (trace.terminal == DynamicsTrace::Terminal::cycle) {
        j["cycle_entry"] = trace.cycle_entry;
        j["cycle_period"] = trace.cycle_period;
    }
    Json winners = Json::array();
    for (int w : trace.winners) winners.push_back(w + 1);
    j["winners"] = std::move(winners);
    Json states = Json::array();
    for (const State& st : trace.states) states.push_back(serialize_state(st));
    j["states"] = std::move(states);
    return j;
}

// ---------------------------------------------------------------------------
// File helpers.

inline Json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

inline InstanceDoc load_instance(const std::string& path) { return parse_instance(load_json(path)); }

inline State load_state(const std::string& path, int n, int m) { return parse_state(load_json(path), n, m); }

} // namespace tusc::io
