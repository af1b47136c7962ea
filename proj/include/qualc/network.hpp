#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qualc/calculus.hpp"
#include "qualc/error.hpp"
#include "qualc/relation_set.hpp"

namespace qualc {

/// One constraint R(x, y): the relation between elements x and y is one of
/// the listed base relations. `tokens` carries the authored relation names;
/// `rels` is filled once the constraint is resolved against a calculus.
struct NetworkConstraint {
    std::size_t x = 0;
    std::size_t y = 0;
    std::vector<std::string> tokens;
    std::optional<RelationSet> rels;

    friend bool operator==(const NetworkConstraint& a, const NetworkConstraint& b) {
        return a.x == b.x && a.y == b.y && a.tokens == b.tokens;
    }
};

/// A constraint network over elements 0..element_count-1. Element names are
/// numeric by default; producers with richer identifiers (the case study)
/// keep a sidecar name table in element_names.
struct ConstraintNetwork {
    std::size_t element_count = 0;
    std::string comment;
    std::vector<std::string> element_names;
    std::vector<NetworkConstraint> constraints;
    bool normalized = false;

    static ConstraintNetwork with_elements(std::size_t count) {
        ConstraintNetwork net;
        net.element_count = count;
        net.element_names.reserve(count);
        for (std::size_t i = 0; i < count; ++i) net.element_names.push_back(std::to_string(i));
        return net;
    }

    void add_constraint(std::size_t x, std::size_t y, std::vector<std::string> tokens) {
        constraints.push_back({x, y, std::move(tokens), std::nullopt});
        normalized = false;
    }

    const std::string& element_name(std::size_t i) const { return element_names[i]; }

    friend bool operator==(const ConstraintNetwork& a, const ConstraintNetwork& b) {
        return a.element_count == b.element_count && a.constraints == b.constraints;
    }
};

/// Resolves a token list to a relation set, throwing on unknown names.
inline RelationSet resolve_tokens(const Calculus& calc, const std::vector<std::string>& tokens) {
    RelationSet out;
    for (const auto& tok : tokens) {
        auto idx = calc.index_of(tok);
        if (!idx) throw Error("unresolved relation name '" + tok + "' for calculus '" + calc.name + "'");
        out.add(*idx);
    }
    return out;
}

inline std::vector<std::string> tokens_for_set(const Calculus& calc, RelationSet set) {
    std::vector<std::string> out;
    for (std::size_t r : set) out.push_back(calc.relations[r]);
    return out;
}

struct NormalizeResult {
    ConstraintNetwork network;
    bool early_inconsistent = false;
};

/// Canonicalizes a network against a calculus:
///  - resolves relation tokens,
///  - folds constraints on (y, x) with y after x onto (x, y) via converse,
///  - intersects multiple constraints on the same pair,
///  - checks self-pair constraints against the identity relation.
/// The flag is set iff some intersection came out empty (the network is
/// trivially inconsistent); offending constraints stay in the output with an
/// empty relation set. Idempotent.
inline NormalizeResult normalize_network(const ConstraintNetwork& net, const Calculus& calc) {
    NormalizeResult result;
    result.network.element_count = net.element_count;
    result.network.comment = net.comment;
    result.network.element_names = net.element_names;

    std::map<std::pair<std::size_t, std::size_t>, RelationSet> merged;
    for (const auto& c : net.constraints) {
        RelationSet set = c.rels ? *c.rels : resolve_tokens(calc, c.tokens);
        std::size_t x = c.x, y = c.y;
        if (x == y) {
            if (!calc.identity)
                throw Error("constraint on element " + std::to_string(x) +
                            " with itself, but calculus '" + calc.name + "' has no identity relation");
            set &= RelationSet::single(*calc.identity);
            if (!set.empty()) continue; // identity admitted: trivially satisfied
            // falls through with an empty set on the self pair
        } else if (x > y) {
            std::swap(x, y);
            set = converse_set(calc, set);
        }
        auto key = std::make_pair(x, y);
        auto it = merged.find(key);
        if (it == merged.end())
            merged.emplace(key, set);
        else
            it->second &= set;
    }

    for (const auto& [key, set] : merged) {
        NetworkConstraint c;
        c.x = key.first;
        c.y = key.second;
        c.rels = set;
        c.tokens = tokens_for_set(calc, set);
        if (set.empty()) result.early_inconsistent = true;
        result.network.constraints.push_back(std::move(c));
    }
    result.network.normalized = true;
    return result;
}

} // namespace qualc
