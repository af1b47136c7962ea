#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qualc/error.hpp"
#include "qualc/relation_set.hpp"

namespace qualc {

/// A base relation symbol: position in declaration order plus its name.
struct RelationSymbol {
    std::size_t index = 0;
    std::string name;
};

/// One declared composition cell with its authored member order.
/// Calculi read from a spec file keep the file's cell sequence and member
/// order so that writers and encoders reproduce the authored layout;
/// programmatically built calculi use the canonical row-major layout.
struct CompositionEntry {
    std::size_t row = 0;
    std::size_t col = 0;
    std::vector<std::size_t> members;
};

/// A binary qualitative calculus: relation symbols in a fixed declaration
/// order, an optional identity relation, a converse map and the square
/// composition table. Immutable after construction; plain aggregate so that
/// deliberately broken instances can be built for validate().
struct Calculus {
    std::string name;
    std::vector<std::string> relations;
    std::optional<std::size_t> identity;
    std::vector<std::size_t> converse;
    std::vector<std::vector<RelationSet>> table;

    /// Presentation layout; empty means canonical row-major order with cell
    /// members in declaration order. Not part of the calculus's identity.
    std::vector<CompositionEntry> entries;

    std::size_t relation_count() const { return relations.size(); }

    std::optional<std::size_t> index_of(std::string_view token) const {
        for (std::size_t i = 0; i < relations.size(); ++i)
            if (relations[i] == token) return i;
        return std::nullopt;
    }

    const std::string& relation_name(std::size_t i) const { return relations[i]; }

    RelationSet cell(std::size_t row, std::size_t col) const { return table[row][col]; }

    RelationSet full_set() const { return RelationSet::full(relation_count()); }

    bool has_identity() const { return identity.has_value(); }

    std::vector<CompositionEntry> canonical_entries() const {
        std::vector<CompositionEntry> out;
        out.reserve(relation_count() * relation_count());
        for (std::size_t r = 0; r < relation_count(); ++r) {
            for (std::size_t c = 0; c < relation_count(); ++c) {
                CompositionEntry e{r, c, {}};
                for (std::size_t m : table[r][c]) e.members.push_back(m);
                out.push_back(std::move(e));
            }
        }
        return out;
    }

    /// Layout used by writers and encoders: authored if available.
    std::vector<CompositionEntry> presentation_entries() const {
        return entries.empty() ? canonical_entries() : entries;
    }

    /// Equality is on the algebra only; presentation layout is ignored.
    friend bool operator==(const Calculus& a, const Calculus& b) {
        return a.name == b.name && a.relations == b.relations && a.identity == b.identity &&
               a.converse == b.converse && a.table == b.table;
    }

    /// Builds a calculus from parts, with canonical presentation.
    /// `converse_map` maps each relation index to its converse index;
    /// `cells` is indexed [row][col].
    static Calculus make(std::string name, std::vector<std::string> relations,
                         std::optional<std::size_t> identity, std::vector<std::size_t> converse_map,
                         std::vector<std::vector<RelationSet>> cells) {
        Calculus c;
        c.name = std::move(name);
        c.relations = std::move(relations);
        c.identity = identity;
        c.converse = std::move(converse_map);
        c.table = std::move(cells);
        return c;
    }
};

/// The well-known five-relation region calculus, used by the case study and
/// as the default throughout the CLI. Declaration order dr, eq, po, pp, ppi.
inline const Calculus& rcc5() {
    static const Calculus instance = [] {
        const std::size_t dr = 0, eq = 1, po = 2, pp = 3, ppi = 4;
        auto set = [](std::initializer_list<std::size_t> members) {
            RelationSet s;
            for (auto m : members) s.add(m);
            return s;
        };
        std::vector<std::vector<RelationSet>> t(5, std::vector<RelationSet>(5));
        t[dr][dr] = set({dr, eq, po, pp, ppi});
        t[dr][po] = set({dr, po, pp});
        t[dr][pp] = set({dr, po, pp});
        t[dr][ppi] = set({dr});
        t[dr][eq] = set({dr});
        t[po][dr] = set({dr, po, ppi});
        t[po][po] = set({dr, eq, po, pp, ppi});
        t[po][pp] = set({po, pp});
        t[po][ppi] = set({dr, po, ppi});
        t[po][eq] = set({po});
        t[pp][dr] = set({dr});
        t[pp][po] = set({dr, po, pp});
        t[pp][pp] = set({pp});
        t[pp][ppi] = set({dr, eq, po, pp, ppi});
        t[pp][eq] = set({pp});
        t[ppi][dr] = set({dr, po, ppi});
        t[ppi][po] = set({po, ppi});
        t[ppi][pp] = set({eq, po, pp, ppi});
        t[ppi][ppi] = set({ppi});
        t[ppi][eq] = set({ppi});
        t[eq][dr] = set({dr});
        t[eq][po] = set({po});
        t[eq][pp] = set({pp});
        t[eq][ppi] = set({ppi});
        t[eq][eq] = set({eq});
        return Calculus::make("rcc5", {"dr", "eq", "po", "pp", "ppi"}, eq,
                              {dr, eq, po, ppi, pp}, std::move(t));
    }();
    return instance;
}

// ---------------------------------------------------------------------------
// Algebra operations
// ---------------------------------------------------------------------------

/// Set-lifted composition: union of table cells over all member pairs.
/// Empty inputs yield the empty set.
inline RelationSet compose(const Calculus& calc, RelationSet r, RelationSet s) {
    RelationSet out;
    for (std::size_t a : r)
        for (std::size_t b : s) out |= calc.table[a][b];
    return out;
}

/// Elementwise image of a set under the converse map.
inline RelationSet converse_set(const Calculus& calc, RelationSet r) {
    RelationSet out;
    for (std::size_t a : r) out.add(calc.converse[a]);
    return out;
}

/// A structural problem found in a calculus, naming the violated invariant
/// and the offending relation indices.
struct Diagnostic {
    std::string invariant;
    std::vector<std::size_t> indices;
    std::string message;
};

/// Checks every representational invariant; empty result means well-formed.
/// Never throws: diagnostics, not failures.
inline std::vector<Diagnostic> validate(const Calculus& calc) {
    std::vector<Diagnostic> out;
    const std::size_t n = calc.relation_count();

    if (n == 0) {
        out.push_back({"nonempty relation set", {}, "calculus declares no relations"});
        return out;
    }
    if (n > kMaxRelations) {
        out.push_back({"relation count cap", {},
                       "calculus declares " + std::to_string(n) + " relations; at most " +
                           std::to_string(kMaxRelations) + " are supported"});
        return out;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (calc.relations[i].empty())
            out.push_back({"relation naming", {i}, "relation " + std::to_string(i) + " has an empty name"});
        for (std::size_t j = i + 1; j < n; ++j)
            if (calc.relations[i] == calc.relations[j])
                out.push_back({"relation name uniqueness", {i, j},
                               "duplicate relation name '" + calc.relations[i] + "'"});
    }

    if (calc.converse.size() != n) {
        out.push_back({"converse totality", {},
                       "converse map covers " + std::to_string(calc.converse.size()) + " of " +
                           std::to_string(n) + " relations"});
    } else {
        std::vector<int> hits(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            if (calc.converse[i] >= n) {
                out.push_back({"converse range", {i},
                               "converse of relation " + std::to_string(i) + " is out of range"});
            } else {
                ++hits[calc.converse[i]];
            }
        }
        for (std::size_t i = 0; i < n; ++i)
            if (hits[i] != 1) {
                out.push_back({"converse not a bijection", {i},
                               "relation " + std::to_string(i) + " is the converse of " +
                                   std::to_string(hits[i]) + " relations"});
            }
    }

    if (calc.identity) {
        if (*calc.identity >= n)
            out.push_back({"identity range", {*calc.identity}, "identity index out of range"});
        else if (calc.converse.size() == n && calc.converse[*calc.identity] != *calc.identity)
            out.push_back({"identity converse", {*calc.identity},
                           "converse of the identity relation is not the identity"});
    }

    if (calc.table.size() != n) {
        out.push_back({"table shape", {},
                       "composition table has " + std::to_string(calc.table.size()) + " rows, expected " +
                           std::to_string(n)});
        return out;
    }
    RelationSet valid = RelationSet::full(n);
    for (std::size_t r = 0; r < n; ++r) {
        if (calc.table[r].size() != n) {
            out.push_back({"table shape", {r}, "row " + std::to_string(r) + " is not square"});
            continue;
        }
        for (std::size_t c = 0; c < n; ++c) {
            if (calc.table[r][c].empty())
                out.push_back({"empty composition cell", {r, c},
                               "cell (" + calc.relations[r] + ", " + calc.relations[c] + ") is empty"});
            if (!calc.table[r][c].subset_of(valid))
                out.push_back({"table cell range", {r, c},
                               "cell (" + std::to_string(r) + ", " + std::to_string(c) +
                                   ") references an unknown relation"});
        }
    }
    return out;
}

/// True iff the converse map is an involution: conv(conv(r)) = r for all r.
inline bool detect_involution(const Calculus& calc) {
    for (std::size_t i = 0; i < calc.relation_count(); ++i)
        if (calc.converse[calc.converse[i]] != i) return false;
    return true;
}

struct IdentityLawReport {
    bool overall = false;
    std::vector<bool> per_relation;
};

/// Per-relation identity law: composing r with the identity (on either side)
/// yields exactly {r}. All flags false when no identity is declared.
inline IdentityLawReport detect_identity_law(const Calculus& calc) {
    IdentityLawReport report;
    report.per_relation.assign(calc.relation_count(), false);
    if (!calc.identity) return report;
    const std::size_t id = *calc.identity;
    report.overall = true;
    for (std::size_t r = 0; r < calc.relation_count(); ++r) {
        const bool holds = calc.table[r][id] == RelationSet::single(r) &&
                           calc.table[id][r] == RelationSet::single(r);
        report.per_relation[r] = holds;
        report.overall = report.overall && holds;
    }
    return report;
}

enum class Tier { Gen0, Gen1, Gen2 };

inline const char* tier_name(Tier t) {
    switch (t) {
        case Tier::Gen0: return "GEN0";
        case Tier::Gen1: return "GEN1";
        case Tier::Gen2: return "GEN2";
    }
    return "?";
}

/// The algebraic fingerprint that selects an encoding tier.
struct AlgebraicProfile {
    bool involution = false;
    bool identity_law = false;
    bool all_symmetric = false;
    Tier tier = Tier::Gen0;
};

/// Tier selection: GEN2 needs involution and the identity law, GEN1 needs
/// involution, GEN0 is always permitted. The returned tier is maximal.
inline AlgebraicProfile classify(const Calculus& calc) {
    AlgebraicProfile p;
    p.involution = detect_involution(calc);
    p.identity_law = detect_identity_law(calc).overall;
    p.all_symmetric = true;
    for (std::size_t i = 0; i < calc.relation_count(); ++i)
        if (calc.converse[i] != i) p.all_symmetric = false;
    if (p.involution && p.identity_law)
        p.tier = Tier::Gen2;
    else if (p.involution)
        p.tier = Tier::Gen1;
    else
        p.tier = Tier::Gen0;
    return p;
}

} // namespace qualc
