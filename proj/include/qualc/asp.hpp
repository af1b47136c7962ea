#pragma once

#include <cctype>
#include <cstddef>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qualc/calculus.hpp"
#include "qualc/error.hpp"
#include "qualc/network.hpp"

namespace qualc {

enum class EncodingVariant { Gen0, Gen1, Gen2, Gen3 };

inline const char* variant_name(EncodingVariant v) {
    switch (v) {
        case EncodingVariant::Gen0: return "gen0";
        case EncodingVariant::Gen1: return "gen1";
        case EncodingVariant::Gen2: return "gen2";
        case EncodingVariant::Gen3: return "gen3";
    }
    return "?";
}

inline const char* variant_label(EncodingVariant v) {
    switch (v) {
        case EncodingVariant::Gen0: return "GEN-0";
        case EncodingVariant::Gen1: return "GEN-1";
        case EncodingVariant::Gen2: return "GEN-2";
        case EncodingVariant::Gen3: return "GEN-3";
    }
    return "?";
}

/// A generated logic program. fact_count and rule_count are statement
/// counts: a fact is a statement without ':-', a rule is one with it.
struct AspProgram {
    std::string text;
    EncodingVariant variant = EncodingVariant::Gen0;
    std::size_t fact_count = 0;
    std::size_t rule_count = 0;
};

namespace asp_detail {

struct Builder {
    std::string text;
    std::size_t facts = 0;
    std::size_t rules = 0;

    void comment(const std::string& line) { text += "% " + line + "\n"; }
    void blank() { text += "\n"; }
    void fact(const std::string& stmt) { text += stmt + "\n"; ++facts; }
    void rule(const std::string& stmt) { text += stmt + "\n"; ++rules; }
};

/// Relation names are emitted lowercased so they are valid ASP constants.
inline std::string atom_name(std::string_view name) {
    std::string out;
    out.reserve(name.size());
    for (char ch : name) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    return out;
}

inline std::vector<std::string> atom_names(const Calculus& calc) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& r : calc.relations) {
        auto a = atom_name(r);
        if (!seen.insert(a).second)
            throw Error("relation names '" + r + "' collide after lowercasing for ASP output");
        out.push_back(std::move(a));
    }
    return out;
}

inline std::string pooled(const std::vector<std::string>& items, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

inline void require_eligible(const Calculus& calc, EncodingVariant variant) {
    if (variant == EncodingVariant::Gen0) return;
    const auto profile = classify(calc);
    if (!profile.involution)
        throw Error(std::string(variant_label(variant)) +
                    " requires the involution property, which calculus '" + calc.name + "' lacks");
    if (variant == EncodingVariant::Gen1) return;
    if (!calc.identity)
        throw Error(std::string(variant_label(variant)) + " requires an identity relation, which calculus '" +
                    calc.name + "' does not declare");
    if (!profile.identity_law)
        throw Error(std::string(variant_label(variant)) + " requires the identity law, which calculus '" +
                    calc.name + "' violates");
}

} // namespace asp_detail

/// Instance facts for a network: element/1 and constraint/3.
inline AspProgram emit_instance(const Calculus& calc, const ConstraintNetwork& net) {
    using namespace asp_detail;
    const auto names = atom_names(calc);
    Builder b;
    b.comment("instance: " + std::to_string(net.element_count) + " elements, " +
              std::to_string(net.constraints.size()) + " constraints");
    b.fact("element(0.." + std::to_string(net.element_count == 0 ? 0 : net.element_count - 1) + ").");
    for (const auto& c : net.constraints) {
        RelationSet set = c.rels ? *c.rels : resolve_tokens(calc, c.tokens);
        std::vector<std::string> members;
        for (std::size_t m : set) members.push_back(names[m]);
        b.fact("constraint(" + std::to_string(c.x) + ",(" + pooled(members, ";") + ")," +
               std::to_string(c.y) + ").");
    }
    AspProgram p;
    p.text = std::move(b.text);
    p.variant = EncodingVariant::Gen0;
    p.fact_count = b.facts;
    p.rule_count = b.rules;
    return p;
}

/// The calculus theory for one encoding variant. When `with_instance_interface`
/// is set the program includes the input-constraint integrity rule and expects
/// element/1 and constraint/3 facts to arrive alongside it.
inline AspProgram emit_theory(const Calculus& calc, EncodingVariant variant,
                              bool with_instance_interface) {
    using namespace asp_detail;
    require_eligible(calc, variant);
    const auto names = atom_names(calc);
    const std::size_t n = calc.relation_count();
    const std::string id = calc.identity ? names[*calc.identity] : std::string();

    Builder b;
    b.comment(std::string(variant_label(variant)) + " encoding for calculus '" + calc.name + "'");
    if (variant == EncodingVariant::Gen3) {
        b.comment("composition-table enforcement is external: a propagator checks");
        b.comment("triangles against the table, so no table/3 facts or table");
        b.comment("integrity constraints are emitted here.");
    }
    b.blank();

    // facts
    b.fact("relation(" + pooled(names, "; ") + ").");
    if (variant != EncodingVariant::Gen3) {
        for (const auto& e : calc.presentation_entries()) {
            if (variant == EncodingVariant::Gen2 && calc.identity &&
                (e.row == *calc.identity || e.col == *calc.identity))
                continue;
            std::vector<std::string> members;
            for (std::size_t m : e.members) members.push_back(names[m]);
            b.fact("table(" + names[e.row] + ", " + names[e.col] + ", (" + pooled(members, ";") + ")).");
        }
    }
    b.blank();

    // rules
    if (calc.identity) b.rule("true(X," + id + ",X) :- element(X).");
    const bool halved = variant != EncodingVariant::Gen0;
    b.rule(std::string("{true(X,R,Y) : relation(R)} = 1 :- element(X); element(Y); X ") +
           (halved ? "<" : "!=") + " Y.");
    if (halved) {
        for (std::size_t r = 0; r < n; ++r) {
            if (calc.converse[r] == r) continue; // symmetric: no converse rule needed
            b.rule("true(Y," + names[calc.converse[r]] + ",X) :- true(X," + names[r] + ",Y), X < Y.");
        }
    }
    b.blank();

    // integrity constraints
    switch (variant) {
        case EncodingVariant::Gen0:
            b.rule(":- true(X,R1,Y); true(Y,R2,Z); not true(X,Rout,Z) : table(R1,R2,Rout).");
            break;
        case EncodingVariant::Gen1:
            b.rule(":- true(X,R1,Y); X < Y; true(Y,R2,Z); Y < Z; not true(X,Rout,Z) : table(R1,R2,Rout).");
            break;
        case EncodingVariant::Gen2:
            b.rule(":- true(X," + id + ",Y); true(Y,R,Z); not true(X,R,Z); Y < Z.");
            b.rule(":- true(X,R,Y); true(Y," + id + ",Z); not true(X,R,Z); X < Y.");
            b.rule(":- true(X,R1,Y); X < Y; true(Y,R2,Z); Y < Z; R1 != " + id + "; R2 != " + id +
                   "; not true(X,Rout,Z) : table(R1,R2,Rout).");
            break;
        case EncodingVariant::Gen3:
            break;
    }
    if (with_instance_interface)
        b.rule(":- constraint(X,_,Y); not true(X,R,Y) : constraint(X,R,Y).");

    AspProgram p;
    p.text = std::move(b.text);
    p.variant = variant;
    p.fact_count = b.facts;
    p.rule_count = b.rules;
    return p;
}

/// Whole-program emission: the theory, plus instance facts folded into the
/// fact section when a network is supplied.
inline AspProgram emit(const Calculus& calc, EncodingVariant variant,
                       const ConstraintNetwork* net = nullptr) {
    AspProgram theory = emit_theory(calc, variant, net != nullptr);
    if (!net) return theory;
    AspProgram instance = emit_instance(calc, *net);
    AspProgram p;
    p.variant = variant;
    p.text = theory.text + "\n" + instance.text;
    p.fact_count = theory.fact_count + instance.fact_count;
    p.rule_count = theory.rule_count + instance.rule_count;
    return p;
}

inline AspProgram emit_gen0(const Calculus& c, const ConstraintNetwork* n = nullptr) { return emit(c, EncodingVariant::Gen0, n); }
inline AspProgram emit_gen1(const Calculus& c, const ConstraintNetwork* n = nullptr) { return emit(c, EncodingVariant::Gen1, n); }
inline AspProgram emit_gen2(const Calculus& c, const ConstraintNetwork* n = nullptr) { return emit(c, EncodingVariant::Gen2, n); }
inline AspProgram emit_gen3(const Calculus& c, const ConstraintNetwork* n = nullptr) { return emit(c, EncodingVariant::Gen3, n); }

/// Frequency-assignment program: proper k-coloring of the overlap graph.
/// Arc rules connect pairs whose relation is one of the given overlap
/// relations; identity arcs are restricted to distinct elements. The default
/// matches the rcc5 case study (eq, po, pp, ppi).
inline AspProgram emit_coloring(std::size_t k, const std::vector<std::string>& color_names,
                                const Calculus& calc, RelationSet overlap) {
    using namespace asp_detail;
    if (k == 0 || color_names.size() != k)
        throw Error("coloring needs k >= 1 color names (got k=" + std::to_string(k) + ", " +
                    std::to_string(color_names.size()) + " names)");
    const auto names = atom_names(calc);

    Builder b;
    b.comment(std::to_string(k) + "-coloring of the overlap graph");
    b.comment("ppc corrected to ppi (ppc is not a base relation)");
    b.blank();
    b.fact("color(" + pooled(color_names, "; ") + ").");
    b.rule("{hasColor(X,C) : color(C)} = 1 :- element(X).");
    b.rule(":- arc(V1, V2), hasColor(V1, X), hasColor(V2, Y), X=Y.");
    b.rule("arc(V2, V1) :- arc(V1, V2).");
    for (std::size_t r : overlap) {
        if (calc.identity && r == *calc.identity)
            b.rule("arc(V1, V2) :- true(V1," + names[r] + ",V2), V1!=V2.");
        else
            b.rule("arc(V1, V2) :- true(V1," + names[r] + ",V2).");
    }

    AspProgram p;
    p.text = std::move(b.text);
    p.variant = EncodingVariant::Gen0;
    p.fact_count = b.facts;
    p.rule_count = b.rules;
    return p;
}

/// Case-study default: overlap relations are every rcc5 relation but dr.
inline AspProgram emit_coloring(std::size_t k, const std::vector<std::string>& color_names) {
    const Calculus& c = rcc5();
    RelationSet overlap = c.full_set();
    overlap.remove(*c.index_of("dr"));
    return emit_coloring(k, color_names, c, overlap);
}

// ---------------------------------------------------------------------------
// Program tokenization and the self-linter
// ---------------------------------------------------------------------------

/// Splits an ASP statement into identifier/number tokens and punctuation.
/// Multi-character operators (':-', '!=', '<=', '>=', '..') stay single tokens.
inline std::vector<std::string> asp_tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    auto is_word = [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    };
    while (i < text.size()) {
        char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) { ++i; continue; }
        if (c == '%') break; // comment to end of input chunk
        if (is_word(c)) {
            std::size_t start = i;
            while (i < text.size() && is_word(text[i])) ++i;
            out.emplace_back(text.substr(start, i - start));
            continue;
        }
        if (c == ':' && i + 1 < text.size() && text[i + 1] == '-') { out.emplace_back(":-"); i += 2; continue; }
        if (c == '!' && i + 1 < text.size() && text[i + 1] == '=') { out.emplace_back("!="); i += 2; continue; }
        if (c == '<' && i + 1 < text.size() && text[i + 1] == '=') { out.emplace_back("<="); i += 2; continue; }
        if (c == '>' && i + 1 < text.size() && text[i + 1] == '=') { out.emplace_back(">="); i += 2; continue; }
        if (c == '.' && i + 1 < text.size() && text[i + 1] == '.') { out.emplace_back(".."); i += 2; continue; }
        out.emplace_back(1, c);
        ++i;
    }
    return out;
}

/// Statement token sequences of a program, one per non-comment line.
inline std::vector<std::vector<std::string>> asp_statements(std::string_view text) {
    std::vector<std::vector<std::string>> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        auto toks = asp_tokenize(text.substr(pos, nl - pos));
        if (!toks.empty()) out.push_back(std::move(toks));
        if (nl == text.size()) break;
        pos = nl + 1;
    }
    return out;
}

/// True iff the program contains a statement with exactly the expected
/// token sequence (whitespace-insensitive comparison).
inline bool program_contains_statement(std::string_view program, std::string_view expected) {
    auto want = asp_tokenize(expected);
    for (const auto& stmt : asp_statements(program))
        if (stmt == want) return true;
    return false;
}

namespace asp_detail {

struct PredicateRef {
    std::string name;
    std::size_t arity = 0;
    bool operator<(const PredicateRef& o) const {
        return name != o.name ? name < o.name : arity < o.arity;
    }
};

/// Extracts predicate references 'name(...)' from a token sequence, counting
/// arity as depth-1 commas + 1 (pooling with ';' does not add arguments).
inline std::vector<PredicateRef> predicate_refs(const std::vector<std::string>& toks,
                                                std::size_t from, std::size_t to) {
    std::vector<PredicateRef> out;
    for (std::size_t i = from; i + 1 < to; ++i) {
        if (toks[i + 1] != "(") continue;
        if (toks[i].empty() || !(std::isalpha(static_cast<unsigned char>(toks[i][0])) || toks[i][0] == '_'))
            continue;
        if (i > from && toks[i - 1] == "(") continue; // a pooled/parenthesized term, not a predicate
        std::size_t depth = 0, args = 1, j = i + 1;
        for (; j < to; ++j) {
            if (toks[j] == "(") ++depth;
            else if (toks[j] == ")") { --depth; if (depth == 0) break; }
            else if (toks[j] == "," && depth == 1) ++args;
        }
        out.push_back({toks[i], args});
    }
    return out;
}

} // namespace asp_detail

/// Predicate-closure check: every predicate referenced in a rule body must be
/// defined by some head or arrive as a fact (or be listed in `assumed`).
/// Returns the unresolved references, empty when the program is closed.
inline std::vector<std::string> lint_program(std::string_view text,
                                             const std::set<std::string>& assumed = {}) {
    using asp_detail::PredicateRef;
    using asp_detail::predicate_refs;
    std::set<PredicateRef> defined;
    std::set<PredicateRef> referenced;

    for (const auto& stmt : asp_statements(text)) {
        std::size_t arrow = stmt.size();
        for (std::size_t i = 0; i < stmt.size(); ++i)
            if (stmt[i] == ":-") { arrow = i; break; }
        // head: facts and rule heads define predicates; a choice head defines
        // the predicate inside the braces and references its condition.
        std::size_t head_end = arrow;
        for (const auto& ref : predicate_refs(stmt, 0, head_end)) defined.insert(ref);
        if (arrow < stmt.size())
            for (const auto& ref : predicate_refs(stmt, arrow + 1, stmt.size())) referenced.insert(ref);
        // conditions inside a choice head ('p(X) : q(X)') reference q as well,
        // which predicate_refs over the head range already collected as
        // "defined"; re-classify anything after ':' inside braces.
        // Keeping it simple: heads inside '{...}' both define and reference.
    }

    std::vector<std::string> missing;
    for (const auto& ref : referenced) {
        if (defined.count(ref)) continue;
        std::string key = ref.name + "/" + std::to_string(ref.arity);
        if (assumed.count(key)) continue;
        missing.push_back(key);
    }
    return missing;
}

/// Output file name for an encoding: '<calculus>-<variant>.lp'.
inline std::string encoding_filename(const Calculus& calc, EncodingVariant v, bool instance = false) {
    std::string base = asp_detail::atom_name(calc.name) + "-" + variant_name(v);
    return base + (instance ? "-instance.lp" : ".lp");
}

} // namespace qualc
