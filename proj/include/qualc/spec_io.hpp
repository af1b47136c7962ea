#pragma once

#include <cctype>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qualc/calculus.hpp"
#include "qualc/error.hpp"
#include "qualc/network.hpp"

namespace qualc {

/// Parse failure with a position in the input.
class ParseError : public Error {
public:
    ParseError(std::size_t line, std::size_t column, std::string message, std::string offending)
        : Error("line " + std::to_string(line) + ":" + std::to_string(column) + ": " + message +
                (offending.empty() ? "" : " (near '" + offending + "')")),
          line(line), column(column), message(std::move(message)), offending(std::move(offending)) {}

    std::size_t line;
    std::size_t column;
    std::string message;
    std::string offending;
};

namespace detail {

struct Token {
    std::string text;
    std::size_t column = 0; // 1-based
};

/// Splits one line into whitespace-separated tokens; '#' starts a comment.
inline std::vector<Token> tokenize_line(std::string_view line) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        if (line[i] == '#') break;
        if (std::isspace(static_cast<unsigned char>(line[i]))) { ++i; continue; }
        std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) && line[i] != '#') ++i;
        out.push_back({std::string(line.substr(start, i - start)), start + 1});
    }
    return out;
}

/// Line-oriented cursor over the input that skips blank/comment-only lines.
class LineReader {
public:
    explicit LineReader(std::string_view text) {
        std::size_t pos = 0;
        while (pos <= text.size()) {
            std::size_t nl = text.find('\n', pos);
            if (nl == std::string_view::npos) nl = text.size();
            lines_.emplace_back(text.substr(pos, nl - pos));
            pos = nl + 1;
            if (nl == text.size()) break;
        }
    }

    /// Next non-empty token line, or nullopt at end of input.
    std::optional<std::pair<std::size_t, std::vector<Token>>> next() {
        while (index_ < lines_.size()) {
            std::size_t lineno = index_ + 1;
            auto toks = tokenize_line(lines_[index_]);
            ++index_;
            if (!toks.empty()) return std::make_pair(lineno, std::move(toks));
        }
        return std::nullopt;
    }

    std::size_t line_count() const { return lines_.size(); }

private:
    std::vector<std::string> lines_;
    std::size_t index_ = 0;
};

inline bool is_name_token(std::string_view t) {
    if (t.empty()) return false;
    if (!std::isalpha(static_cast<unsigned char>(t[0])) && t[0] != '_') return false;
    for (char ch : t)
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_') return false;
    return true;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Calculus spec files
//
//   calculus <name>
//   relations <tok> <tok> ...
//   identity <tok>                      (optional)
//   converse
//   <tok> :: <tok>                      (one line per relation)
//   composition
//   <tok> : <tok> :: ( <tok> ... )      (exactly |Rel|^2 lines)
//
// '#' starts a comment to end of line. Declaration order of relations fixes
// all iteration order downstream; the composition section's line order and
// in-cell member order are preserved as the calculus's presentation layout.
// ---------------------------------------------------------------------------

inline Calculus parse_calculus_spec(std::string_view text) {
    using detail::Token;
    detail::LineReader reader(text);

    auto expect_line = [&](const char* what) {
        auto line = reader.next();
        if (!line) throw ParseError(reader.line_count(), 1, std::string("unexpected end of input, expected ") + what, "");
        return std::move(*line);
    };

    auto [l1, header] = expect_line("'calculus <name>'");
    if (header.size() != 2 || header[0].text != "calculus" || !detail::is_name_token(header[1].text))
        throw ParseError(l1, header[0].column, "expected 'calculus <name>'", header[0].text);

    Calculus calc;
    calc.name = header[1].text;

    auto [l2, rels] = expect_line("'relations <tok> ...'");
    if (rels.size() < 2 || rels[0].text != "relations")
        throw ParseError(l2, rels[0].column, "expected 'relations <tok> ...'", rels[0].text);
    for (std::size_t i = 1; i < rels.size(); ++i) {
        if (!detail::is_name_token(rels[i].text))
            throw ParseError(l2, rels[i].column, "malformed relation name", rels[i].text);
        if (calc.index_of(rels[i].text))
            throw ParseError(l2, rels[i].column, "duplicate relation name", rels[i].text);
        calc.relations.push_back(rels[i].text);
    }
    if (calc.relation_count() > kMaxRelations)
        throw ParseError(l2, rels[0].column,
                         "too many relations (" + std::to_string(calc.relation_count()) + " > " +
                             std::to_string(kMaxRelations) + ")",
                         "");

    const std::size_t n = calc.relation_count();
    auto require_relation = [&](const Token& tok, std::size_t line) {
        auto idx = calc.index_of(tok.text);
        if (!idx) throw ParseError(line, tok.column, "unknown relation token", tok.text);
        return *idx;
    };

    auto [l3, section] = expect_line("'identity <tok>' or 'converse'");
    if (section.size() == 2 && section[0].text == "identity") {
        calc.identity = require_relation(section[1], l3);
        auto next = expect_line("'converse'");
        l3 = next.first;
        section = std::move(next.second);
    }
    if (section.size() != 1 || section[0].text != "converse")
        throw ParseError(l3, section[0].column, "expected 'converse' section header", section[0].text);

    calc.converse.assign(n, n); // n marks "not yet declared"
    for (std::size_t k = 0; k < n; ++k) {
        auto [line, toks] = expect_line("a converse line '<tok> :: <tok>'");
        if (toks.size() != 3 || toks[1].text != "::")
            throw ParseError(line, toks[0].column, "expected '<tok> :: <tok>' converse line", toks[0].text);
        std::size_t from = require_relation(toks[0], line);
        std::size_t to = require_relation(toks[2], line);
        if (calc.converse[from] != n)
            throw ParseError(line, toks[0].column, "duplicate converse line for relation", toks[0].text);
        calc.converse[from] = to;
    }

    auto [l4, comp] = expect_line("'composition' section header");
    if (comp.size() != 1 || comp[0].text != "composition")
        throw ParseError(l4, comp[0].column, "expected 'composition' section header", comp[0].text);

    calc.table.assign(n, std::vector<RelationSet>(n));
    std::vector<std::vector<bool>> seen(n, std::vector<bool>(n, false));
    for (std::size_t k = 0; k < n * n; ++k) {
        auto [line, toks] = expect_line("a composition line '<tok> : <tok> :: ( <tok> ... )'");
        // shape: row : col :: ( members... )
        if (toks.size() < 6 || toks[1].text != ":" || toks[3].text != "::" || toks[4].text != "(" ||
            toks.back().text != ")")
            throw ParseError(line, toks[0].column,
                             "expected '<tok> : <tok> :: ( <tok> ... )' composition line", toks[0].text);
        std::size_t row = require_relation(toks[0], line);
        std::size_t col = require_relation(toks[2], line);
        if (seen[row][col])
            throw ParseError(line, toks[0].column,
                             "duplicate composition line for (" + toks[0].text + ", " + toks[2].text + ")",
                             toks[0].text);
        seen[row][col] = true;
        CompositionEntry entry{row, col, {}};
        RelationSet members;
        for (std::size_t i = 5; i + 1 < toks.size(); ++i) {
            std::size_t m = require_relation(toks[i], line);
            if (!members.contains(m)) entry.members.push_back(m);
            members.add(m);
        }
        if (members.empty())
            throw ParseError(line, toks[4].column, "empty composition cell", toks[0].text + " : " + toks[2].text);
        calc.table[row][col] = members;
        calc.entries.push_back(std::move(entry));
    }
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
            if (!seen[r][c])
                throw ParseError(reader.line_count(), 1,
                                 "missing composition line for (" + calc.relations[r] + ", " +
                                     calc.relations[c] + ")",
                                 "");
    if (auto extra = reader.next())
        throw ParseError(extra->first, extra->second[0].column, "unexpected content after composition table",
                         extra->second[0].text);

    auto diagnostics = validate(calc);
    if (!diagnostics.empty())
        throw ParseError(reader.line_count(), 1, "calculus fails validation: " + diagnostics.front().message, "");
    return calc;
}

/// Writes a calculus in the spec-file grammar, preserving the presentation
/// layout. parse(write(c)) == c.
inline std::string write_calculus_spec(const Calculus& calc) {
    std::ostringstream out;
    out << "calculus " << calc.name << "\n";
    out << "relations";
    for (const auto& r : calc.relations) out << " " << r;
    out << "\n";
    if (calc.identity) out << "identity " << calc.relations[*calc.identity] << "\n";
    out << "converse\n";
    for (std::size_t i = 0; i < calc.relation_count(); ++i)
        out << calc.relations[i] << " :: " << calc.relations[calc.converse[i]] << "\n";
    out << "composition\n";
    for (const auto& e : calc.presentation_entries()) {
        out << calc.relations[e.row] << " : " << calc.relations[e.col] << " :: (";
        for (std::size_t m : e.members) out << " " << calc.relations[m];
        out << " )\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Network files
//
//   <maxIndex> # <free text>
//   <i> <j> ( <tok> ... )
//   ...
//   .
//
// Element indices range over 0..maxIndex. Relation tokens are not resolved
// at parse time; they are matched against a calculus by normalize_network.
// ---------------------------------------------------------------------------

inline ConstraintNetwork parse_network(std::string_view text) {
    detail::LineReader reader(text);

    auto header = reader.next();
    if (!header) throw ParseError(1, 1, "empty network file", "");
    auto& [hline, htoks] = *header;

    long max_index = -1;
    try {
        std::size_t used = 0;
        max_index = std::stol(htoks[0].text, &used);
        if (used != htoks[0].text.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw ParseError(hline, htoks[0].column, "malformed header: expected '<maxIndex> # <text>'", htoks[0].text);
    }
    if (max_index < 0)
        throw ParseError(hline, htoks[0].column, "negative element bound in header", htoks[0].text);
    if (htoks.size() > 1)
        throw ParseError(hline, htoks[1].column, "unexpected token after header bound", htoks[1].text);

    ConstraintNetwork net = ConstraintNetwork::with_elements(static_cast<std::size_t>(max_index) + 1);

    bool terminated = false;
    while (auto line = reader.next()) {
        auto& [lineno, toks] = *line;
        if (toks.size() == 1 && toks[0].text == ".") { terminated = true; break; }

        if (toks.size() < 4 || toks[2].text != "(" || toks.back().text != ")")
            throw ParseError(lineno, toks[0].column, "expected '<i> <j> ( <tok> ... )'", toks[0].text);
        auto parse_index = [&](const detail::Token& t) -> std::size_t {
            long v = -1;
            try {
                std::size_t used = 0;
                v = std::stol(t.text, &used);
                if (used != t.text.size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw ParseError(lineno, t.column, "malformed element index", t.text);
            }
            if (v < 0 || v > max_index)
                throw ParseError(lineno, t.column, "element index out of range (bound " +
                                                      std::to_string(max_index) + ")", t.text);
            return static_cast<std::size_t>(v);
        };
        std::size_t i = parse_index(toks[0]);
        std::size_t j = parse_index(toks[1]);
        std::vector<std::string> tokens;
        for (std::size_t k = 3; k + 1 < toks.size(); ++k) tokens.push_back(toks[k].text);
        net.add_constraint(i, j, std::move(tokens));
    }
    if (!terminated) throw ParseError(reader.line_count(), 1, "missing '.' terminator line", "");
    if (auto extra = reader.next())
        throw ParseError(extra->first, extra->second[0].column, "unexpected content after terminator",
                         extra->second[0].text);

    // comment text from the raw header line, if any
    std::size_t hash = text.find('#');
    std::size_t eol = text.find('\n');
    if (hash != std::string_view::npos && (eol == std::string_view::npos || hash < eol)) {
        std::string_view rest = text.substr(hash + 1, (eol == std::string_view::npos ? text.size() : eol) - hash - 1);
        while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
        while (!rest.empty() && (rest.back() == ' ' || rest.back() == '\r')) rest.remove_suffix(1);
        net.comment = std::string(rest);
    }
    return net;
}

inline std::string write_network(const ConstraintNetwork& net) {
    std::ostringstream out;
    out << (net.element_count == 0 ? 0 : net.element_count - 1);
    out << " #";
    if (!net.comment.empty()) out << " " << net.comment;
    out << "\n";
    for (const auto& c : net.constraints) {
        out << c.x << " " << c.y << " (";
        for (const auto& t : c.tokens) out << " " << t;
        out << " )\n";
    }
    out << ".\n";
    return out.str();
}

} // namespace qualc
