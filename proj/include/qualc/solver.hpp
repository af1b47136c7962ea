#pragma once

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qualc/calculus.hpp"
#include "qualc/error.hpp"
#include "qualc/network.hpp"

namespace qualc {

// ---------------------------------------------------------------------------
// Model representation
// ---------------------------------------------------------------------------

/// A total assignment of one base relation to every unordered element pair
/// (x, y) with x before y in element order. The reverse direction is derived
/// through the converse map on demand.
struct Assignment {
    std::size_t element_count = 0;
    std::vector<std::uint8_t> pair_relation; // indexed by pair_index(i, j)

    static std::size_t pair_count(std::size_t n) { return n * (n - 1) / 2; }

    /// Lexicographic index of the unordered pair (i, j), i < j.
    static std::size_t pair_index(std::size_t i, std::size_t j, std::size_t n) {
        assert(i < j && j < n);
        return i * n - i * (i + 1) / 2 + (j - i - 1);
    }

    std::size_t at(std::size_t i, std::size_t j) const {
        return pair_relation[pair_index(i, j, element_count)];
    }

    /// Relation holding for the ordered pair (x, y), x != y.
    std::size_t directed(const Calculus& calc, std::size_t x, std::size_t y) const {
        if (x < y) return at(x, y);
        return calc.converse[at(y, x)];
    }

    bool total() const { return pair_relation.size() == pair_count(element_count); }

    friend bool operator==(const Assignment& a, const Assignment& b) {
        return a.element_count == b.element_count && a.pair_relation == b.pair_relation;
    }
};

struct PairLiteral {
    std::size_t x = 0;
    std::size_t y = 0;
    std::size_t relation = 0;

    friend bool operator==(const PairLiteral& a, const PairLiteral& b) {
        return a.x == b.x && a.y == b.y && a.relation == b.relation;
    }
    friend bool operator<(const PairLiteral& a, const PairLiteral& b) {
        if (a.x != b.x) return a.x < b.x;
        if (a.y != b.y) return a.y < b.y;
        return a.relation < b.relation;
    }
};

/// A forbidden combination of pair assignments (at least two literals).
struct Nogood {
    std::vector<PairLiteral> literals;
};

// ---------------------------------------------------------------------------
// Configuration and results
// ---------------------------------------------------------------------------

enum class SolveMode { Gen0, Gen1, Gen2, Propagator, Auto };
enum class SolveStatus { Sat, Unsat, Timeout };

inline const char* mode_name(SolveMode m) {
    switch (m) {
        case SolveMode::Gen0: return "gen0";
        case SolveMode::Gen1: return "gen1";
        case SolveMode::Gen2: return "gen2";
        case SolveMode::Propagator: return "prop";
        case SolveMode::Auto: return "auto";
    }
    return "?";
}

inline const char* status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::Sat: return "SAT";
        case SolveStatus::Unsat: return "UNSAT";
        case SolveStatus::Timeout: return "TIMEOUT";
    }
    return "?";
}

struct SolverStats {
    std::uint64_t decisions = 0;
    std::uint64_t backtracks = 0;
    std::uint64_t nogoods_added = 0;
    std::uint64_t table_checks = 0; // composition-cell consultations
    double elapsed_ms = 0.0;
    std::size_t peak_pair_count = 0;
};

struct SolveConfig {
    SolveMode mode = SolveMode::Auto;
    std::uint64_t max_models = 1; // 0 means unbounded enumeration
    std::optional<double> time_budget_s;
};

struct SolveResult {
    SolveStatus status = SolveStatus::Unsat;
    std::optional<Assignment> model;
    std::vector<Assignment> models; // filled when enumerating
    SolverStats stats;
    std::vector<Nogood> nogoods; // recorded by the propagator mode
};

// ---------------------------------------------------------------------------
// verify: the checkable core of model existence
// ---------------------------------------------------------------------------

struct Violation {
    std::string kind; // "constraint" or "triangle"
    std::size_t x = 0, y = 0, z = 0;
    std::string detail;
};

struct VerifyResult {
    bool ok = true;
    std::vector<Violation> violations;
};

/// Checks a total assignment against the network's constraints and the
/// composition table over every ordered triple of distinct elements.
inline VerifyResult verify(const Calculus& calc, const ConstraintNetwork& net, const Assignment& model) {
    VerifyResult result;
    const std::size_t n = model.element_count;
    auto flag = [&](Violation v) {
        result.ok = false;
        if (result.violations.size() < 100) result.violations.push_back(std::move(v));
    };

    for (const auto& c : net.constraints) {
        RelationSet rels = c.rels ? *c.rels : resolve_tokens(calc, c.tokens);
        if (c.x == c.y) {
            if (!calc.identity || !rels.contains(*calc.identity))
                flag({"constraint", c.x, c.y, 0, "self pair admits no identity relation"});
            continue;
        }
        std::size_t assigned = model.directed(calc, c.x, c.y);
        if (!rels.contains(assigned))
            flag({"constraint", c.x, c.y, 0,
                  "assigned " + calc.relations[assigned] + " not in constraint set"});
    }

    for (std::size_t x = 0; x < n; ++x)
        for (std::size_t y = 0; y < n; ++y) {
            if (y == x) continue;
            for (std::size_t z = 0; z < n; ++z) {
                if (z == x || z == y) continue;
                std::size_t rxy = model.directed(calc, x, y);
                std::size_t ryz = model.directed(calc, y, z);
                std::size_t rxz = model.directed(calc, x, z);
                if (!calc.table[rxy][ryz].contains(rxz))
                    flag({"triangle", x, y, z,
                          calc.relations[rxz] + " not in cell (" + calc.relations[rxy] + ", " +
                              calc.relations[ryz] + ")"});
            }
        }
    return result;
}

// ---------------------------------------------------------------------------
// Search internals
// ---------------------------------------------------------------------------

namespace solver_detail {

using Clock = std::chrono::steady_clock;

struct Deadline {
    std::optional<Clock::time_point> at;
    bool expired() const { return at && Clock::now() >= *at; }
};

inline Deadline make_deadline(const SolveConfig& cfg) {
    Deadline d;
    if (cfg.time_budget_s)
        d.at = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                  std::chrono::duration<double>(*cfg.time_budget_s));
    return d;
}

/// Stop/continue signal from the model callback.
using ModelCallback = std::function<bool(const Assignment&)>;

/// Chronological backtracking over pair variables with look-back consistency
/// checks at triangle completion. Mirrors the search space of the encodings:
/// Gen0 branches on both ordered directions of every pair, Gen1/Gen2 on
/// unordered pairs with converse-derived reverses; Gen2 short-circuits
/// identity edges instead of consulting the table.
class LookBackEngine {
public:
    LookBackEngine(const Calculus& calc, const ConstraintNetwork& net, SolveMode mode,
                   SolverStats& stats, Deadline deadline)
        : calc_(calc), stats_(stats), deadline_(deadline), mode_(mode),
          n_(net.element_count), ordered_(mode == SolveMode::Gen0) {
        id_ = calc_.identity ? static_cast<long>(*calc_.identity) : -1;
        if (ordered_) {
            var_count_ = n_ * (n_ - 1);
            vmap_.assign(n_ * n_, SIZE_MAX);
            std::size_t v = 0;
            for (std::size_t x = 0; x < n_; ++x)
                for (std::size_t y = 0; y < n_; ++y) {
                    if (y == x) continue;
                    vars_.push_back({x, y});
                    vmap_[x * n_ + y] = v++;
                }
        } else {
            var_count_ = Assignment::pair_count(n_);
            for (std::size_t i = 0; i < n_; ++i)
                for (std::size_t j = i + 1; j < n_; ++j) vars_.push_back({i, j});
        }
        stats_.peak_pair_count = var_count_;

        std::vector<RelationSet> domain(var_count_, calc_.full_set());
        for (const auto& c : net.constraints) {
            if (c.x == c.y) continue; // normalized nets keep only inconsistent self pairs
            RelationSet rels = c.rels ? *c.rels : resolve_tokens(calc_, c.tokens);
            if (ordered_) {
                domain[vmap_[c.x * n_ + c.y]] &= rels;
            } else {
                std::size_t i = std::min(c.x, c.y), j = std::max(c.x, c.y);
                if (c.x > c.y) rels = converse_set(calc_, rels);
                domain[Assignment::pair_index(i, j, n_)] &= rels;
            }
        }
        candidates_.resize(var_count_);
        for (std::size_t v2 = 0; v2 < var_count_; ++v2)
            for (std::size_t r : domain[v2]) candidates_[v2].push_back(static_cast<std::uint8_t>(r));
        value_.assign(var_count_, kUnset);
    }

    SolveStatus run(const ModelCallback& on_model) {
        if (n_ <= 1) {
            Assignment a;
            a.element_count = n_;
            on_model(a);
            return SolveStatus::Sat;
        }
        bool found = false;
        std::vector<std::size_t> choice(var_count_ + 1, 0);
        std::size_t pos = 0;
        while (true) {
            if ((stats_.decisions & 1023) == 0 && deadline_.expired())
                return found ? SolveStatus::Sat : SolveStatus::Timeout;

            if (pos == var_count_) {
                Assignment a = snapshot();
                bool fresh = !ordered_ || seen_.insert(a.pair_relation).second;
                if (fresh && verify(calc_, *net_for_verify_, a).ok) {
                    found = true;
                    if (on_model(a)) return SolveStatus::Sat;
                }
                // keep enumerating: step back into the last variable's loop
                --pos;
                value_[pos] = kUnset;
                continue;
            }

            bool placed = false;
            while (choice[pos] < candidates_[pos].size()) {
                std::uint8_t val = candidates_[pos][choice[pos]++];
                ++stats_.decisions;
                if (consistent(pos, val)) {
                    value_[pos] = val;
                    placed = true;
                    break;
                }
            }
            if (placed) {
                ++pos;
                choice[pos] = 0;
            } else {
                ++stats_.backtracks;
                if (pos == 0) return found ? SolveStatus::Sat : SolveStatus::Unsat;
                --pos;
                value_[pos] = kUnset;
            }
        }
    }

    void set_verify_net(const ConstraintNetwork* net) { net_for_verify_ = net; }

private:
    static constexpr std::uint8_t kUnset = 0xFF;

    std::size_t ovar(std::size_t x, std::size_t y) const { return vmap_[x * n_ + y]; }

    long oval(std::size_t x, std::size_t y) const {
        std::uint8_t v = value_[ovar(x, y)];
        return v == kUnset ? -1 : static_cast<long>(v);
    }

    long uval(std::size_t i, std::size_t j) const {
        std::uint8_t v = value_[Assignment::pair_index(std::min(i, j), std::max(i, j), n_)];
        return v == kUnset ? -1 : static_cast<long>(v);
    }

    bool cell_has(std::size_t r, std::size_t s, std::size_t t) {
        ++stats_.table_checks;
        return calc_.table[r][s].contains(t);
    }

    bool consistent(std::size_t var, std::size_t val) {
        const auto [x, y] = vars_[var];
        if (ordered_) return consistent_ordered(x, y, val);
        return consistent_unordered(x, y, val);
    }

    /// Gen0: the new ordered pair (x, y) can sit in any of the three slots of
    /// an ordered triple; when the calculus has an identity, the repeated
    /// triples (x, y, x) and (y, x, y) tie the two directions together via
    /// the implicit true(x, id, x) atoms.
    bool consistent_ordered(std::size_t x, std::size_t y, std::size_t r) {
        for (std::size_t z = 0; z < n_; ++z) {
            if (z == x || z == y) continue;
            long yz = oval(y, z), xz = oval(x, z);
            if (yz >= 0 && xz >= 0 && !cell_has(r, yz, xz)) return false;
            long zx = oval(z, x), zy = oval(z, y);
            if (zx >= 0 && zy >= 0 && !cell_has(zx, r, zy)) return false;
            if (xz >= 0 && zy >= 0 && !cell_has(xz, zy, r)) return false;
        }
        if (id_ >= 0) {
            long back = oval(y, x);
            if (back >= 0) {
                if (!cell_has(r, back, static_cast<std::size_t>(id_))) return false;
                if (!cell_has(back, r, static_cast<std::size_t>(id_))) return false;
            }
        }
        return true;
    }

    /// Gen1/Gen2: one check per completed unordered triangle, oriented
    /// a < b < c exactly as the X<Y / Y<Z guards orient the encodings.
    bool consistent_unordered(std::size_t x, std::size_t y, std::size_t val) {
        for (std::size_t z = 0; z < n_; ++z) {
            if (z == x || z == y) continue;
            std::size_t a = x, b = y, c = z;
            if (c < a) std::swap(a, c);
            if (b < a) std::swap(a, b);
            if (c < b) std::swap(b, c);
            long ab = (a == x && b == y) ? static_cast<long>(val) : uval(a, b);
            long bc = (b == x && c == y) ? static_cast<long>(val) : uval(b, c);
            long ac = (a == x && c == y) ? static_cast<long>(val) : uval(a, c);
            if (ab < 0 || bc < 0 || ac < 0) continue;
            if (mode_ == SolveMode::Gen2 && id_ >= 0) {
                if (ab == id_) {
                    if (ac != bc) return false;
                    continue;
                }
                if (bc == id_) {
                    if (ac != ab) return false;
                    continue;
                }
            }
            if (!cell_has(static_cast<std::size_t>(ab), static_cast<std::size_t>(bc),
                          static_cast<std::size_t>(ac)))
                return false;
        }
        return true;
    }

    Assignment snapshot() const {
        Assignment a;
        a.element_count = n_;
        a.pair_relation.resize(Assignment::pair_count(n_));
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = i + 1; j < n_; ++j) {
                std::uint8_t v = ordered_ ? value_[ovar(i, j)]
                                          : value_[Assignment::pair_index(i, j, n_)];
                a.pair_relation[Assignment::pair_index(i, j, n_)] = v;
            }
        return a;
    }

    const Calculus& calc_;
    SolverStats& stats_;
    Deadline deadline_;
    SolveMode mode_;
    std::size_t n_;
    bool ordered_;
    long id_ = -1;
    std::size_t var_count_ = 0;
    std::vector<std::pair<std::size_t, std::size_t>> vars_;
    std::vector<std::size_t> vmap_;
    std::vector<std::vector<std::uint8_t>> candidates_;
    std::vector<std::uint8_t> value_;
    std::set<std::vector<std::uint8_t>> seen_;
    const ConstraintNetwork* net_for_verify_ = nullptr;
};

} // namespace solver_detail

// ---------------------------------------------------------------------------
// Propagator: composition-table enforcement on partial assignments
// ---------------------------------------------------------------------------

struct PropagateOutcome {
    bool ok = true;
    std::optional<Nogood> conflict;
};

/// Watches pair assignments and refines the domains of related pairs through
/// the composition table, triangle by triangle. A conflict produces a nogood
/// over the antecedent assignments: the two triangle literals when the third
/// domain was untouched, plus the assignments that had narrowed it otherwise.
class Propagator {
public:
    Propagator(const Calculus& calc, std::size_t element_count)
        : calc_(calc), n_(element_count), rc_(calc.relation_count()),
          pair_count_(Assignment::pair_count(element_count)) {
        dom_.assign(pair_count_, calc.full_set());
        blame_.assign(pair_count_, {});
        decided_.assign(pair_count_, 0);
        in_queue_.assign(pair_count_, 0);
        pairs_.reserve(pair_count_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = i + 1; j < n_; ++j) pairs_.push_back({i, j});
        flat_.reserve(rc_ * rc_);
        for (std::size_t r = 0; r < rc_; ++r)
            for (std::size_t s = 0; s < rc_; ++s) flat_.push_back(calc.table[r][s]);
    }

    std::size_t pair_count() const { return pair_count_; }

    RelationSet domain(std::size_t x, std::size_t y) const { return dom_[index(x, y)]; }
    RelationSet domain_by_index(std::size_t p) const { return dom_[p]; }
    std::pair<std::size_t, std::size_t> pair_elements(std::size_t p) const { return pairs_[p]; }

    /// Input-level restriction (constraints, or test setups); carries no blame.
    void restrict_domain(std::size_t x, std::size_t y, RelationSet set) {
        std::size_t p = index(x, y);
        if (x > y) set = converse_set(calc_, set);
        save(p);
        dom_[p] &= set;
        enqueue(p);
    }

    /// Decision: narrow the pair to a single relation and propagate.
    PropagateOutcome assign(std::size_t x, std::size_t y, std::size_t relation) {
        std::size_t p = index(x, y);
        std::size_t rel = x < y ? relation : calc_.converse[relation];
        if (!dom_[p].contains(rel)) {
            std::vector<std::uint32_t> contributors;
            collect_blame(p, contributors);
            Nogood ng = literals_for(contributors);
            ng.literals.push_back({std::min(x, y), std::max(x, y), rel});
            std::sort(ng.literals.begin(), ng.literals.end());
            ng.literals.erase(std::unique(ng.literals.begin(), ng.literals.end()), ng.literals.end());
            record(ng);
            return make_conflict(std::move(ng));
        }
        save(p);
        dom_[p] = RelationSet::single(rel);
        decided_[p] = 1;
        enqueue(p);
        return propagate();
    }

    /// Runs table refinement to fixpoint over the pending queue.
    PropagateOutcome propagate() {
        while (!queue_.empty()) {
            std::size_t p = queue_.back();
            queue_.pop_back();
            in_queue_[p] = 0;
            const auto [px, py] = pairs_[p];
            for (std::size_t z = 0; z < n_; ++z) {
                if (z == px || z == py) continue;
                std::size_t a = px, b = py, c = z;
                if (c < a) std::swap(a, c);
                if (b < a) std::swap(a, b);
                if (c < b) std::swap(b, c);
                if (auto conflict = revise(a, b, c)) return make_conflict(std::move(*conflict));
            }
        }
        return {true, std::nullopt};
    }

    /// Fixpoint with every triangle visited at least once; run before search.
    PropagateOutcome propagate_all() {
        for (std::size_t a = 0; a < n_; ++a)
            for (std::size_t b = a + 1; b < n_; ++b)
                for (std::size_t c = b + 1; c < n_; ++c)
                    if (auto conflict = revise(a, b, c)) return make_conflict(std::move(*conflict));
        return propagate();
    }

    void push_level() { level_marks_.push_back(trail_.size()); }

    void pop_level() {
        assert(!level_marks_.empty());
        std::size_t mark = level_marks_.back();
        level_marks_.pop_back();
        while (trail_.size() > mark) {
            auto& entry = trail_.back();
            dom_[entry.pair] = entry.old_dom;
            blame_[entry.pair] = std::move(entry.old_blame);
            decided_[entry.pair] = entry.old_decided;
            trail_.pop_back();
        }
        for (std::size_t p : queue_) in_queue_[p] = 0;
        queue_.clear();
    }

    bool all_singleton() const {
        for (const auto& d : dom_)
            if (!d.is_singleton()) return false;
        return true;
    }

    Assignment snapshot() const {
        Assignment a;
        a.element_count = n_;
        a.pair_relation.resize(pair_count_);
        for (std::size_t p = 0; p < pair_count_; ++p)
            a.pair_relation[p] = static_cast<std::uint8_t>(dom_[p].first());
        return a;
    }

    const std::vector<Nogood>& recorded_nogoods() const { return nogoods_; }
    std::uint64_t table_checks() const { return table_checks_; }

private:
    struct TrailEntry {
        std::size_t pair;
        RelationSet old_dom;
        std::vector<std::uint32_t> old_blame;
        char old_decided;
    };

    std::size_t index(std::size_t x, std::size_t y) const {
        return Assignment::pair_index(std::min(x, y), std::max(x, y), n_);
    }

    void save(std::size_t p) {
        trail_.push_back({p, dom_[p], blame_[p], decided_[p]});
    }

    void enqueue(std::size_t p) {
        if (!in_queue_[p]) {
            in_queue_[p] = 1;
            queue_.push_back(p);
        }
    }

    void record(const Nogood& ng) {
        if (ng.literals.size() >= 2) {
            nogoods_.push_back(ng);
        }
    }

    static PropagateOutcome make_conflict(Nogood ng) {
        PropagateOutcome out;
        out.ok = false;
        if (ng.literals.size() >= 2) out.conflict = std::move(ng);
        return out;
    }

    /// Contributing assigned pairs behind the current domain of p.
    void collect_blame(std::size_t p, std::vector<std::uint32_t>& out) const {
        if (decided_[p]) {
            out.push_back(static_cast<std::uint32_t>(p));
            return;
        }
        out.insert(out.end(), blame_[p].begin(), blame_[p].end());
    }

    Nogood literals_for(std::vector<std::uint32_t> contributors) const {
        std::sort(contributors.begin(), contributors.end());
        contributors.erase(std::unique(contributors.begin(), contributors.end()), contributors.end());
        Nogood ng;
        for (std::uint32_t p : contributors) {
            const auto [x, y] = pairs_[p];
            ng.literals.push_back({x, y, dom_[p].first()});
        }
        return ng;
    }

    /// One GAC pass over the canonical triangle a < b < c:
    ///   t(a,c) must lie in cell(t(a,b), t(b,c)).
    /// Returns a conflict nogood (possibly too small to record) when some
    /// domain empties; domains are left untouched on the conflict path.
    std::optional<Nogood> revise(std::size_t a, std::size_t b, std::size_t c) {
        const std::size_t ab = index(a, b), bc = index(b, c), ac = index(a, c);
        const RelationSet A = dom_[ab], B = dom_[bc], C = dom_[ac];
        RelationSet reachable, supA, supB;
        for (std::size_t r : A) {
            const RelationSet* row = &flat_[r * rc_];
            for (std::size_t s : B) {
                ++table_checks_;
                RelationSet cell = row[s];
                reachable |= cell;
                if (!(cell & C).empty()) {
                    supA.add(r);
                    supB.add(s);
                }
            }
        }
        struct Update { std::size_t pair; RelationSet next; std::size_t o1, o2; };
        const Update updates[3] = {
            {ac, C & reachable, ab, bc},
            {ab, A & supA, bc, ac},
            {bc, B & supB, ab, ac},
        };
        for (const auto& u : updates) {
            if (u.next == dom_[u.pair]) continue;
            std::vector<std::uint32_t> contributors = blame_[u.pair];
            if (decided_[u.pair]) collect_blame(u.pair, contributors);
            collect_blame(u.o1, contributors);
            collect_blame(u.o2, contributors);
            if (u.next.empty()) {
                Nogood ng = literals_for(std::move(contributors));
                record(ng);
                return ng;
            }
            save(u.pair);
            dom_[u.pair] = u.next;
            std::sort(contributors.begin(), contributors.end());
            contributors.erase(std::unique(contributors.begin(), contributors.end()), contributors.end());
            blame_[u.pair] = std::move(contributors);
            enqueue(u.pair);
        }
        return std::nullopt;
    }

    const Calculus& calc_;
    std::size_t n_;
    std::size_t rc_;
    std::size_t pair_count_;
    std::vector<RelationSet> flat_;
    std::vector<std::pair<std::size_t, std::size_t>> pairs_;
    std::vector<RelationSet> dom_;
    std::vector<std::vector<std::uint32_t>> blame_;
    std::vector<char> decided_;
    std::vector<char> in_queue_;
    std::vector<std::size_t> queue_;
    std::vector<TrailEntry> trail_;
    std::vector<std::size_t> level_marks_;
    std::vector<Nogood> nogoods_;
    std::uint64_t table_checks_ = 0;
};

namespace solver_detail {

/// Search driver over the Propagator: decide, propagate, backtrack.
class PropagatorEngine {
public:
    PropagatorEngine(const Calculus& calc, const ConstraintNetwork& net, SolverStats& stats,
                     Deadline deadline)
        : calc_(calc), net_(net), stats_(stats), deadline_(deadline), n_(net.element_count),
          prop_(calc, net.element_count) {
        stats_.peak_pair_count = prop_.pair_count();
        for (const auto& c : net.constraints) {
            if (c.x == c.y) continue;
            prop_.restrict_domain(c.x, c.y, c.rels ? *c.rels : resolve_tokens(calc, c.tokens));
        }
    }

    SolveStatus run(const ModelCallback& on_model, std::vector<Nogood>& nogoods_out) {
        if (n_ <= 1) {
            Assignment a;
            a.element_count = n_;
            on_model(a);
            return SolveStatus::Sat;
        }
        bool found = false;
        auto finish = [&](SolveStatus exhausted_status) {
            nogoods_out = prop_.recorded_nogoods();
            stats_.nogoods_added = nogoods_out.size();
            stats_.table_checks = prop_.table_checks();
            return found ? SolveStatus::Sat : exhausted_status;
        };

        auto initial = prop_.propagate_all();
        if (!initial.ok) return finish(SolveStatus::Unsat);

        struct Frame {
            std::size_t pair;
            std::vector<std::uint8_t> values;
            std::size_t next = 0;
            std::size_t scan_from = 0;
        };
        std::vector<Frame> stack;

        auto open_frame = [&](std::size_t from) -> bool {
            for (std::size_t p = from; p < prop_.pair_count(); ++p) {
                RelationSet d = prop_.domain_by_index(p);
                if (d.count() > 1) {
                    Frame f;
                    f.pair = p;
                    for (std::size_t r : d) f.values.push_back(static_cast<std::uint8_t>(r));
                    f.scan_from = p + 1;
                    stack.push_back(std::move(f));
                    return true;
                }
            }
            return false;
        };

        if (!open_frame(0)) {
            Assignment a = prop_.snapshot();
            if (verify(calc_, net_, a).ok) {
                found = true;
                on_model(a);
            }
            return finish(SolveStatus::Unsat);
        }

        while (!stack.empty()) {
            if ((stats_.decisions & 1023) == 0 && deadline_.expired())
                return finish(SolveStatus::Timeout);
            Frame& f = stack.back();
            if (f.next >= f.values.size()) {
                ++stats_.backtracks;
                stack.pop_back();
                if (!stack.empty()) prop_.pop_level();
                continue;
            }
            std::uint8_t val = f.values[f.next++];
            ++stats_.decisions;
            prop_.push_level();
            auto [px, py] = prop_.pair_elements(f.pair);
            auto outcome = prop_.assign(px, py, val);
            if (!outcome.ok) {
                prop_.pop_level();
                continue;
            }
            if (!open_frame(f.scan_from)) {
                // every domain is a singleton: candidate model
                Assignment a = prop_.snapshot();
                if (verify(calc_, net_, a).ok) {
                    found = true;
                    if (on_model(a)) return finish(SolveStatus::Unsat);
                }
                prop_.pop_level();
                continue;
            }
        }
        return finish(SolveStatus::Unsat);
    }

private:
    const Calculus& calc_;
    const ConstraintNetwork& net_;
    SolverStats& stats_;
    Deadline deadline_;
    std::size_t n_;
    Propagator prop_;
};

} // namespace solver_detail

// ---------------------------------------------------------------------------
// solve / brute_force / coloring
// ---------------------------------------------------------------------------

inline SolveMode resolve_mode(const Calculus& calc, SolveMode mode) {
    if (mode != SolveMode::Auto) return mode;
    switch (classify(calc).tier) {
        case Tier::Gen0: return SolveMode::Gen0;
        case Tier::Gen1: return SolveMode::Gen1;
        case Tier::Gen2: return SolveMode::Gen2;
    }
    return SolveMode::Gen0;
}

inline void require_mode_eligible(const Calculus& calc, SolveMode mode) {
    if (mode == SolveMode::Gen0 || mode == SolveMode::Auto) return;
    const auto profile = classify(calc);
    if (!profile.involution)
        throw Error(std::string("mode ") + mode_name(mode) +
                    " requires the involution property, which calculus '" + calc.name + "' lacks");
    if (mode == SolveMode::Gen1) return;
    if (!calc.identity || !profile.identity_law)
        throw Error(std::string("mode ") + mode_name(mode) +
                    " requires an identity relation satisfying the identity law, which calculus '" +
                    calc.name + "' lacks");
}

namespace solver_detail {

inline SolveStatus run_search(const Calculus& calc, const ConstraintNetwork& net, SolveMode mode,
                              const SolveConfig& cfg, SolverStats& stats,
                              std::vector<Nogood>& nogoods, const ModelCallback& on_model) {
    Deadline deadline = make_deadline(cfg);
    if (mode == SolveMode::Propagator) {
        PropagatorEngine engine(calc, net, stats, deadline);
        return engine.run(on_model, nogoods);
    }
    LookBackEngine engine(calc, net, mode, stats, deadline);
    engine.set_verify_net(&net);
    return engine.run(on_model);
}

} // namespace solver_detail

/// Decides model existence for a normalized network. Deterministic for a
/// fixed configuration: variables in lexicographic pair order, values in
/// declaration order, chronological backtracking.
inline SolveResult solve(const Calculus& calc, const ConstraintNetwork& net,
                         const SolveConfig& cfg = {}) {
    SolveMode mode = resolve_mode(calc, cfg.mode);
    require_mode_eligible(calc, mode);

    NormalizeResult normalized;
    const ConstraintNetwork* use = &net;
    if (!net.normalized) {
        normalized = normalize_network(net, calc);
        use = &normalized.network;
    }

    SolveResult result;
    auto started = solver_detail::Clock::now();
    bool early_empty = false;
    for (const auto& c : use->constraints)
        if (c.rels && c.rels->empty()) early_empty = true;

    if (early_empty) {
        result.status = SolveStatus::Unsat;
    } else {
        const std::uint64_t want = cfg.max_models == 0 ? UINT64_MAX : cfg.max_models;
        auto status = solver_detail::run_search(
            calc, *use, mode, cfg, result.stats, result.nogoods, [&](const Assignment& a) {
                result.models.push_back(a);
                return result.models.size() >= want;
            });
        result.status = status;
        if (!result.models.empty()) result.model = result.models.front();
    }
    result.stats.elapsed_ms =
        std::chrono::duration<double, std::milli>(solver_detail::Clock::now() - started).count();
    return result;
}

/// Independent oracle: exhaustively enumerates all |Rel|^(n(n-1)/2)
/// converse-closed assignments and checks the Def-3 conditions directly.
/// Refuses inputs whose candidate count exceeds the bound.
inline SolveResult brute_force(const Calculus& calc, const ConstraintNetwork& net,
                               std::uint64_t candidate_bound = 10'000'000,
                               std::uint64_t max_models = 1) {
    const std::size_t n = net.element_count;
    const std::size_t m = Assignment::pair_count(n);
    const std::size_t rc = calc.relation_count();

    std::uint64_t total = 1;
    for (std::size_t i = 0; i < m; ++i) {
        if (total > candidate_bound / rc + 1) {
            total = UINT64_MAX;
            break;
        }
        total *= rc;
    }
    if (total > candidate_bound)
        throw Error("brute force refused: " + std::to_string(rc) + "^" + std::to_string(m) +
                    " candidates exceed the bound of " + std::to_string(candidate_bound));

    // resolve constraints up front; self pairs check the identity directly
    struct Resolved { std::size_t x, y; RelationSet rels; };
    std::vector<Resolved> constraints;
    for (const auto& c : net.constraints) {
        RelationSet rels = c.rels ? *c.rels : resolve_tokens(calc, c.tokens);
        if (c.x == c.y && !calc.identity)
            throw Error("constraint on element " + std::to_string(c.x) +
                        " with itself, but calculus '" + calc.name + "' has no identity relation");
        constraints.push_back({c.x, c.y, rels});
    }

    SolveResult result;
    auto started = solver_detail::Clock::now();
    result.stats.peak_pair_count = m;

    Assignment a;
    a.element_count = n;
    a.pair_relation.assign(m, 0);
    const std::uint64_t want = max_models == 0 ? UINT64_MAX : max_models;

    while (true) {
        bool ok = true;
        for (const auto& c : constraints) {
            if (c.x == c.y) {
                if (!c.rels.contains(*calc.identity)) { ok = false; break; }
                continue;
            }
            if (!c.rels.contains(a.directed(calc, c.x, c.y))) { ok = false; break; }
        }
        if (ok) {
            for (std::size_t x = 0; x < n && ok; ++x)
                for (std::size_t y = 0; y < n && ok; ++y) {
                    if (y == x) continue;
                    for (std::size_t z = 0; z < n; ++z) {
                        if (z == x || z == y) continue;
                        if (!calc.table[a.directed(calc, x, y)][a.directed(calc, y, z)].contains(
                                a.directed(calc, x, z))) {
                            ok = false;
                            break;
                        }
                    }
                }
        }
        if (ok) {
            result.models.push_back(a);
            if (result.models.size() >= want) break;
        }
        // odometer step
        std::size_t k = 0;
        for (; k < m; ++k) {
            if (a.pair_relation[k] + 1u < rc) {
                ++a.pair_relation[k];
                break;
            }
            a.pair_relation[k] = 0;
        }
        if (k == m) break;
    }

    result.status = result.models.empty() ? SolveStatus::Unsat : SolveStatus::Sat;
    if (!result.models.empty()) result.model = result.models.front();
    result.stats.elapsed_ms =
        std::chrono::duration<double, std::milli>(solver_detail::Clock::now() - started).count();
    return result;
}

/// Undirected arcs of the overlap graph induced by a model: one arc per pair
/// whose assigned relation (or its converse) is in the overlap set.
inline std::vector<std::pair<std::size_t, std::size_t>> overlap_arcs(const Calculus& calc,
                                                                     const Assignment& model,
                                                                     RelationSet overlap) {
    std::vector<std::pair<std::size_t, std::size_t>> arcs;
    const std::size_t n = model.element_count;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            std::size_t r = model.at(i, j);
            if (overlap.contains(r) || overlap.contains(calc.converse[r])) arcs.push_back({i, j});
        }
    return arcs;
}

/// Exact k-coloring by backtracking; vertices in index order, colors
/// ascending. Returns nullopt iff no proper coloring exists.
inline std::optional<std::vector<int>> color_graph(
    std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& arcs, std::size_t k) {
    if (k == 0) return n == 0 ? std::optional<std::vector<int>>(std::vector<int>{}) : std::nullopt;
    std::vector<std::vector<std::size_t>> adj(n);
    for (auto [a, b] : arcs) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<int> color(n, -1);
    std::size_t v = 0;
    while (true) {
        int next = color[v] + 1;
        bool placed = false;
        for (int c = next; c < static_cast<int>(k); ++c) {
            bool clash = false;
            for (std::size_t u : adj[v])
                if (color[u] == c) { clash = true; break; }
            if (!clash) {
                color[v] = c;
                placed = true;
                break;
            }
        }
        if (placed) {
            if (++v == n) return color;
        } else {
            color[v] = -1;
            if (v == 0) return std::nullopt;
            --v;
        }
    }
}

inline bool coloring_is_proper(const std::vector<std::pair<std::size_t, std::size_t>>& arcs,
                               const std::vector<int>& color) {
    for (auto [a, b] : arcs)
        if (color[a] == color[b]) return false;
    return true;
}

struct ColoredSolveResult {
    SolveResult result;
    std::vector<int> coloring; // per element, valid iff status == Sat
    std::uint64_t models_tried = 0;
};

/// Joint search: a qualitative model whose overlap graph is k-colorable.
/// Backtracks across qualitative completions when coloring fails.
inline ColoredSolveResult solve_with_coloring(const Calculus& calc, const ConstraintNetwork& net,
                                              RelationSet overlap, std::size_t k,
                                              const SolveConfig& cfg = {}) {
    SolveMode mode = resolve_mode(calc, cfg.mode);
    require_mode_eligible(calc, mode);

    NormalizeResult normalized;
    const ConstraintNetwork* use = &net;
    if (!net.normalized) {
        normalized = normalize_network(net, calc);
        use = &normalized.network;
    }

    ColoredSolveResult out;
    auto started = solver_detail::Clock::now();
    bool early_empty = false;
    for (const auto& c : use->constraints)
        if (c.rels && c.rels->empty()) early_empty = true;

    if (early_empty) {
        out.result.status = SolveStatus::Unsat;
    } else {
        auto status = solver_detail::run_search(
            calc, *use, mode, cfg, out.result.stats, out.result.nogoods,
            [&](const Assignment& a) {
                ++out.models_tried;
                auto arcs = overlap_arcs(calc, a, overlap);
                auto coloring = color_graph(a.element_count, arcs, k);
                if (!coloring) return false; // next qualitative completion
                if (!coloring_is_proper(arcs, *coloring))
                    throw Error("internal: improper coloring produced");
                out.result.model = a;
                out.result.models.push_back(a);
                out.coloring = std::move(*coloring);
                return true;
            });
        // Sat from the engine means some qualitative model was found; the
        // combined problem is Sat only when a colorable one was accepted.
        if (status == SolveStatus::Timeout)
            out.result.status = SolveStatus::Timeout;
        else
            out.result.status = out.result.model ? SolveStatus::Sat : SolveStatus::Unsat;
    }
    out.result.stats.elapsed_ms =
        std::chrono::duration<double, std::milli>(solver_detail::Clock::now() - started).count();
    return out;
}

/// Default overlap set for a calculus with an identity: everything that can
/// make two distinct regions share space. For rcc5: eq, po, pp, ppi.
inline RelationSet default_overlap_relations(const Calculus& calc) {
    RelationSet overlap = calc.full_set();
    if (auto dr = calc.index_of("dr")) overlap.remove(*dr);
    return overlap;
}

} // namespace qualc
