#pragma once

#include <bit>
#include <cassert>
#include <cstddef>
#include <cstdint>

namespace qualc {

/// Hard cap on base relations per calculus; sets are machine-word bitsets.
inline constexpr std::size_t kMaxRelations = 64;

/// A subset of the base relations of a calculus, identified by index.
/// Value type, cheap to copy; all operations are pure.
class RelationSet {
public:
    constexpr RelationSet() = default;

    static constexpr RelationSet none() { return RelationSet(0); }

    static constexpr RelationSet single(std::size_t index) {
        return RelationSet(std::uint64_t{1} << index);
    }

    /// Full set over the first `count` relations.
    static constexpr RelationSet full(std::size_t count) {
        if (count >= kMaxRelations) return RelationSet(~std::uint64_t{0});
        return RelationSet((std::uint64_t{1} << count) - 1);
    }

    static constexpr RelationSet from_bits(std::uint64_t bits) { return RelationSet(bits); }

    constexpr bool contains(std::size_t index) const {
        return (bits_ >> index) & std::uint64_t{1};
    }

    constexpr RelationSet& add(std::size_t index) {
        bits_ |= std::uint64_t{1} << index;
        return *this;
    }

    constexpr RelationSet& remove(std::size_t index) {
        bits_ &= ~(std::uint64_t{1} << index);
        return *this;
    }

    constexpr std::size_t count() const { return static_cast<std::size_t>(std::popcount(bits_)); }
    constexpr bool empty() const { return bits_ == 0; }
    constexpr bool is_singleton() const { return count() == 1; }

    /// Lowest member index; only valid on non-empty sets.
    constexpr std::size_t first() const {
        assert(!empty());
        return static_cast<std::size_t>(std::countr_zero(bits_));
    }

    constexpr bool subset_of(RelationSet other) const { return (bits_ & ~other.bits_) == 0; }

    constexpr RelationSet complement(std::size_t relation_count) const {
        return RelationSet(~bits_ & full(relation_count).bits_);
    }

    friend constexpr RelationSet operator|(RelationSet a, RelationSet b) { return RelationSet(a.bits_ | b.bits_); }
    friend constexpr RelationSet operator&(RelationSet a, RelationSet b) { return RelationSet(a.bits_ & b.bits_); }
    friend constexpr RelationSet operator-(RelationSet a, RelationSet b) { return RelationSet(a.bits_ & ~b.bits_); }
    constexpr RelationSet& operator|=(RelationSet o) { bits_ |= o.bits_; return *this; }
    constexpr RelationSet& operator&=(RelationSet o) { bits_ &= o.bits_; return *this; }
    friend constexpr bool operator==(RelationSet a, RelationSet b) { return a.bits_ == b.bits_; }
    friend constexpr bool operator!=(RelationSet a, RelationSet b) { return a.bits_ != b.bits_; }

    constexpr std::uint64_t bits() const { return bits_; }

    /// Iterates member indices in increasing order (declaration order).
    class iterator {
    public:
        constexpr explicit iterator(std::uint64_t bits) : bits_(bits) {}
        constexpr std::size_t operator*() const { return static_cast<std::size_t>(std::countr_zero(bits_)); }
        constexpr iterator& operator++() { bits_ &= bits_ - 1; return *this; }
        constexpr bool operator!=(const iterator& o) const { return bits_ != o.bits_; }
    private:
        std::uint64_t bits_;
    };

    constexpr iterator begin() const { return iterator(bits_); }
    constexpr iterator end() const { return iterator(0); }

private:
    constexpr explicit RelationSet(std::uint64_t bits) : bits_(bits) {}

    std::uint64_t bits_ = 0;
};

} // namespace qualc
