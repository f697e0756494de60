#ifndef ISPEC_VERTEX_SET_HPP
#define ISPEC_VERTEX_SET_HPP

#include <bit>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <iterator>
#include <vector>

#include "ispec/errors.hpp"

namespace ispec {

inline constexpr int kMaxVertices = 64;

// Set of vertex indices backed by a 64-bit mask. Iteration is in increasing
// index order.
class VertexSet {
public:
    class iterator {
    public:
        using iterator_category = std::forward_iterator_tag;
        using value_type = int;
        using difference_type = std::ptrdiff_t;
        using pointer = const int*;
        using reference = int;

        iterator() = default;
        explicit iterator(std::uint64_t rest) : rest_(rest) {}

        int operator*() const { return std::countr_zero(rest_); }
        iterator& operator++() {
            rest_ &= rest_ - 1;
            return *this;
        }
        iterator operator++(int) {
            iterator copy = *this;
            ++*this;
            return copy;
        }
        bool operator==(const iterator&) const = default;

    private:
        std::uint64_t rest_ = 0;
    };

    constexpr VertexSet() = default;
    constexpr explicit VertexSet(std::uint64_t bits) : bits_(bits) {}
    VertexSet(std::initializer_list<int> vs) {
        for (int v : vs) insert(v);
    }

    static VertexSet single(int v) { return VertexSet{}.insert(v); }

    static VertexSet first_n(int n) {
        if (n < 0 || n > kMaxVertices) throw InputError("vertex count out of range");
        if (n == kMaxVertices) return VertexSet(~std::uint64_t{0});
        return VertexSet((std::uint64_t{1} << n) - 1);
    }

    static VertexSet from(const std::vector<int>& vs) {
        VertexSet s;
        for (int v : vs) s.insert(v);
        return s;
    }

    VertexSet& insert(int v) {
        check(v);
        bits_ |= std::uint64_t{1} << v;
        return *this;
    }
    VertexSet& erase(int v) {
        check(v);
        bits_ &= ~(std::uint64_t{1} << v);
        return *this;
    }

    bool contains(int v) const {
        return v >= 0 && v < kMaxVertices && ((bits_ >> v) & 1u) != 0;
    }
    bool empty() const { return bits_ == 0; }
    int size() const { return std::popcount(bits_); }
    std::uint64_t bits() const { return bits_; }

    bool subset_of(VertexSet o) const { return (bits_ & ~o.bits_) == 0; }
    bool intersects(VertexSet o) const { return (bits_ & o.bits_) != 0; }

    // Smallest member; the set must be non-empty.
    int front() const { return std::countr_zero(bits_); }

    std::vector<int> to_vector() const { return {begin(), end()}; }

    iterator begin() const { return iterator(bits_); }
    iterator end() const { return iterator(0); }

    friend VertexSet operator|(VertexSet a, VertexSet b) { return VertexSet(a.bits_ | b.bits_); }
    friend VertexSet operator&(VertexSet a, VertexSet b) { return VertexSet(a.bits_ & b.bits_); }
    friend VertexSet operator-(VertexSet a, VertexSet b) { return VertexSet(a.bits_ & ~b.bits_); }
    VertexSet& operator|=(VertexSet o) {
        bits_ |= o.bits_;
        return *this;
    }
    VertexSet& operator&=(VertexSet o) {
        bits_ &= o.bits_;
        return *this;
    }
    VertexSet& operator-=(VertexSet o) {
        bits_ &= ~o.bits_;
        return *this;
    }

    bool operator==(const VertexSet&) const = default;
    auto operator<=>(const VertexSet&) const = default;

private:
    static void check(int v) {
        if (v < 0 || v >= kMaxVertices) throw InputError("vertex index out of range");
    }

    std::uint64_t bits_ = 0;
};

// Calls fn(subset) for every subset of `base` of exactly size k, in
// lexicographic order of member indices. Stops early when fn returns true.
template <typename Fn>
bool for_each_subset_of_size(VertexSet base, int k, Fn&& fn) {
    const std::vector<int> items = base.to_vector();
    const int n = static_cast<int>(items.size());
    if (k < 0 || k > n) return false;
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        VertexSet s;
        for (int i : idx) s.insert(items[i]);
        if (fn(s)) return true;
        int i = k - 1;
        while (i >= 0 && idx[i] == n - k + i) --i;
        if (i < 0) return false;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

}  // namespace ispec

#endif  // ISPEC_VERTEX_SET_HPP
