#pragma once

#include <numeric>
#include <string>
#include <vector>

#include "opx/core/error.hpp"

namespace opx {

struct MultiIndex {
    std::vector<int> n;

    MultiIndex() = default;
    explicit MultiIndex(std::vector<int> comps) : n(std::move(comps)) {
        require(!n.empty(), "MultiIndex: need r >= 1 components");
        for (int v : n) require(v >= 0, "MultiIndex: components must be nonnegative");
    }
    MultiIndex(std::initializer_list<int> comps) : MultiIndex(std::vector<int>(comps)) {}
    static MultiIndex zero(int r) { return MultiIndex(std::vector<int>(r, 0)); }

    int r() const { return static_cast<int>(n.size()); }
    int total() const { return std::accumulate(n.begin(), n.end(), 0); }
    int operator[](int j) const { return n[j]; }
    int max_component() const {
        int m = 0;
        for (int v : n) m = std::max(m, v);
        return m;
    }

    MultiIndex plus(int k) const {
        require(k >= 0 && k < r(), "MultiIndex: direction out of range");
        MultiIndex m = *this;
        ++m.n[k];
        return m;
    }
    MultiIndex minus(int k) const {
        require(k >= 0 && k < r(), "MultiIndex: direction out of range");
        require(n[k] > 0, "MultiIndex: decrement below zero in component " + std::to_string(k + 1));
        MultiIndex m = *this;
        --m.n[k];
        return m;
    }

    // componentwise m <= n
    bool leq(const MultiIndex& o) const {
        for (int j = 0; j < r(); ++j)
            if (n[j] > o.n[j]) return false;
        return true;
    }
    bool operator==(const MultiIndex& o) const { return n == o.n; }
    bool operator<(const MultiIndex& o) const { return n < o.n; }

    std::string str() const {
        std::string s = "(";
        for (int j = 0; j < r(); ++j) s += (j ? "," : "") + std::to_string(n[j]);
        return s + ")";
    }
};

// All monotone lattice paths from 0 to n, as lists of step directions.
inline std::vector<std::vector<int>> all_paths(const MultiIndex& target) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur, left = target.n;
    auto rec = [&](auto&& self) -> void {
        bool done = true;
        for (int j = 0; j < target.r(); ++j) {
            if (left[j] == 0) continue;
            done = false;
            --left[j];
            cur.push_back(j);
            self(self);
            cur.pop_back();
            ++left[j];
        }
        if (done) out.push_back(cur);
    };
    rec(rec);
    return out;
}

// Stepline path: raise components 1..r in turn.
inline std::vector<int> stepline_path(const MultiIndex& target) {
    std::vector<int> path;
    MultiIndex cur = MultiIndex::zero(target.r());
    while (cur.total() < target.total()) {
        for (int j = 0; j < target.r(); ++j) {
            if (cur.n[j] < target.n[j]) {
                path.push_back(j);
                ++cur.n[j];
            }
        }
    }
    return path;
}

} // namespace opx
