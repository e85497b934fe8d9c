#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace exc {

// Fenwick tree over nonnegative weights with inverse-CDF sampling. Leaves
// are kept alongside the internal nodes so rebuild() can re-sum the tree
// exactly and periodically cancel incremental float drift.
class WeightTree {
public:
    explicit WeightTree(size_t n) : leaf_(n, 0.0), node_(n + 1, 0.0) {}

    size_t size() const { return leaf_.size(); }
    double leaf(size_t i) const { return leaf_[i]; }
    double total() const { return prefix(leaf_.size()); }

    void set(size_t i, double w) {
        double delta = w - leaf_[i];
        if (delta == 0.0) return;
        leaf_[i] = w;
        for (size_t k = i + 1; k <= leaf_.size(); k += k & (0 - k)) node_[k] += delta;
    }

    void rebuild() {
        std::fill(node_.begin(), node_.end(), 0.0);
        for (size_t i = 0; i < leaf_.size(); ++i) {
            node_[i + 1] += leaf_[i];
            size_t parent = i + 1 + ((i + 1) & (0 - (i + 1)));
            if (parent <= leaf_.size()) node_[parent] += node_[i + 1];
        }
    }

    // Largest index whose prefix sum is <= u, i.e. the slot containing mass
    // coordinate u in (0, total]. Skips zero-weight slots by construction.
    size_t sample(double u) const {
        size_t pos = 0, mask = bit_floor_size(leaf_.size());
        double rest = u;
        while (mask > 0) {
            size_t next = pos + mask;
            if (next <= leaf_.size() && node_[next] < rest) {
                rest -= node_[next];
                pos = next;
            }
            mask >>= 1;
        }
        if (pos >= leaf_.size())
            throw std::runtime_error("weight sample beyond total mass");
        return pos;
    }

private:
    double prefix(size_t n) const {
        double s = 0.0;
        for (size_t k = n; k > 0; k -= k & (0 - k)) s += node_[k];
        return s;
    }
    static size_t bit_floor_size(size_t n) {
        size_t m = 1;
        while (m * 2 <= n) m *= 2;
        return m;
    }

    std::vector<double> leaf_;
    std::vector<double> node_;
};

} // namespace exc
