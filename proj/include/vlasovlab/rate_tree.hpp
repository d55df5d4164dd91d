#pragma once

#include <cstddef>
#include <vector>

namespace vlasovlab {

/// Dynamic array of non-negative rates with O(log n) update, total and
/// inverse-cumulative lookup (Fenwick tree over a power-of-two capacity).
class RateTree {
public:
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    const std::vector<double>& values() const noexcept { return values_; }

    void clear()
    {
        values_.clear();
        tree_.assign(tree_.size(), 0.0);
    }

    void push_back(double v)
    {
        values_.push_back(0.0);
        if (values_.size() > capacity()) {
            values_.back() = v;
            rebuild();
            return;
        }
        set(values_.size() - 1, v);
    }

    void set(std::size_t i, double v)
    {
        const double delta = v - values_[i];
        values_[i] = v;
        for (std::size_t k = i + 1; k <= capacity(); k += k & (~k + 1)) tree_[k] += delta;
    }

    /// Overwrites slot i with the last entry and shrinks by one.
    void swap_remove(std::size_t i)
    {
        const std::size_t last = values_.size() - 1;
        if (i != last) set(i, values_[last]);
        set(last, 0.0);
        values_.pop_back();
    }

    double total() const noexcept
    {
        double s = 0.0;
        for (std::size_t k = capacity(); k > 0; k -= k & (~k + 1)) s += tree_[k];
        return s;
    }

    /// Index i with prefix(i) <= u < prefix(i + 1); never returns a zero-rate slot
    /// unless every slot is zero.
    std::size_t find(double u) const noexcept
    {
        std::size_t pos = 0;
        for (std::size_t step = capacity(); step > 0; step >>= 1) {
            if (pos + step <= capacity() && tree_[pos + step] <= u) {
                pos += step;
                u -= tree_[pos];
            }
        }
        if (pos >= values_.size()) pos = values_.size() - 1;
        if (values_[pos] > 0.0) return pos;
        for (std::size_t k = pos; k-- > 0;)
            if (values_[k] > 0.0) return k;
        for (std::size_t k = pos + 1; k < values_.size(); ++k)
            if (values_[k] > 0.0) return k;
        return pos;
    }

    /// Recomputes the tree from the stored values, discarding accumulated rounding.
    void rebuild()
    {
        std::size_t cap = 1;
        while (cap < values_.size()) cap <<= 1;
        tree_.assign(cap + 1, 0.0);
        for (std::size_t i = 0; i < values_.size(); ++i) tree_[i + 1] = values_[i];
        for (std::size_t k = 1; k <= cap; ++k) {
            const std::size_t parent = k + (k & (~k + 1));
            if (parent <= cap) tree_[parent] += tree_[k];
        }
    }

private:
    std::size_t capacity() const noexcept { return tree_.empty() ? 0 : tree_.size() - 1; }

    std::vector<double> values_;
    std::vector<double> tree_;
};

}  // namespace vlasovlab
