#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <ostream>
#include <vector>

#include "weclust/csv.hpp"
#include "weclust/error.hpp"
#include "weclust/matrix.hpp"
#include "weclust/parallel.hpp"

namespace weclust {

/// One agglomeration step. Leaves are 0..n-1; the cluster created by merge i
/// has id n + i. a < b.
struct Merge {
    std::size_t a;
    std::size_t b;
    double cost;  // increase in total within-cluster SSE
    std::size_t size;

    friend bool operator==(const Merge&, const Merge&) = default;
};

struct Dendrogram {
    std::size_t leaves = 0;
    std::vector<Merge> merges;
};

/// How pairwise Ward costs are held during clustering.
enum class WardStorage {
    automatic,  // matrix when it fits in the byte limit, otherwise on demand
    matrix,     // condensed n(n-1)/2 cost matrix, Lance-Williams updates
    on_demand,  // recompute from cluster centroids and sizes, O(n d) memory
};

/// Ward cost of merging clusters with sizes na, nb and the given squared
/// centroid distance: na nb / (na + nb) · ‖μa − μb‖².
inline double ward_cost(double na, double nb, double centroid_d2) { return na * nb / (na + nb) * centroid_d2; }

namespace detail {

class CondensedCosts {
public:
    explicit CondensedCosts(const Matrix& points) : n_(points.rows()), d_(n_ * (n_ - 1) / 2) {
        parallel_for(n_, [&](std::size_t i) {
            for (std::size_t j = i + 1; j < n_; ++j)
                d_[index(i, j)] = ward_cost(1.0, 1.0, squared_distance(points.row(i), points.row(j)));
        }, 16);
    }

    double get(std::size_t i, std::size_t j) const { return i < j ? d_[index(i, j)] : d_[index(j, i)]; }
    void set(std::size_t i, std::size_t j, double v) { (i < j ? d_[index(i, j)] : d_[index(j, i)]) = v; }

private:
    std::size_t index(std::size_t i, std::size_t j) const { return n_ * i - i * (i + 1) / 2 + (j - i - 1); }

    std::size_t n_;
    std::vector<double> d_;
};

/// Union-find over leaves that also tracks the current node id of each set.
class NodeLabels {
public:
    explicit NodeLabels(std::size_t n) : parent_(n), node_(n) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
        std::iota(node_.begin(), node_.end(), std::size_t{0});
    }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    std::size_t node(std::size_t leaf) { return node_[find(leaf)]; }

    void unite(std::size_t a, std::size_t b, std::size_t new_node) {
        std::size_t ra = find(a), rb = find(b);
        parent_[rb] = ra;
        node_[ra] = new_node;
    }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> node_;
};

struct SlotMerge {
    std::size_t slot_a, slot_b;  // representative leaves
    double cost;
};

/// Nearest-neighbour chain over cluster slots. `cost(i, j)` is the current
/// Ward cost between active slots; `merge(keep, drop)` folds drop into keep.
template <class CostFn, class MergeFn>
std::vector<SlotMerge> nn_chain(std::size_t n, CostFn&& cost, MergeFn&& merge) {
    std::vector<bool> active(n, true);
    std::vector<std::size_t> chain;
    std::vector<SlotMerge> out;
    out.reserve(n - 1);
    std::size_t first_active = 0;

    while (out.size() + 1 < n) {
        if (chain.empty()) {
            while (!active[first_active]) ++first_active;
            chain.push_back(first_active);
        }
        std::size_t a, b;
        while (true) {
            a = chain.back();
            const bool has_prev = chain.size() >= 2;
            b = has_prev ? chain[chain.size() - 2] : n;
            double best = has_prev ? cost(a, b) : std::numeric_limits<double>::infinity();
            for (std::size_t x = 0; x < n; ++x) {
                if (!active[x] || x == a) continue;
                double c = cost(a, x);
                if (c < best) {
                    best = c;
                    b = x;
                }
            }
            if (has_prev && b == chain[chain.size() - 2]) break;
            chain.push_back(b);
        }
        chain.pop_back();
        chain.pop_back();
        std::size_t keep = std::min(a, b), drop = std::max(a, b);
        out.push_back({keep, drop, cost(a, b)});
        merge(keep, drop, active);
        active[drop] = false;
    }
    return out;
}

inline Dendrogram to_dendrogram(std::size_t n, std::vector<SlotMerge> merges) {
    std::stable_sort(merges.begin(), merges.end(), [](const SlotMerge& x, const SlotMerge& y) { return x.cost < y.cost; });
    Dendrogram tree;
    tree.leaves = n;
    tree.merges.reserve(merges.size());
    NodeLabels labels(n);
    std::vector<std::size_t> size(2 * n - 1, 1);
    for (std::size_t i = 0; i < merges.size(); ++i) {
        std::size_t a = labels.node(merges[i].slot_a), b = labels.node(merges[i].slot_b);
        if (a > b) std::swap(a, b);
        std::size_t id = n + i;
        size[id] = size[a] + size[b];
        tree.merges.push_back({a, b, merges[i].cost, size[id]});
        labels.unite(merges[i].slot_a, merges[i].slot_b, id);
    }
    return tree;
}

}  // namespace detail

/// Bytes needed by WardStorage::matrix for n points.
inline std::size_t ward_matrix_bytes(std::size_t n) { return n * (n - 1) / 2 * sizeof(double); }

/// Ward agglomerative clustering. The merge list is ordered by cost (the
/// greedy order); equal costs keep discovery order.
inline Dendrogram ward_cluster(const Matrix& points, WardStorage storage = WardStorage::automatic,
                               std::size_t matrix_limit_bytes = std::size_t{1} << 30) {
    const std::size_t n = points.rows();
    if (n < 2) throw DataError("ward clustering needs at least 2 points");
    if (storage == WardStorage::automatic)
        storage = ward_matrix_bytes(n) <= matrix_limit_bytes ? WardStorage::matrix : WardStorage::on_demand;

    std::vector<double> size(n, 1.0);
    std::vector<detail::SlotMerge> merges;

    if (storage == WardStorage::matrix) {
        detail::CondensedCosts costs(points);
        merges = detail::nn_chain(
            n, [&](std::size_t i, std::size_t j) { return costs.get(i, j); },
            [&](std::size_t keep, std::size_t drop, const std::vector<bool>& active) {
                const double ni = size[keep], nj = size[drop], dij = costs.get(keep, drop);
                for (std::size_t k = 0; k < n; ++k) {
                    if (!active[k] || k == keep || k == drop) continue;
                    const double nk = size[k];
                    double v = ((ni + nk) * costs.get(k, keep) + (nj + nk) * costs.get(k, drop) - nk * dij) / (ni + nj + nk);
                    costs.set(k, keep, v);
                }
                size[keep] = ni + nj;
            });
    } else {
        Matrix centroid = points;
        merges = detail::nn_chain(
            n,
            [&](std::size_t i, std::size_t j) {
                return ward_cost(size[i], size[j], squared_distance(centroid.row(i), centroid.row(j)));
            },
            [&](std::size_t keep, std::size_t drop, const std::vector<bool>&) {
                const double ni = size[keep], nj = size[drop];
                auto ck = centroid.row(keep);
                auto cd = centroid.row(drop);
                for (std::size_t j = 0; j < ck.size(); ++j) ck[j] = (ni * ck[j] + nj * cd[j]) / (ni + nj);
                size[keep] = ni + nj;
            });
    }
    return detail::to_dendrogram(n, std::move(merges));
}

/// Cluster labels after undoing the last c - 1 merges. Clusters are numbered
/// in order of their smallest leaf.
inline std::vector<std::size_t> cut(const Dendrogram& tree, std::size_t c) {
    const std::size_t n = tree.leaves;
    if (c < 1 || c > n) throw ConfigError("cut: cluster count " + std::to_string(c) + " outside [1, " + std::to_string(n) + "]");
    detail::NodeLabels sets(n);
    // node id -> one leaf of it, to drive the union-find
    std::vector<std::size_t> leaf_of(2 * n - 1);
    std::iota(leaf_of.begin(), leaf_of.begin() + static_cast<std::ptrdiff_t>(n), std::size_t{0});
    for (std::size_t i = 0; i + c < n; ++i) {
        const auto& m = tree.merges[i];
        sets.unite(leaf_of[m.a], leaf_of[m.b], n + i);
        leaf_of[n + i] = leaf_of[m.a];
    }
    std::vector<std::size_t> labels(n);
    std::vector<std::size_t> label_of_root(n, n);
    std::size_t next = 0;
    for (std::size_t leaf = 0; leaf < n; ++leaf) {
        std::size_t r = sets.find(leaf);
        if (label_of_root[r] == n) label_of_root[r] = next++;
        labels[leaf] = label_of_root[r];
    }
    return labels;
}

inline void write_dendrogram_csv(const Dendrogram& tree, std::ostream& out) {
    out << "step,a,b,cost,size\n";
    for (std::size_t i = 0; i < tree.merges.size(); ++i) {
        const auto& m = tree.merges[i];
        out << i << ',' << m.a << ',' << m.b << ',' << csv::format(m.cost) << ',' << m.size << '\n';
    }
}

}  // namespace weclust
