#pragma once

// Independent reference implementations. None of these call into the
// library's algorithms; they only share the Matrix container.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "weclust/matrix.hpp"

namespace oracle {

using weclust::Matrix;

// --- metrics -----------------------------------------------------------------

/// ARI by enumerating every unordered pair of points.
inline double ari_pairs(const std::vector<int>& p, const std::vector<int>& t) {
    using Wide = __int128;
    Wide ss = 0, sd = 0, ds = 0, dd = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = i + 1; j < p.size(); ++j) {
            bool sp = p[i] == p[j], st = t[i] == t[j];
            if (sp && st) ++ss;
            else if (sp) ++sd;
            else if (st) ++ds;
            else ++dd;
        }
    Wide num = 2 * (ss * dd - sd * ds);
    Wide den = (ss + sd) * (sd + dd) + (ss + ds) * (ds + dd);
    if (den == 0) return 1.0;
    return static_cast<double>(num) / static_cast<double>(den);
}

/// Purity by counting, for each predicted cluster, its most common class.
inline double purity_count(const std::vector<int>& p, const std::vector<int>& t) {
    std::map<int, std::map<int, int>> members;
    for (std::size_t i = 0; i < p.size(); ++i) ++members[p[i]][t[i]];
    int hit = 0;
    for (const auto& [c, classes] : members) {
        int best = 0;
        for (const auto& [cls, n] : classes) best = std::max(best, n);
        hit += best;
    }
    return static_cast<double>(hit) / static_cast<double>(p.size());
}

inline double euclid(const Matrix& x, std::size_t i, std::size_t j) {
    long double s = 0;
    for (std::size_t d = 0; d < x.cols(); ++d) {
        long double v = static_cast<long double>(x(i, d)) - x(j, d);
        s += v * v;
    }
    return static_cast<double>(std::sqrt(s));
}

/// Silhouette straight from the definition.
inline double silhouette_direct(const Matrix& x, const std::vector<int>& labels) {
    const std::size_t n = x.rows();
    std::set<int> clusters(labels.begin(), labels.end());
    long double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        long double own_sum = 0;
        std::size_t own_n = 0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i && labels[j] == labels[i]) {
                own_sum += euclid(x, i, j);
                ++own_n;
            }
        if (own_n == 0) continue;
        long double a = own_sum / own_n;
        long double b = std::numeric_limits<long double>::infinity();
        for (int c : clusters) {
            if (c == labels[i]) continue;
            long double s = 0;
            std::size_t m = 0;
            for (std::size_t j = 0; j < n; ++j)
                if (labels[j] == c) {
                    s += euclid(x, i, j);
                    ++m;
                }
            b = std::min(b, s / m);
        }
        long double den = std::max(a, b);
        if (den > 0) total += (b - a) / den;
    }
    return static_cast<double>(total / n);
}

// --- partitions ---------------------------------------------------------------

/// Within-cluster SSE of a labeling (labels in [0, k)).
inline double sse(const Matrix& x, const std::vector<int>& labels, int k) {
    std::vector<std::vector<long double>> sum(k, std::vector<long double>(x.cols(), 0));
    std::vector<std::size_t> cnt(k, 0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        ++cnt[labels[i]];
        for (std::size_t d = 0; d < x.cols(); ++d) sum[labels[i]][d] += x(i, d);
    }
    long double total = 0;
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t d = 0; d < x.cols(); ++d) {
            long double mu = sum[labels[i]][d] / cnt[labels[i]];
            long double v = x(i, d) - mu;
            total += v * v;
        }
    return static_cast<double>(total);
}

/// Minimum SSE over every labeling with exactly k nonempty clusters.
inline double best_partition_sse(const Matrix& x, int k) {
    const std::size_t n = x.rows();
    std::vector<int> labels(n, 0);
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        std::vector<bool> used(k, false);
        for (int l : labels) used[l] = true;
        if (std::all_of(used.begin(), used.end(), [](bool b) { return b; })) best = std::min(best, sse(x, labels, k));
        std::size_t pos = 0;
        while (pos < n && ++labels[pos] == k) labels[pos++] = 0;
        if (pos == n) break;
    }
    return best;
}

/// All restricted-growth strings of length n with at most max_blocks blocks.
inline std::vector<std::vector<int>> set_partitions(std::size_t n, int max_blocks) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    auto rec = [&](auto&& self, int blocks) -> void {
        if (cur.size() == n) {
            out.push_back(cur);
            return;
        }
        for (int b = 0; b <= std::min(blocks, max_blocks - 1); ++b) {
            cur.push_back(b);
            self(self, std::max(blocks, b + 1));
            cur.pop_back();
        }
    };
    rec(rec, 0);
    return out;
}

// --- ward -----------------------------------------------------------------------

struct WardStep {
    std::size_t a, b;
    double cost;
    std::size_t size;
};

/// Greedy Ward: every step recomputes ΔSSE for all cluster pairs from the
/// member points. Ids follow the leaves-then-merges numbering.
inline std::vector<WardStep> greedy_ward(const Matrix& x) {
    struct Cl {
        std::size_t id;
        std::vector<std::size_t> members;
    };
    auto cluster_sse = [&](const std::vector<std::size_t>& m) {
        long double total = 0;
        for (std::size_t d = 0; d < x.cols(); ++d) {
            long double mu = 0;
            for (auto i : m) mu += x(i, d);
            mu /= m.size();
            for (auto i : m) total += (x(i, d) - mu) * (x(i, d) - mu);
        }
        return total;
    };
    std::vector<Cl> live;
    for (std::size_t i = 0; i < x.rows(); ++i) live.push_back({i, {i}});
    std::vector<WardStep> out;
    std::size_t next_id = x.rows();
    while (live.size() > 1) {
        long double best = std::numeric_limits<long double>::infinity();
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < live.size(); ++i)
            for (std::size_t j = i + 1; j < live.size(); ++j) {
                auto u = live[i].members;
                u.insert(u.end(), live[j].members.begin(), live[j].members.end());
                long double c = cluster_sse(u) - cluster_sse(live[i].members) - cluster_sse(live[j].members);
                if (c < best) {
                    best = c;
                    bi = i;
                    bj = j;
                }
            }
        Cl merged{next_id++, live[bi].members};
        merged.members.insert(merged.members.end(), live[bj].members.begin(), live[bj].members.end());
        out.push_back({std::min(live[bi].id, live[bj].id), std::max(live[bi].id, live[bj].id),
                       static_cast<double>(std::max<long double>(best, 0)), merged.members.size()});
        live.erase(live.begin() + bj);
        live.erase(live.begin() + bi);
        live.push_back(std::move(merged));
    }
    return out;
}

// --- generators -------------------------------------------------------------------

/// Unit-variance Gaussian blobs with centres on the coordinate axes.
inline Matrix gaussian_blobs(std::size_t n, std::size_t dim, std::size_t centers, double separation, std::uint64_t seed,
                             std::vector<int>* labels = nullptr) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    Matrix x(n, dim);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t c = i % centers;
        if (labels) labels->push_back(static_cast<int>(c));
        for (std::size_t d = 0; d < dim; ++d) x(i, d) = noise(gen) + (d == c % dim ? separation * (1 + c / dim) : 0.0);
    }
    return x;
}

/// Cluster centres along one axis, `ratio` times the (unit) spread apart.
inline Matrix separated_instance(std::size_t n, std::size_t dim, int k, double ratio, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    Matrix x(n, dim);
    for (std::size_t i = 0; i < n; ++i) {
        int c = static_cast<int>(i % k);
        for (std::size_t d = 0; d < dim; ++d) x(i, d) = u(gen) + (d == 0 ? ratio * c : 0.0);
    }
    return x;
}

inline Matrix uniform_points(std::size_t n, std::size_t dim, std::mt19937_64& gen, double scale = 1.0) {
    std::uniform_real_distribution<double> u(0.0, scale);
    Matrix x(n, dim);
    for (auto& v : x.data()) v = u(gen);
    return x;
}

}  // namespace oracle
