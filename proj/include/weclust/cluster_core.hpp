#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "weclust/csv.hpp"
#include "weclust/error.hpp"
#include "weclust/matrix.hpp"
#include "weclust/parallel.hpp"
#include "weclust/random.hpp"

namespace weclust {

struct KMeansConfig {
    std::size_t k = 8;
    std::size_t batch_size = 1024;  // mini-batch only
    std::size_t max_iters = 100;
    std::size_t restarts = 1;
    std::uint64_t seed = 0;
    double tol = 1e-4;  // relative to the mean per-feature variance

    void validate(std::size_t n_points) const {
        if (k == 0) throw ConfigError("k must be positive");
        if (k > n_points)
            throw ConfigError("k = " + std::to_string(k) + " exceeds the number of points (" + std::to_string(n_points) + ")");
        if (restarts == 0) throw ConfigError("restarts must be at least 1");
        if (max_iters == 0) throw ConfigError("max_iters must be positive");
        if (batch_size == 0) throw ConfigError("batch size must be positive");
        if (!(tol >= 0.0)) throw ConfigError("tol must be non-negative");
    }
};

struct FlatClustering {
    std::vector<std::size_t> labels;
    Matrix centroids;
    double inertia = 0.0;
    std::size_t iterations = 0;
    std::size_t restart = 0;           // index of the winning restart
    std::vector<double> inertia_trace;  // per-iteration objective of the winning run (Lloyd)
};

/// Index of the closest centroid; ties go to the lower index.
inline std::size_t nearest_centroid(std::span<const double> point, const Matrix& centroids, double* best_d2 = nullptr) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
        double d = squared_distance(point, centroids.row(c));
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    if (best_d2) *best_d2 = best_d;
    return best;
}

inline double inertia(const Matrix& points, std::span<const std::size_t> labels, const Matrix& centroids) {
    double s = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i) s += squared_distance(points.row(i), centroids.row(labels[i]));
    return s;
}

namespace detail {

/// Nearest-centroid labels and squared distances, parallel over points.
inline void assign_all(const Matrix& points, const Matrix& centroids, std::vector<std::size_t>& labels,
                       std::vector<double>& d2) {
    labels.resize(points.rows());
    d2.resize(points.rows());
    parallel_for(points.rows(), [&](std::size_t i) { labels[i] = nearest_centroid(points.row(i), centroids, &d2[i]); });
}

/// Gives every empty cluster the point farthest from its current centroid,
/// taken from a cluster with more than one member. Ties go to the lower
/// point index. The centroid of the repaired cluster becomes that point.
inline void repair_empty(const Matrix& points, Matrix& centroids, std::vector<std::size_t>& labels,
                         std::vector<double>& d2) {
    const std::size_t k = centroids.rows();
    std::vector<std::size_t> counts(k, 0);
    for (auto l : labels) ++counts[l];
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] != 0) continue;
        std::size_t far = points.rows();
        double far_d = -1.0;
        for (std::size_t i = 0; i < points.rows(); ++i) {
            if (counts[labels[i]] > 1 && d2[i] > far_d) {
                far_d = d2[i];
                far = i;
            }
        }
        if (far == points.rows()) throw NumericError("cannot repair empty cluster");
        --counts[labels[far]];
        labels[far] = c;
        ++counts[c];
        d2[far] = 0.0;
        std::copy(points.row(far).begin(), points.row(far).end(), centroids.row(c).begin());
    }
}

inline double mean_feature_variance(const Matrix& points) {
    const std::size_t n = points.rows(), d = points.cols();
    if (n == 0 || d == 0) return 0.0;
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) mean[j] += points(i, j);
    for (auto& m : mean) m /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            double diff = points(i, j) - mean[j];
            var += diff * diff;
        }
    return var / static_cast<double>(n * d);
}

inline void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw NumericError(std::string(what) + " is not finite");
}

}  // namespace detail

/// Draws the next k-means++ centre: index i with probability proportional to
/// min_d2[i]. Points at distance zero get weight zero; when every weight is
/// zero the draw is uniform over the indices not in `chosen`.
inline std::size_t kmeanspp_next(std::span<const double> min_d2, const std::vector<bool>& chosen, Rng& rng) {
    double total = 0.0;
    for (double w : min_d2) total += w;
    if (total > 0.0) {
        double target = rng.uniform() * total;
        double cum = 0.0;
        std::size_t last_positive = 0;
        for (std::size_t i = 0; i < min_d2.size(); ++i) {
            if (min_d2[i] <= 0.0) continue;
            cum += min_d2[i];
            last_positive = i;
            if (target < cum) return i;
        }
        return last_positive;
    }
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < chosen.size(); ++i)
        if (!chosen[i]) free.push_back(i);
    return free[rng.below(free.size())];
}

/// k-means++ seeding; returns the indices of the chosen points in draw order.
inline std::vector<std::size_t> kmeanspp_seed_indices(const Matrix& points, std::size_t k, Rng& rng) {
    const std::size_t n = points.rows();
    if (k > n) throw ConfigError("k = " + std::to_string(k) + " exceeds the number of points (" + std::to_string(n) + ")");
    std::vector<std::size_t> picks;
    if (k == 0) return picks;
    picks.reserve(k);
    std::vector<bool> chosen_flags(n, false);
    std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());

    auto take = [&](std::size_t idx) {
        picks.push_back(idx);
        chosen_flags[idx] = true;
        auto c = points.row(idx);
        parallel_for(n, [&](std::size_t i) { min_d2[i] = std::min(min_d2[i], squared_distance(points.row(i), c)); });
        min_d2[idx] = 0.0;
    };

    take(static_cast<std::size_t>(rng.below(n)));
    while (picks.size() < k) take(kmeanspp_next(min_d2, chosen_flags, rng));
    return picks;
}

inline Matrix kmeanspp_seed(const Matrix& points, std::size_t k, Rng& rng) {
    auto idx = kmeanspp_seed_indices(points, k, rng);
    Matrix c(idx.size(), points.cols());
    for (std::size_t j = 0; j < idx.size(); ++j)
        std::copy(points.row(idx[j]).begin(), points.row(idx[j]).end(), c.row(j).begin());
    return c;
}

namespace detail {

inline FlatClustering lloyd_run(const Matrix& points, std::size_t k, std::size_t max_iters, double tol_abs, Rng& rng) {
    const std::size_t n = points.rows(), d = points.cols();
    FlatClustering out;
    out.centroids = kmeanspp_seed(points, k, rng);
    std::vector<double> d2;
    std::vector<std::size_t> counts(k);

    for (std::size_t it = 0; it < max_iters; ++it) {
        assign_all(points, out.centroids, out.labels, d2);
        repair_empty(points, out.centroids, out.labels, d2);
        double obj = 0.0;
        for (double v : d2) obj += v;
        out.inertia_trace.push_back(obj);
        out.iterations = it + 1;

        Matrix next(k, d, 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto row = next.row(out.labels[i]);
            auto p = points.row(i);
            for (std::size_t j = 0; j < d; ++j) row[j] += p[j];
            ++counts[out.labels[i]];
        }
        double shift = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            auto row = next.row(c);
            for (std::size_t j = 0; j < d; ++j) row[j] /= static_cast<double>(counts[c]);
            shift += squared_distance(row, out.centroids.row(c));
        }
        out.centroids = std::move(next);
        if (shift <= tol_abs) break;
    }
    assign_all(points, out.centroids, out.labels, d2);
    repair_empty(points, out.centroids, out.labels, d2);
    out.inertia = inertia(points, out.labels, out.centroids);
    check_finite(out.inertia, "inertia");
    return out;
}

inline FlatClustering minibatch_run(const Matrix& points, const KMeansConfig& cfg, Rng& rng) {
    const std::size_t n = points.rows(), d = points.cols(), k = cfg.k, b = cfg.batch_size;
    FlatClustering out;
    out.centroids = kmeanspp_seed(points, k, rng);
    std::vector<std::size_t> counts(k, 0);  // lifetime per-centre counts
    std::vector<std::size_t> batch(b), batch_label(b), perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});

    for (std::size_t it = 0; it < cfg.max_iters; ++it) {
        if (b <= n) {
            // partial Fisher-Yates: first b entries of perm are the sample
            for (std::size_t i = 0; i < b; ++i) {
                std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
                std::swap(perm[i], perm[j]);
                batch[i] = perm[i];
            }
        } else {
            for (std::size_t i = 0; i < b; ++i) batch[i] = static_cast<std::size_t>(rng.below(n));
        }
        // Cache nearest centres against the centres at the start of the batch.
        parallel_for(b, [&](std::size_t i) { batch_label[i] = nearest_centroid(points.row(batch[i]), out.centroids); });
        for (std::size_t i = 0; i < b; ++i) {
            std::size_t c = batch_label[i];
            double eta = 1.0 / static_cast<double>(++counts[c]);
            auto centre = out.centroids.row(c);
            auto x = points.row(batch[i]);
            for (std::size_t j = 0; j < d; ++j) centre[j] = (1.0 - eta) * centre[j] + eta * x[j];
        }
        out.iterations = it + 1;
    }
    std::vector<double> d2;
    assign_all(points, out.centroids, out.labels, d2);
    repair_empty(points, out.centroids, out.labels, d2);
    assign_all(points, out.centroids, out.labels, d2);
    repair_empty(points, out.centroids, out.labels, d2);
    out.inertia = inertia(points, out.labels, out.centroids);
    check_finite(out.inertia, "inertia");
    return out;
}

template <class RunFn>
FlatClustering best_of_restarts(const KMeansConfig& cfg, RunFn&& run) {
    FlatClustering best;
    bool have = false;
    for (std::size_t r = 0; r < cfg.restarts; ++r) {
        Rng rng(cfg.seed + r);
        FlatClustering fc = run(rng);
        fc.restart = r;
        if (!have || fc.inertia < best.inertia) {
            best = std::move(fc);
            have = true;
        }
    }
    return best;
}

}  // namespace detail

/// Lloyd iterations from k-means++ seeds, best of cfg.restarts runs (restart
/// r uses seed + r). A run stops when the summed squared centroid shift falls
/// to tol × mean feature variance, or after max_iters.
inline FlatClustering lloyd(const Matrix& points, const KMeansConfig& cfg) {
    cfg.validate(points.rows());
    const double tol_abs = cfg.tol * detail::mean_feature_variance(points);
    return detail::best_of_restarts(
        cfg, [&](Rng& rng) { return detail::lloyd_run(points, cfg.k, cfg.max_iters, tol_abs, rng); });
}

/// Mini-batch k-means with per-centre learning rate 1 / count(c). Batches are
/// sampled without replacement, or with replacement when b exceeds n. After
/// max_iters a full assignment pass fixes labels and inertia.
inline FlatClustering minibatch_kmeans(const Matrix& points, const KMeansConfig& cfg) {
    cfg.validate(points.rows());
    return detail::best_of_restarts(cfg, [&](Rng& rng) { return detail::minibatch_run(points, cfg, rng); });
}

// --- elbow ---------------------------------------------------------------------

struct ElbowCurve {
    std::vector<std::size_t> k_values;
    std::vector<double> wcss;
    std::size_t chosen_k = 0;
};

/// Interior k with the largest perpendicular distance to the chord joining
/// the end points, both axes min-max normalized. Ties (within 1e-12) keep the
/// smaller k.
inline std::size_t choose_elbow(std::span<const std::size_t> k_values, std::span<const double> wcss) {
    if (k_values.size() != wcss.size()) throw ConfigError("elbow: k and wcss lengths differ");
    if (k_values.size() < 3) throw ConfigError("elbow: need at least 3 k values");
    const double k0 = static_cast<double>(k_values.front()), k1 = static_cast<double>(k_values.back());
    auto [wmin_it, wmax_it] = std::minmax_element(wcss.begin(), wcss.end());
    const double wmin = *wmin_it, wrange = *wmax_it - *wmin_it;
    auto nx = [&](std::size_t i) { return (static_cast<double>(k_values[i]) - k0) / (k1 - k0); };
    auto ny = [&](std::size_t i) { return wrange > 0.0 ? (wcss[i] - wmin) / wrange : 0.0; };

    const double x0 = nx(0), y0 = ny(0), x1 = nx(k_values.size() - 1), y1 = ny(k_values.size() - 1);
    const double dx = x1 - x0, dy = y1 - y0, len = std::hypot(dx, dy);
    std::size_t best = 1;
    double best_d = -1.0;
    for (std::size_t i = 1; i + 1 < k_values.size(); ++i) {
        double dist = len > 0.0 ? std::abs(dy * (nx(i) - x0) - dx * (ny(i) - y0)) / len : 0.0;
        if (dist > best_d + 1e-12) {
            best_d = dist;
            best = i;
        }
    }
    return k_values[best];
}

/// Sweeps k over [k_min, k_max] in `step` increments (k_max always included)
/// with mini-batch k-means and picks the elbow.
inline ElbowCurve elbow_select(const Matrix& points, std::size_t k_min, std::size_t k_max, const KMeansConfig& cfg,
                               std::size_t step = 1) {
    if (k_min < 1 || k_min >= k_max || k_max > points.rows())
        throw ConfigError("elbow: need 1 <= k_min < k_max <= number of points");
    if (step == 0) throw ConfigError("elbow: step must be positive");
    ElbowCurve curve;
    for (std::size_t k = k_min; k <= k_max; k += step) curve.k_values.push_back(k);
    if (curve.k_values.back() != k_max) curve.k_values.push_back(k_max);
    if (curve.k_values.size() < 3) throw ConfigError("elbow: need at least 3 k values");
    for (std::size_t k : curve.k_values) {
        KMeansConfig c = cfg;
        c.k = k;
        curve.wcss.push_back(minibatch_kmeans(points, c).inertia);
    }
    curve.chosen_k = choose_elbow(curve.k_values, curve.wcss);
    return curve;
}

inline void write_elbow_csv(const ElbowCurve& curve, std::ostream& out) {
    out << "k,wcss,chosen\n";
    for (std::size_t i = 0; i < curve.k_values.size(); ++i)
        out << curve.k_values[i] << ',' << csv::format(curve.wcss[i]) << ',' << (curve.k_values[i] == curve.chosen_k ? 1 : 0)
            << '\n';
}

}  // namespace weclust
