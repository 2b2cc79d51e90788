#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "weclust/csv.hpp"
#include "weclust/error.hpp"
#include "weclust/matrix.hpp"
#include "weclust/parallel.hpp"

namespace weclust {

/// Labels renumbered densely 0..count-1 in order of first appearance.
struct LabelVector {
    std::vector<std::size_t> labels;
    std::size_t count = 0;

    std::size_t size() const noexcept { return labels.size(); }

    template <class T>
    static LabelVector from(const std::vector<T>& raw) {
        LabelVector out;
        std::map<T, std::size_t> ids;
        out.labels.reserve(raw.size());
        for (const auto& r : raw) {
            auto [it, inserted] = ids.emplace(r, ids.size());
            out.labels.push_back(it->second);
        }
        out.count = ids.size();
        return out;
    }
};

// --- silhouette -------------------------------------------------------------------

/// Per-point silhouette with Euclidean distance. Points in singleton clusters
/// score 0.
inline std::vector<double> silhouette_samples(const Matrix& points, const LabelVector& labels) {
    const std::size_t n = points.rows();
    if (labels.size() != n) throw DataError("silhouette: label count does not match point count");
    if (labels.count < 2) throw DataError("silhouette needs at least 2 clusters");
    std::vector<std::size_t> sizes(labels.count, 0);
    for (auto l : labels.labels) ++sizes[l];
    std::vector<double> s(n, 0.0);
    parallel_for(n, [&](std::size_t i) {
        const std::size_t own = labels.labels[i];
        if (sizes[own] <= 1) return;
        std::vector<double> sum(labels.count, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            sum[labels.labels[j]] += std::sqrt(squared_distance(points.row(i), points.row(j)));
        }
        const double a = sum[own] / static_cast<double>(sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < labels.count; ++c)
            if (c != own && sizes[c] > 0) b = std::min(b, sum[c] / static_cast<double>(sizes[c]));
        const double denom = std::max(a, b);
        s[i] = denom > 0.0 ? (b - a) / denom : 0.0;
    }, 8);
    return s;
}

inline double silhouette(const Matrix& points, const LabelVector& labels) {
    auto s = silhouette_samples(points, labels);
    double total = 0.0;
    for (double v : s) total += v;
    double mean = total / static_cast<double>(s.size());
    if (!std::isfinite(mean)) throw NumericError("silhouette is not finite");
    return mean;
}

// --- external metrics ---------------------------------------------------------------

namespace detail {

inline void check_pair(const LabelVector& a, const LabelVector& b, const char* what) {
    if (a.size() != b.size()) throw DataError(std::string(what) + ": label vectors differ in length");
}

inline std::vector<std::vector<std::int64_t>> contingency(const LabelVector& a, const LabelVector& b) {
    std::vector<std::vector<std::int64_t>> t(a.count, std::vector<std::int64_t>(b.count, 0));
    for (std::size_t i = 0; i < a.size(); ++i) ++t[a.labels[i]][b.labels[i]];
    return t;
}

inline std::int64_t pairs(std::int64_t n) { return n * (n - 1) / 2; }

}  // namespace detail

/// Fraction of points that belong to their cluster's majority class.
inline double purity(const LabelVector& predicted, const LabelVector& truth) {
    detail::check_pair(predicted, truth, "purity");
    if (predicted.size() == 0) throw DataError("purity: empty labels");
    auto t = detail::contingency(predicted, truth);
    std::int64_t majority = 0;
    for (const auto& row : t) majority += *std::max_element(row.begin(), row.end());
    return static_cast<double>(majority) / static_cast<double>(predicted.size());
}

/// Adjusted Rand index from the pair-counting contingency table. Every pair
/// count is an exact integer and the result is one division:
///   ARI = (T·I − A·B) / (T·(A + B)/2 − A·B)
/// with I = Σ C(n_ij, 2), A, B the row and column pair sums, T = C(N, 2).
/// A zero denominator yields 1 for identical partitions and 0 otherwise.
inline double ari(const LabelVector& predicted, const LabelVector& truth) {
    detail::check_pair(predicted, truth, "ari");
    if (predicted.size() < 2) throw DataError("ari needs at least 2 points");
    auto t = detail::contingency(predicted, truth);
    std::int64_t index = 0, a = 0, b = 0;
    std::vector<std::int64_t> col(truth.count, 0);
    for (const auto& row : t) {
        std::int64_t r = 0;
        for (std::size_t j = 0; j < row.size(); ++j) {
            index += detail::pairs(row[j]);
            r += row[j];
            col[j] += row[j];
        }
        a += detail::pairs(r);
    }
    for (auto c : col) b += detail::pairs(c);
    const std::int64_t total = detail::pairs(static_cast<std::int64_t>(predicted.size()));
    using Wide = __int128;
    const Wide num = 2 * (Wide{total} * index - Wide{a} * b);
    const Wide den = Wide{total} * (a + b) - 2 * Wide{a} * b;
    if (den == 0) {
        const bool identical = index == a && index == b;
        return identical ? 1.0 : 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

// --- reports -------------------------------------------------------------------------

struct EvalReport {
    std::string run;
    std::string dataset;
    std::optional<double> silhouette;
    std::optional<double> purity;
    std::optional<double> ari;
    std::optional<std::size_t> k_voc;
    std::optional<std::size_t> c;
    std::optional<std::uint64_t> seed;
};

inline constexpr std::string_view kMetricsHeader = "run,dataset,silhouette,purity,ari,k_voc,c,seed";

namespace detail {
template <class T>
std::string opt_str(const std::optional<T>& v) {
    if (!v) return "n/a";
    if constexpr (std::is_floating_point_v<T>)
        return csv::format(*v);
    else
        return std::to_string(*v);
}

template <class T>
std::optional<T> parse_opt(const std::string& s, const std::string& source) {
    if (s == "n/a" || s.empty()) return std::nullopt;
    std::optional<T> v;
    if constexpr (std::is_floating_point_v<T>)
        v = csv::parse_double(s);
    else
        v = csv::parse_int<T>(s);
    if (!v) throw DataError(source + ": bad value '" + s + "'");
    return v;
}
}  // namespace detail

inline void write_metrics_csv(const std::vector<EvalReport>& reports, std::ostream& out) {
    out << kMetricsHeader << '\n';
    for (const auto& r : reports)
        out << csv::escape(r.run) << ',' << csv::escape(r.dataset) << ',' << detail::opt_str(r.silhouette) << ','
            << detail::opt_str(r.purity) << ',' << detail::opt_str(r.ari) << ',' << detail::opt_str(r.k_voc) << ','
            << detail::opt_str(r.c) << ',' << detail::opt_str(r.seed) << '\n';
}

inline std::vector<EvalReport> read_metrics_csv(std::istream& in, const std::string& source = "<metrics>") {
    auto t = csv::read_table(in, source);
    const auto run = t.require_column("run", source), dataset = t.require_column("dataset", source),
               sil = t.require_column("silhouette", source), pur = t.require_column("purity", source),
               ar = t.require_column("ari", source);
    auto kv = t.column("k_voc"), cc = t.column("c"), sd = t.column("seed");
    std::vector<EvalReport> out;
    for (const auto& row : t.rows) {
        EvalReport r;
        r.run = row[run];
        r.dataset = row[dataset];
        r.silhouette = detail::parse_opt<double>(row[sil], source);
        r.purity = detail::parse_opt<double>(row[pur], source);
        r.ari = detail::parse_opt<double>(row[ar], source);
        if (kv) r.k_voc = detail::parse_opt<std::size_t>(row[*kv], source);
        if (cc) r.c = detail::parse_opt<std::size_t>(row[*cc], source);
        if (sd) r.seed = detail::parse_opt<std::uint64_t>(row[*sd], source);
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<EvalReport> read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    return read_metrics_csv(in, path.string());
}

enum class Metric { silhouette, purity, ari };

inline constexpr Metric kAllMetrics[] = {Metric::silhouette, Metric::purity, Metric::ari};

inline std::string_view to_string(Metric m) {
    switch (m) {
    case Metric::silhouette: return "silhouette";
    case Metric::purity: return "purity";
    case Metric::ari: return "ari";
    }
    return "";
}

inline std::optional<double> metric_value(const EvalReport& r, Metric m) {
    switch (m) {
    case Metric::silhouette: return r.silhouette;
    case Metric::purity: return r.purity;
    case Metric::ari: return r.ari;
    }
    return std::nullopt;
}

/// 100 · (proposed − baseline) / baseline; empty when either value is
/// missing or the baseline is zero.
inline std::optional<double> percent_change(std::optional<double> baseline, std::optional<double> proposed) {
    if (!baseline || !proposed || *baseline == 0.0) return std::nullopt;
    return 100.0 * (*proposed - *baseline) / *baseline;
}

struct PercentChange {
    std::string dataset;
    Metric metric;
    std::optional<double> baseline;
    std::optional<double> proposed;
    std::optional<double> pct;
};

/// One entry per (dataset, metric) for datasets present in both runs, in the
/// baseline run's dataset order.
inline std::vector<PercentChange> percentage_changes(const std::vector<EvalReport>& runs, const std::string& baseline_run,
                                                     const std::string& proposed_run) {
    std::vector<const EvalReport*> base, prop;
    for (const auto& r : runs) {
        if (r.run == baseline_run) base.push_back(&r);
        if (r.run == proposed_run) prop.push_back(&r);
    }
    if (base.empty()) throw DataError("report: baseline run '" + baseline_run + "' not found");
    if (prop.empty()) throw DataError("report: proposed run '" + proposed_run + "' not found");
    std::vector<PercentChange> out;
    for (Metric m : kAllMetrics) {
        for (const auto* b : base) {
            auto it = std::find_if(prop.begin(), prop.end(), [&](const EvalReport* p) { return p->dataset == b->dataset; });
            if (it == prop.end()) continue;
            auto bv = metric_value(*b, m), pv = metric_value(**it, m);
            out.push_back({b->dataset, m, bv, pv, percent_change(bv, pv)});
        }
    }
    return out;
}

struct ChangeSummary {
    Metric metric;
    std::size_t datasets = 0;  // with a defined change
    std::optional<double> median;
    std::optional<double> min;
    std::string min_dataset;
    std::optional<double> max;
    std::string max_dataset;
};

inline std::optional<double> median(std::vector<double> v) {
    if (v.empty()) return std::nullopt;
    std::sort(v.begin(), v.end());
    std::size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

/// Median, minimum and maximum percentage change per metric across datasets.
inline std::vector<ChangeSummary> summarize_changes(const std::vector<PercentChange>& changes) {
    std::vector<ChangeSummary> out;
    for (Metric m : kAllMetrics) {
        ChangeSummary s;
        s.metric = m;
        std::vector<double> values;
        for (const auto& c : changes) {
            if (c.metric != m || !c.pct) continue;
            values.push_back(*c.pct);
            if (!s.min || *c.pct < *s.min) {
                s.min = c.pct;
                s.min_dataset = c.dataset;
            }
            if (!s.max || *c.pct > *s.max) {
                s.max = c.pct;
                s.max_dataset = c.dataset;
            }
        }
        s.datasets = values.size();
        s.median = median(std::move(values));
        out.push_back(std::move(s));
    }
    return out;
}

inline void write_percentage_csv(const std::vector<PercentChange>& changes, std::ostream& out) {
    out << "dataset,metric,baseline,proposed,pct_change\n";
    for (const auto& c : changes)
        out << csv::escape(c.dataset) << ',' << to_string(c.metric) << ',' << detail::opt_str(c.baseline) << ','
            << detail::opt_str(c.proposed) << ',' << detail::opt_str(c.pct) << '\n';
}

inline void write_summary_csv(const std::vector<ChangeSummary>& summary, std::ostream& out) {
    out << "metric,datasets,median_pct,min_pct,min_dataset,max_pct,max_dataset\n";
    for (const auto& s : summary)
        out << to_string(s.metric) << ',' << s.datasets << ',' << detail::opt_str(s.median) << ','
            << detail::opt_str(s.min) << ',' << csv::escape(s.min_dataset) << ',' << detail::opt_str(s.max) << ','
            << csv::escape(s.max_dataset) << '\n';
}

/// Plain-text tables: one per metric, datasets as rows and runs as columns.
inline void write_text_tables(const std::vector<EvalReport>& runs, std::ostream& out) {
    std::vector<std::string> run_names, datasets;
    auto add_unique = [](std::vector<std::string>& v, const std::string& s) {
        if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
    };
    for (const auto& r : runs) {
        add_unique(run_names, r.run);
        add_unique(datasets, r.dataset);
    }
    auto cell = [&](const std::string& run, const std::string& ds, Metric m) -> std::string {
        for (const auto& r : runs)
            if (r.run == run && r.dataset == ds) {
                auto v = metric_value(r, m);
                if (!v) return "n/a";
                std::ostringstream ss;
                ss << std::fixed << std::setprecision(3) << *v;
                return ss.str();
            }
        return "-";
    };
    std::size_t first_w = 4;
    for (const auto& d : datasets) first_w = std::max(first_w, d.size());
    for (Metric m : kAllMetrics) {
        out << "== " << to_string(m) << " ==\n";
        out << std::left << std::setw(static_cast<int>(first_w)) << "Data";
        for (const auto& r : run_names) out << "  " << std::setw(static_cast<int>(std::max<std::size_t>(r.size(), 6))) << r;
        out << '\n';
        for (const auto& d : datasets) {
            out << std::setw(static_cast<int>(first_w)) << d;
            for (const auto& r : run_names)
                out << "  " << std::setw(static_cast<int>(std::max<std::size_t>(r.size(), 6))) << cell(r, d, m);
            out << '\n';
        }
        out << '\n';
    }
    out << std::right;
}

struct ReportPaths {
    std::filesystem::path metrics;
    std::filesystem::path table;
    std::optional<std::filesystem::path> percentages;
    std::optional<std::filesystem::path> summary;
};

/// Writes metrics.csv and report.txt; with both run names given, also
/// pct_change.csv and pct_summary.csv.
inline ReportPaths write_report(const std::vector<EvalReport>& runs, const std::filesystem::path& out_dir,
                                const std::optional<std::string>& baseline = std::nullopt,
                                const std::optional<std::string>& proposed = std::nullopt) {
    if (runs.empty()) throw DataError("report: no runs");
    if (proposed && !baseline) throw DataError("report: baseline name absent");
    std::filesystem::create_directories(out_dir);
    ReportPaths paths{out_dir / "metrics.csv", out_dir / "report.txt", std::nullopt, std::nullopt};
    std::vector<PercentChange> changes;
    std::vector<ChangeSummary> summary;
    if (baseline && proposed) {
        changes = percentage_changes(runs, *baseline, *proposed);
        summary = summarize_changes(changes);
    }
    {
        std::ostringstream ss;
        write_metrics_csv(runs, ss);
        csv::write_file(paths.metrics, ss.str());
    }
    {
        std::ostringstream ss;
        write_text_tables(runs, ss);
        if (baseline && proposed) {
            ss << "== % change " << *baseline << " -> " << *proposed << " ==\n";
            for (const auto& s : summary) {
                ss << to_string(s.metric) << ": median " << detail::opt_str(s.median);
                if (s.min) ss << ", min " << csv::format(*s.min) << " (" << s.min_dataset << ")";
                if (s.max) ss << ", max " << csv::format(*s.max) << " (" << s.max_dataset << ")";
                ss << '\n';
            }
        }
        csv::write_file(paths.table, ss.str());
    }
    if (baseline && proposed) {
        paths.percentages = out_dir / "pct_change.csv";
        paths.summary = out_dir / "pct_summary.csv";
        std::ostringstream a, b;
        write_percentage_csv(changes, a);
        write_summary_csv(summary, b);
        csv::write_file(*paths.percentages, a.str());
        csv::write_file(*paths.summary, b.str());
    }
    return paths;
}

}  // namespace weclust
