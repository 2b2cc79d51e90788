#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "weclust/cdmatrix.hpp"
#include "weclust/csv.hpp"
#include "weclust/error.hpp"
#include "weclust/hier.hpp"

namespace weclust {

enum class DocAlgorithm { kmeans, agglomerative };

inline std::string_view to_string(DocAlgorithm a) { return a == DocAlgorithm::kmeans ? "kmeans" : "agglomerative"; }

inline std::string_view to_string(WardStorage s) {
    switch (s) {
    case WardStorage::automatic: return "auto";
    case WardStorage::matrix: return "matrix";
    case WardStorage::on_demand: return "on_demand";
    }
    return "";
}

/// Ordinal added to the master seed for each seeded stage.
inline constexpr std::uint64_t kWordClusteringSeedOffset = 4;
inline constexpr std::uint64_t kDocClusteringSeedOffset = 6;

struct PipelineConfig {
    std::filesystem::path corpus;
    std::filesystem::path stoplist;  // empty: built-in list
    std::filesystem::path embeddings;
    std::filesystem::path output;

    std::optional<std::size_t> k_voc;  // empty: elbow sweep
    std::size_t elbow_min = 5;
    std::size_t elbow_max = 100;
    std::size_t elbow_step = 5;

    std::size_t batch_size = 1024;
    std::size_t max_iters = 100;
    double tol = 1e-4;
    std::size_t word_restarts = 3;

    std::optional<std::size_t> c;  // empty: number of ground-truth categories
    DocAlgorithm doc_algorithm = DocAlgorithm::kmeans;
    std::size_t restarts = 20;
    CdScoring cd_scoring = CdScoring::sum_tfidf;
    WardStorage ward_storage = WardStorage::automatic;
    std::uint64_t seed = 0;

    std::string run_name;  // empty: derived from the algorithm
    std::string dataset;   // empty: corpus file stem

    std::uint64_t word_seed() const { return seed + kWordClusteringSeedOffset; }
    std::uint64_t doc_seed() const { return seed + kDocClusteringSeedOffset; }

    std::string resolved_run_name() const {
        if (!run_name.empty()) return run_name;
        return doc_algorithm == DocAlgorithm::kmeans ? "weclust_kmeans" : "weclust_agglomerative";
    }

    std::string resolved_dataset() const {
        if (!dataset.empty()) return dataset;
        auto p = corpus.lexically_normal();
        if (p.has_filename()) return p.stem().string();
        return p.parent_path().filename().string();
    }
};

/// Keys accepted in config files and, with '_' spelled '-', as CLI flags.
inline constexpr std::string_view kConfigKeys[] = {
    "corpus",     "stoplist",  "embeddings",    "output",    "k_voc",    "elbow_min",    "elbow_max",
    "elbow_step", "batch_size", "max_iters",    "tol",       "word_restarts", "c",        "doc_algorithm",
    "restarts",   "cd_scoring", "ward_storage", "seed",      "run_name", "dataset",
};

namespace detail {

inline std::size_t parse_count(std::string_view key, std::string_view value, std::size_t min_value) {
    auto v = csv::parse_int<std::size_t>(value);
    if (!v || *v < min_value)
        throw ConfigError("config: " + std::string(key) + " must be an integer >= " + std::to_string(min_value) + ", got '" +
                          std::string(value) + "'");
    return *v;
}

inline std::filesystem::path resolve(std::string_view value, const std::filesystem::path& base) {
    std::filesystem::path p{std::string(value)};
    if (p.is_relative() && !base.empty()) p = base / p;
    return p.lexically_normal();
}

inline std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace detail

/// Applies one key=value setting. Relative paths resolve against `base`.
inline void apply_setting(PipelineConfig& cfg, std::string_view key, std::string_view value,
                          const std::filesystem::path& base = {}) {
    using detail::parse_count;
    if (key == "corpus") {
        cfg.corpus = detail::resolve(value, base);
    } else if (key == "stoplist") {
        cfg.stoplist = (value.empty() || value == "builtin") ? std::filesystem::path{} : detail::resolve(value, base);
    } else if (key == "embeddings") {
        cfg.embeddings = detail::resolve(value, base);
    } else if (key == "output") {
        cfg.output = detail::resolve(value, base);
    } else if (key == "k_voc") {
        if (value == "elbow")
            cfg.k_voc.reset();
        else
            cfg.k_voc = parse_count(key, value, 2);
    } else if (key == "elbow_min") {
        cfg.elbow_min = parse_count(key, value, 1);
    } else if (key == "elbow_max") {
        cfg.elbow_max = parse_count(key, value, 2);
    } else if (key == "elbow_step") {
        cfg.elbow_step = parse_count(key, value, 1);
    } else if (key == "batch_size") {
        cfg.batch_size = parse_count(key, value, 1);
    } else if (key == "max_iters") {
        cfg.max_iters = parse_count(key, value, 1);
    } else if (key == "tol") {
        auto v = csv::parse_double(value);
        if (!v || !(*v >= 0.0)) throw ConfigError("config: tol must be a non-negative number");
        cfg.tol = *v;
    } else if (key == "word_restarts") {
        cfg.word_restarts = parse_count(key, value, 1);
    } else if (key == "c") {
        if (value == "auto")
            cfg.c.reset();
        else
            cfg.c = parse_count(key, value, 1);
    } else if (key == "doc_algorithm") {
        if (value == "kmeans")
            cfg.doc_algorithm = DocAlgorithm::kmeans;
        else if (value == "agglomerative")
            cfg.doc_algorithm = DocAlgorithm::agglomerative;
        else
            throw ConfigError("config: doc_algorithm must be kmeans or agglomerative");
    } else if (key == "restarts") {
        cfg.restarts = parse_count(key, value, 1);
    } else if (key == "cd_scoring") {
        auto s = parse_cd_scoring(value);
        if (!s) throw ConfigError("config: cd_scoring must be sum_tfidf or count_times_mean");
        cfg.cd_scoring = *s;
    } else if (key == "ward_storage") {
        if (value == "auto")
            cfg.ward_storage = WardStorage::automatic;
        else if (value == "matrix")
            cfg.ward_storage = WardStorage::matrix;
        else if (value == "on_demand")
            cfg.ward_storage = WardStorage::on_demand;
        else
            throw ConfigError("config: ward_storage must be auto, matrix or on_demand");
    } else if (key == "seed") {
        auto v = csv::parse_int<std::uint64_t>(value);
        if (!v) throw ConfigError("config: seed must be an unsigned integer");
        cfg.seed = *v;
    } else if (key == "run_name") {
        cfg.run_name = std::string(value);
    } else if (key == "dataset") {
        cfg.dataset = std::string(value);
    } else {
        throw ConfigError("config: unknown key '" + std::string(key) + "'");
    }
}

/// Flat key=value text; '#' starts a comment, blank lines ignored.
inline PipelineConfig parse_config(std::istream& in, const std::filesystem::path& base = {}, PipelineConfig cfg = {}) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::string body = detail::trim(line);
        if (body.empty()) continue;
        auto eq = body.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
        apply_setting(cfg, detail::trim(std::string_view(body).substr(0, eq)),
                      detail::trim(std::string_view(body).substr(eq + 1)), base);
    }
    return cfg;
}

inline PipelineConfig read_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config " + path.string());
    return parse_config(in, path.parent_path());
}

/// Every setting with defaults filled in, in kConfigKeys order.
inline std::vector<std::pair<std::string, std::string>> resolved_settings(const PipelineConfig& cfg) {
    auto abs = [](const std::filesystem::path& p) {
        return p.empty() ? std::string() : std::filesystem::absolute(p).lexically_normal().string();
    };
    return {
        {"corpus", abs(cfg.corpus)},
        {"stoplist", cfg.stoplist.empty() ? std::string("builtin") : abs(cfg.stoplist)},
        {"embeddings", abs(cfg.embeddings)},
        {"output", abs(cfg.output)},
        {"k_voc", cfg.k_voc ? std::to_string(*cfg.k_voc) : "elbow"},
        {"elbow_min", std::to_string(cfg.elbow_min)},
        {"elbow_max", std::to_string(cfg.elbow_max)},
        {"elbow_step", std::to_string(cfg.elbow_step)},
        {"batch_size", std::to_string(cfg.batch_size)},
        {"max_iters", std::to_string(cfg.max_iters)},
        {"tol", csv::format(cfg.tol)},
        {"word_restarts", std::to_string(cfg.word_restarts)},
        {"c", cfg.c ? std::to_string(*cfg.c) : "auto"},
        {"doc_algorithm", std::string(to_string(cfg.doc_algorithm))},
        {"restarts", std::to_string(cfg.restarts)},
        {"cd_scoring", std::string(to_string(cfg.cd_scoring))},
        {"ward_storage", std::string(to_string(cfg.ward_storage))},
        {"seed", std::to_string(cfg.seed)},
        {"run_name", cfg.resolved_run_name()},
        {"dataset", cfg.resolved_dataset()},
    };
}

/// Checks that need no data: required paths present and existing.
inline void validate_paths(const PipelineConfig& cfg) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (cfg.corpus.empty()) throw ConfigError("config: corpus is required");
    if (cfg.embeddings.empty()) throw ConfigError("config: embeddings is required");
    if (cfg.output.empty()) throw ConfigError("config: output is required");
    if (!fs::exists(cfg.corpus, ec)) throw ConfigError("config: corpus path does not exist: " + cfg.corpus.string());
    if (!fs::exists(cfg.embeddings, ec))
        throw ConfigError("config: embeddings path does not exist: " + cfg.embeddings.string());
    if (!cfg.stoplist.empty() && !fs::exists(cfg.stoplist, ec))
        throw ConfigError("config: stoplist path does not exist: " + cfg.stoplist.string());
    if (!cfg.k_voc && cfg.elbow_min >= cfg.elbow_max) throw ConfigError("config: elbow_min must be below elbow_max");
}

}  // namespace weclust
