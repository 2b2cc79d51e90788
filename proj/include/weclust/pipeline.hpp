#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "weclust/cdmatrix.hpp"
#include "weclust/cluster_core.hpp"
#include "weclust/config.hpp"
#include "weclust/corpus.hpp"
#include "weclust/csv.hpp"
#include "weclust/embed_store.hpp"
#include "weclust/error.hpp"
#include "weclust/eval.hpp"
#include "weclust/hier.hpp"
#include "weclust/stoplist.hpp"

namespace weclust {

/// Names of the files inside a run directory.
namespace run_files {
inline constexpr std::string_view documents = "documents.csv";
inline constexpr std::string_view truth = "truth.csv";
inline constexpr std::string_view vocabulary = "vocabulary.csv";
inline constexpr std::string_view tfidf = "tfidf.csv";
inline constexpr std::string_view embeddings = "embeddings.wemb";
inline constexpr std::string_view elbow = "elbow.csv";
inline constexpr std::string_view concepts = "concepts.csv";
inline constexpr std::string_view cd_matrix = "cd_matrix.csv";
inline constexpr std::string_view labels = "labels.csv";
inline constexpr std::string_view dendrogram = "dendrogram.csv";
inline constexpr std::string_view metrics = "metrics.csv";
inline constexpr std::string_view report = "report.txt";
inline constexpr std::string_view metadata = "run_metadata.txt";
inline constexpr std::string_view failed = "FAILED";
}  // namespace run_files

/// Ordered key=value record written next to every run.
class RunMetadata {
public:
    void set(const std::string& key, std::string value) {
        for (auto& [k, v] : entries_)
            if (k == key) {
                v = std::move(value);
                return;
            }
        entries_.emplace_back(key, std::move(value));
    }

    std::optional<std::string> get(std::string_view key) const {
        for (const auto& [k, v] : entries_)
            if (k == key) return v;
        return std::nullopt;
    }

    const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

    void write(const std::filesystem::path& path) const {
        std::ostringstream ss;
        for (const auto& [k, v] : entries_) ss << k << '=' << v << '\n';
        csv::write_file(path, ss.str());
    }

    static RunMetadata read(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw DataError("missing stage input " + path.string());
        RunMetadata md;
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            md.entries_.emplace_back(line.substr(0, eq), line.substr(eq + 1));
        }
        return md;
    }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

// --- stage building blocks ---------------------------------------------------------

struct DocClustering {
    std::vector<std::size_t> labels;
    std::optional<Dendrogram> tree;
    std::optional<double> inertia;
};

inline DocClustering cluster_documents(const Matrix& cd, std::size_t c, const PipelineConfig& cfg) {
    if (c > cd.rows())
        throw ConfigError("c = " + std::to_string(c) + " exceeds the number of documents (" + std::to_string(cd.rows()) + ")");
    DocClustering out;
    if (cfg.doc_algorithm == DocAlgorithm::kmeans) {
        KMeansConfig km;
        km.k = c;
        km.restarts = cfg.restarts;
        km.max_iters = cfg.max_iters;
        km.tol = cfg.tol;
        km.seed = cfg.doc_seed();
        auto fc = lloyd(cd, km);
        out.labels = std::move(fc.labels);
        out.inertia = fc.inertia;
    } else {
        out.tree = ward_cluster(cd, cfg.ward_storage);
        out.labels = cut(*out.tree, c);
    }
    return out;
}

/// Silhouette on `points` when at least two clusters are present; purity and
/// ARI only when ground truth is supplied.
inline EvalReport evaluate_clustering(const Matrix& points, const std::vector<std::size_t>& predicted,
                                      const std::optional<std::vector<std::string>>& truth) {
    EvalReport r;
    auto pred = LabelVector::from(predicted);
    if (pred.count >= 2) r.silhouette = silhouette(points, pred);
    if (truth) {
        auto t = LabelVector::from(*truth);
        r.purity = purity(pred, t);
        r.ari = ari(pred, t);
    }
    return r;
}

struct ElbowBounds {
    std::size_t k_min, k_max, step;
};

/// The configured sweep clamped so that every k is below the vocabulary size
/// and at most the number of embedded words.
inline ElbowBounds elbow_bounds(const PipelineConfig& cfg, std::size_t n_words, std::size_t vocab_size) {
    std::size_t hi = std::min({cfg.elbow_max, n_words, vocab_size > 0 ? vocab_size - 1 : 0});
    if (cfg.elbow_min >= hi)
        throw ConfigError("elbow sweep [" + std::to_string(cfg.elbow_min) + ", " + std::to_string(cfg.elbow_max) +
                          "] is empty for " + std::to_string(n_words) + " embedded words");
    return {cfg.elbow_min, hi, cfg.elbow_step};
}

inline KMeansConfig word_kmeans_config(const PipelineConfig& cfg, std::size_t k) {
    KMeansConfig km;
    km.k = k;
    km.batch_size = cfg.batch_size;
    km.max_iters = cfg.max_iters;
    km.restarts = cfg.word_restarts;
    km.tol = cfg.tol;
    km.seed = cfg.word_seed();
    return km;
}

inline void write_labels_csv(const std::vector<std::string>& ids, const std::vector<std::string>& labels,
                             const std::filesystem::path& path) {
    std::ostringstream ss;
    ss << "id,label\n";
    for (std::size_t i = 0; i < ids.size(); ++i) ss << csv::escape(ids[i]) << ',' << csv::escape(labels[i]) << '\n';
    csv::write_file(path, ss.str());
}

inline std::vector<std::pair<std::string, std::string>> read_labels_csv(const std::filesystem::path& path) {
    auto t = csv::read_table(path);
    auto id = t.require_column("id", path.string()), label = t.require_column("label", path.string());
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& row : t.rows) out.emplace_back(row[id], row[label]);
    return out;
}

inline std::vector<std::string> to_strings(const std::vector<std::size_t>& v) {
    std::vector<std::string> out;
    out.reserve(v.size());
    for (auto x : v) out.push_back(std::to_string(x));
    return out;
}

namespace detail {

[[noreturn]] inline void rethrow_tagged(std::string_view phase, const Error& e) {
    std::string msg = "[" + std::string(phase) + "] " + e.what();
    switch (e.kind()) {
    case ErrorKind::config: throw ConfigError(msg);
    case ErrorKind::data: throw DataError(msg);
    case ErrorKind::numeric: throw NumericError(msg);
    }
    throw DataError(msg);
}

/// Runs one phase, tagging any failure with the phase name and recording the
/// elapsed time.
template <class Fn>
auto phase(std::string_view name, RunMetadata& md, Fn&& fn) {
    auto t0 = std::chrono::steady_clock::now();
    auto finish = [&] {
        auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        md.set("timing_ms." + std::string(name), csv::format(ms));
    };
    try {
        if constexpr (std::is_void_v<std::invoke_result_t<Fn>>) {
            fn();
            finish();
        } else {
            auto r = fn();
            finish();
            return r;
        }
    } catch (const Error& e) {
        if (std::string_view(e.what()).starts_with("[")) throw;
        rethrow_tagged(name, e);
    } catch (const std::filesystem::filesystem_error& e) {
        rethrow_tagged(name, DataError(e.what()));
    } catch (const std::bad_alloc&) {
        rethrow_tagged(name, NumericError("out of memory"));
    }
}

inline std::string join(const std::vector<std::string>& items, std::size_t limit = 50) {
    std::string out;
    for (std::size_t i = 0; i < items.size() && i < limit; ++i) {
        if (i) out += ';';
        out += items[i];
    }
    if (items.size() > limit) out += ";...";
    return out;
}

inline void record_file(RunMetadata& md, const std::filesystem::path& dir, std::string_view name) {
    md.set("hash." + std::string(name), csv::file_hash(dir / name));
}

}  // namespace detail

struct RunResult {
    std::filesystem::path dir;
    EvalReport metrics;
    std::size_t k_voc = 0;
    std::size_t vocabulary_size = 0;
    std::optional<ElbowCurve> elbow;
    std::vector<std::size_t> labels;
    RunMetadata metadata;
};

/// Loads the resolved configuration recorded in a run directory.
inline PipelineConfig load_run_config(const std::filesystem::path& run_dir) {
    auto md = RunMetadata::read(run_dir / run_files::metadata);
    PipelineConfig cfg;
    for (const auto& [k, v] : md.entries())
        if (k.starts_with("config.")) apply_setting(cfg, std::string_view(k).substr(7), v);
    return cfg;
}

/// The whole pipeline: ingest, preprocess, vocabulary and TF-IDF, embedding
/// filtration, word clustering, CD matrix, document clustering, evaluation
/// and reports. On failure the run directory keeps its partial outputs plus a
/// FAILED marker, and the phase-tagged error propagates.
inline RunResult run_pipeline(const PipelineConfig& cfg) {
    namespace fs = std::filesystem;
    validate_paths(cfg);
    const fs::path dir = cfg.output;
    fs::create_directories(dir);
    fs::remove(dir / run_files::failed);

    RunResult result;
    result.dir = dir;
    RunMetadata& md = result.metadata;
    for (const auto& [k, v] : resolved_settings(cfg)) md.set("config." + k, v);
    md.set("decision.sentence_split", "every . ! ?");
    md.set("decision.tokenizer", "unicode_whitespace+strip_punct");
    md.set("decision.stoplist", cfg.stoplist.empty() ? std::string(kBuiltinStoplistVersion) : "file");
    md.set("decision.digit_filter", "all_decimal_digits");
    md.set("decision.tfidf", "raw_tf*(ln((1+N)/(1+df))+1)");
    md.set("decision.occurrence_reduction", "mean");
    md.set("decision.word_clustering", "minibatch_kmeans");
    md.set("decision.elbow_rule", "max_chord_distance_normalized_smallest_k");
    md.set("decision.cd_normalization", "row_l2");
    md.set("decision.flat_distance", "squared_euclidean");
    md.set("seed.word_clustering", std::to_string(cfg.word_seed()));
    md.set("seed.doc_clustering", std::to_string(cfg.doc_seed()));
    md.set("threads", std::to_string(thread_count()));

    try {
        Corpus corpus = detail::phase("ingest", md, [&] { return ingest(cfg.corpus); });
        if (fs::is_regular_file(cfg.corpus)) md.set("hash.input.corpus", csv::file_hash(cfg.corpus));
        md.set("corpus.documents", std::to_string(corpus.size()));
        md.set("corpus.labeled", corpus.has_labels() ? "true" : "false");

        detail::phase("preprocess", md, [&] {
            preprocess(corpus);
            std::vector<std::string> empty;
            std::ostringstream ss;
            ss << "index,id,label,tokens\n";
            for (std::size_t i = 0; i < corpus.size(); ++i) {
                const auto& d = corpus.documents[i];
                if (d.token_count() == 0) empty.push_back(d.id);
                ss << i << ',' << csv::escape(d.id) << ',' << csv::escape(d.label.value_or("")) << ',' << d.token_count()
                   << '\n';
            }
            csv::write_file(dir / run_files::documents, ss.str());
            md.set("flag.empty_documents", std::to_string(empty.size()));
            if (!empty.empty()) md.set("flag.empty_document_ids", detail::join(empty));
            if (corpus.has_labels()) {
                std::vector<std::string> truth;
                for (const auto& d : corpus.documents) truth.push_back(*d.label);
                write_labels_csv(corpus.ids(), truth, dir / run_files::truth);
            }
        });

        std::size_t c = 0;
        if (cfg.c) {
            c = *cfg.c;
        } else if (corpus.has_labels()) {
            c = corpus.label_count();
        } else {
            throw ConfigError("[doc_clustering] c is not set and the corpus has no labels");
        }
        md.set("resolved.c", std::to_string(c));

        Vocabulary vocab;
        TfIdfMatrix scores;
        detail::phase("vocabulary", md, [&] {
            Stoplist stop = cfg.stoplist.empty() ? builtin_stoplist() : read_stoplist(cfg.stoplist);
            if (!cfg.stoplist.empty()) md.set("hash.input.stoplist", csv::file_hash(cfg.stoplist));
            vocab = build_vocabulary(corpus, stop);
            scores = tfidf(corpus, vocab);
            std::ostringstream v;
            v << "term_index,term,doc_freq\n";
            for (std::size_t t = 0; t < vocab.size(); ++t)
                v << t << ',' << csv::escape(vocab.term(t)) << ',' << vocab.doc_freq(t) << '\n';
            csv::write_file(dir / run_files::vocabulary, v.str());
            std::ostringstream m;
            m << "doc_index,term_index,count,score\n";
            for (std::size_t d = 0; d < scores.n_docs; ++d)
                for (const auto& e : scores.rows[d]) m << d << ',' << e.term << ',' << e.count << ',' << csv::format(e.score) << '\n';
            csv::write_file(dir / run_files::tfidf, m.str());
            detail::record_file(md, dir, run_files::vocabulary);
            detail::record_file(md, dir, run_files::tfidf);
        });
        result.vocabulary_size = vocab.size();
        md.set("vocabulary.size", std::to_string(vocab.size()));
        md.set("tfidf.nnz", std::to_string(scores.nnz()));

        EmbeddingTable table = detail::phase("embeddings", md, [&] {
            auto raw = read_embeddings(cfg.embeddings);
            md.set("hash.input.embeddings", csv::file_hash(cfg.embeddings));
            md.set("embeddings.dim", std::to_string(raw.dim()));
            md.set("embeddings.input_words", std::to_string(raw.size()));
            auto sidecar = fs::path(cfg.embeddings.string() + ".json");
            if (fs::exists(sidecar)) md.set("hash.input.embeddings_metadata", csv::file_hash(sidecar));
            auto filtered = filter(raw, vocab);
            write_wemb(filtered, dir / run_files::embeddings);
            detail::record_file(md, dir, run_files::embeddings);
            return filtered;
        });
        md.set("embeddings.filtered_words", std::to_string(table.size()));

        ConceptModel concepts = detail::phase("word_clustering", md, [&] {
            Matrix points = table.to_matrix();
            std::size_t k_voc = 0;
            if (cfg.k_voc) {
                k_voc = *cfg.k_voc;
                if (k_voc >= vocab.size())
                    throw ConfigError("k_voc = " + std::to_string(k_voc) + " must be below the vocabulary size (" +
                                      std::to_string(vocab.size()) + ")");
            } else {
                auto b = elbow_bounds(cfg, table.size(), vocab.size());
                md.set("elbow.k_min", std::to_string(b.k_min));
                md.set("elbow.k_max", std::to_string(b.k_max));
                md.set("elbow.step", std::to_string(b.step));
                result.elbow = elbow_select(points, b.k_min, b.k_max, word_kmeans_config(cfg, b.k_min), b.step);
                k_voc = result.elbow->chosen_k;
                std::ostringstream ss;
                write_elbow_csv(*result.elbow, ss);
                csv::write_file(dir / run_files::elbow, ss.str());
                detail::record_file(md, dir, run_files::elbow);
                md.set("elbow.chosen_k", std::to_string(k_voc));
            }
            auto fc = minibatch_kmeans(points, word_kmeans_config(cfg, k_voc));
            md.set("word_clustering.inertia", csv::format(fc.inertia));
            auto model = assign_concepts(table, fc);
            std::ostringstream ss;
            ss << "word,concept\n";
            for (std::size_t i = 0; i < model.words.size(); ++i) ss << csv::escape(model.words[i]) << ',' << model.assignment[i] << '\n';
            csv::write_file(dir / run_files::concepts, ss.str());
            detail::record_file(md, dir, run_files::concepts);
            return model;
        });
        result.k_voc = concepts.k_voc;
        md.set("resolved.k_voc", std::to_string(concepts.k_voc));

        CDMatrix cd = detail::phase("cd_matrix", md, [&] {
            auto raw = build_cd(corpus, vocab, scores, concepts, cfg.cd_scoring);
            md.set("cd.unembedded_terms", std::to_string(raw.unembedded_terms));
            md.set("cd.assigned_terms", std::to_string(raw.assigned_terms));
            auto norm = normalize(std::move(raw));
            std::vector<std::string> zero_ids;
            for (auto d : norm.zero_rows) zero_ids.push_back(corpus.documents[d].id);
            md.set("flag.zero_cd_rows", std::to_string(zero_ids.size()));
            if (!zero_ids.empty()) md.set("flag.zero_cd_row_ids", detail::join(zero_ids));
            md.set("cd.columns", std::to_string(norm.values.cols()));
            std::ostringstream ss;
            write_cd_csv(norm.values, corpus.ids(), ss);
            csv::write_file(dir / run_files::cd_matrix, ss.str());
            detail::record_file(md, dir, run_files::cd_matrix);
            return norm;
        });

        auto docs = detail::phase("doc_clustering", md, [&] {
            auto dc = cluster_documents(cd.values, c, cfg);
            write_labels_csv(corpus.ids(), to_strings(dc.labels), dir / run_files::labels);
            detail::record_file(md, dir, run_files::labels);
            if (dc.tree) {
                std::ostringstream ss;
                write_dendrogram_csv(*dc.tree, ss);
                csv::write_file(dir / run_files::dendrogram, ss.str());
                detail::record_file(md, dir, run_files::dendrogram);
            }
            if (dc.inertia) md.set("doc_clustering.inertia", csv::format(*dc.inertia));
            return dc;
        });
        result.labels = docs.labels;

        result.metrics = detail::phase("evaluation", md, [&] {
            std::optional<std::vector<std::string>> truth;
            if (corpus.has_labels()) {
                truth.emplace();
                for (const auto& d : corpus.documents) truth->push_back(*d.label);
            }
            auto r = evaluate_clustering(cd.values, docs.labels, truth);
            r.run = cfg.resolved_run_name();
            r.dataset = cfg.resolved_dataset();
            r.k_voc = concepts.k_voc;
            r.c = c;
            r.seed = cfg.seed;
            return r;
        });

        detail::phase("report", md, [&] {
            write_report({result.metrics}, dir);
            detail::record_file(md, dir, run_files::metrics);
        });
        md.set("status", "ok");
        md.write(dir / run_files::metadata);
    } catch (const Error& e) {
        md.set("status", "failed");
        md.set("error", e.what());
        md.write(dir / run_files::metadata);
        csv::write_file(dir / run_files::failed, std::string(e.what()) + "\n");
        throw;
    }
    return result;
}

// --- pipeline slices ---------------------------------------------------------------

/// Re-runs the elbow sweep on the run's filtered embeddings; writes elbow.csv
/// into out_dir.
inline ElbowCurve run_elbow_stage(const PipelineConfig& cfg, const std::filesystem::path& run_dir,
                                  const std::filesystem::path& out_dir) {
    auto md = RunMetadata::read(run_dir / run_files::metadata);
    auto table = read_wemb(run_dir / run_files::embeddings);
    std::size_t vocab_size = table.size() + 1;
    if (auto v = md.get("vocabulary.size")) vocab_size = csv::parse_int<std::size_t>(*v).value_or(vocab_size);
    auto b = elbow_bounds(cfg, table.size(), vocab_size);
    auto curve = elbow_select(table.to_matrix(), b.k_min, b.k_max, word_kmeans_config(cfg, b.k_min), b.step);
    std::filesystem::create_directories(out_dir);
    std::ostringstream ss;
    write_elbow_csv(curve, ss);
    csv::write_file(out_dir / run_files::elbow, ss.str());
    return curve;
}

/// Re-clusters the stored CD matrix and re-evaluates; writes labels.csv,
/// dendrogram.csv (agglomerative only) and metrics.csv into out_dir.
inline EvalReport run_cluster_docs_stage(const PipelineConfig& cfg, const std::filesystem::path& run_dir,
                                         const std::filesystem::path& out_dir, std::optional<std::size_t> c_override = {}) {
    namespace fs = std::filesystem;
    auto md = RunMetadata::read(run_dir / run_files::metadata);
    auto rows = read_cd_csv(run_dir / run_files::cd_matrix);
    std::optional<std::vector<std::string>> truth;
    if (fs::exists(run_dir / run_files::truth)) {
        auto t = read_labels_csv(run_dir / run_files::truth);
        if (t.size() != rows.ids.size()) throw DataError("truth.csv and cd_matrix.csv disagree on document count");
        truth.emplace();
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t[i].first != rows.ids[i]) throw DataError("truth.csv and cd_matrix.csv disagree on document order");
            truth->push_back(t[i].second);
        }
    }
    std::size_t c = 0;
    if (c_override)
        c = *c_override;
    else if (cfg.c)
        c = *cfg.c;
    else if (auto v = md.get("resolved.c"))
        c = csv::parse_int<std::size_t>(*v).value_or(0);
    if (c == 0) throw ConfigError("cluster-docs: cluster count unknown");

    fs::create_directories(out_dir);
    auto dc = cluster_documents(rows.values, c, cfg);
    write_labels_csv(rows.ids, to_strings(dc.labels), out_dir / run_files::labels);
    if (dc.tree) {
        std::ostringstream ss;
        write_dendrogram_csv(*dc.tree, ss);
        csv::write_file(out_dir / run_files::dendrogram, ss.str());
    } else {
        fs::remove(out_dir / run_files::dendrogram);
    }
    auto r = evaluate_clustering(rows.values, dc.labels, truth);
    r.run = cfg.resolved_run_name();
    r.dataset = cfg.resolved_dataset();
    r.k_voc = rows.values.cols();
    r.c = c;
    r.seed = cfg.seed;
    std::ostringstream ss;
    write_metrics_csv({r}, ss);
    csv::write_file(out_dir / run_files::metrics, ss.str());
    return r;
}

/// Metrics from stored label files. Documents are matched by id; the truth
/// file must cover every predicted id. With `points` (a CD matrix CSV) the
/// silhouette is computed as well.
inline EvalReport evaluate_files(const std::filesystem::path& pred_path, const std::optional<std::filesystem::path>& truth_path,
                                 const std::optional<std::filesystem::path>& points_path) {
    auto pred = read_labels_csv(pred_path);
    if (pred.empty()) throw DataError(pred_path.string() + ": no labels");
    std::vector<std::string> pred_labels;
    for (const auto& [id, l] : pred) pred_labels.push_back(l);
    auto pv = LabelVector::from(pred_labels);
    EvalReport r;
    if (truth_path) {
        auto truth = read_labels_csv(*truth_path);
        std::unordered_map<std::string, std::string> by_id(truth.begin(), truth.end());
        std::vector<std::string> t;
        for (const auto& [id, l] : pred) {
            auto it = by_id.find(id);
            if (it == by_id.end()) throw DataError("evaluate: no truth label for '" + id + "'");
            t.push_back(it->second);
        }
        auto tv = LabelVector::from(t);
        r.purity = purity(pv, tv);
        r.ari = ari(pv, tv);
    }
    if (points_path) {
        auto rows = read_cd_csv(*points_path);
        std::unordered_map<std::string, std::size_t> row_of;
        for (std::size_t i = 0; i < rows.ids.size(); ++i) row_of.emplace(rows.ids[i], i);
        Matrix pts(pred.size(), rows.values.cols());
        for (std::size_t i = 0; i < pred.size(); ++i) {
            auto it = row_of.find(pred[i].first);
            if (it == row_of.end()) throw DataError("evaluate: no point for '" + pred[i].first + "'");
            std::copy(rows.values.row(it->second).begin(), rows.values.row(it->second).end(), pts.row(i).begin());
        }
        if (pv.count >= 2) r.silhouette = silhouette(pts, pv);
        r.k_voc = rows.values.cols();
    }
    r.c = pv.count;
    return r;
}

}  // namespace weclust
