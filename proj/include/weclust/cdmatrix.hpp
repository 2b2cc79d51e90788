#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "weclust/cluster_core.hpp"
#include "weclust/corpus.hpp"
#include "weclust/csv.hpp"
#include "weclust/embed_store.hpp"
#include "weclust/error.hpp"
#include "weclust/matrix.hpp"

namespace weclust {

/// Word clusters ("concepts") over the filtered embedding table.
struct ConceptModel {
    std::size_t k_voc = 0;
    Matrix centroids;
    std::vector<std::string> words;        // table order
    std::vector<std::size_t> assignment;   // concept of words[i]
    std::unordered_map<std::string, std::size_t> index;

    std::optional<std::size_t> concept_of(std::string_view word) const {
        auto it = index.find(std::string(word));
        if (it == index.end()) return std::nullopt;
        return assignment[it->second];
    }

    std::vector<std::size_t> concept_sizes() const {
        std::vector<std::size_t> sizes(k_voc, 0);
        for (auto c : assignment) ++sizes[c];
        return sizes;
    }
};

inline ConceptModel assign_concepts(const EmbeddingTable& table, const FlatClustering& clustering) {
    if (clustering.labels.size() != table.size())
        throw DataError("concept assignment: table has " + std::to_string(table.size()) + " words but clustering has " +
                        std::to_string(clustering.labels.size()) + " labels");
    ConceptModel model;
    model.k_voc = clustering.centroids.rows();
    model.centroids = clustering.centroids;
    model.words = table.words();
    model.assignment = clustering.labels;
    for (std::size_t i = 0; i < model.words.size(); ++i) {
        if (model.assignment[i] >= model.k_voc) throw DataError("concept assignment: label out of range");
        model.index.emplace(model.words[i], i);
    }
    return model;
}

enum class CdScoring {
    sum_tfidf,         // Σ_{w∈c} tfidf(w, d)
    count_times_mean,  // (Σ_{w∈c} tf(w, d)) × mean_{w∈c, tf>0} tfidf(w, d)
};

inline std::string_view to_string(CdScoring s) { return s == CdScoring::sum_tfidf ? "sum_tfidf" : "count_times_mean"; }

inline std::optional<CdScoring> parse_cd_scoring(std::string_view s) {
    if (s == "sum_tfidf") return CdScoring::sum_tfidf;
    if (s == "count_times_mean") return CdScoring::count_times_mean;
    return std::nullopt;
}

struct CDMatrix {
    Matrix values;  // documents × k_voc, non-negative
    bool normalized = false;
    std::vector<std::size_t> zero_rows;      // documents with no concept mass
    std::size_t unembedded_terms = 0;        // vocabulary terms with no concept
    std::size_t assigned_terms = 0;
};

inline CDMatrix build_cd(const Corpus& corpus, const Vocabulary& vocab, const TfIdfMatrix& tfidf, const ConceptModel& model,
                         CdScoring scoring = CdScoring::sum_tfidf) {
    if (tfidf.n_docs != corpus.size() || tfidf.n_terms != vocab.size())
        throw DataError("CD matrix: tf-idf dimensions do not match corpus and vocabulary");
    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::vector<std::size_t> term_concept(vocab.size(), kNone);
    CDMatrix cd;
    for (std::size_t t = 0; t < vocab.size(); ++t) {
        if (auto c = model.concept_of(vocab.term(t))) {
            term_concept[t] = *c;
            ++cd.assigned_terms;
        } else {
            ++cd.unembedded_terms;
        }
    }
    if (cd.assigned_terms == 0) throw DataError("CD matrix: no vocabulary term has a concept");

    cd.values = Matrix(corpus.size(), model.k_voc, 0.0);
    parallel_for(corpus.size(), [&](std::size_t d) {
        auto row = cd.values.row(d);
        if (scoring == CdScoring::sum_tfidf) {
            for (const auto& e : tfidf.rows[d])
                if (term_concept[e.term] != kNone) row[term_concept[e.term]] += e.score;
        } else {
            std::vector<double> word_count(model.k_voc, 0.0), score_sum(model.k_voc, 0.0), distinct(model.k_voc, 0.0);
            for (const auto& e : tfidf.rows[d]) {
                std::size_t c = term_concept[e.term];
                if (c == kNone) continue;
                word_count[c] += e.count;
                score_sum[c] += e.score;
                distinct[c] += 1.0;
            }
            for (std::size_t c = 0; c < model.k_voc; ++c)
                if (distinct[c] > 0.0) row[c] = word_count[c] * (score_sum[c] / distinct[c]);
        }
    }, 16);
    for (std::size_t d = 0; d < corpus.size(); ++d) {
        bool zero = true;
        for (double v : cd.values.row(d)) {
            if (!std::isfinite(v)) throw NumericError("CD matrix: non-finite entry in row " + std::to_string(d));
            if (v != 0.0) zero = false;
        }
        if (zero) cd.zero_rows.push_back(d);
    }
    return cd;
}

/// Row-wise L2 normalization; all-zero rows stay zero and are recorded.
inline CDMatrix normalize(CDMatrix cd) {
    cd.zero_rows.clear();
    for (std::size_t d = 0; d < cd.values.rows(); ++d) {
        auto row = cd.values.row(d);
        double ss = 0.0;
        for (double v : row) ss += v * v;
        if (ss == 0.0) {
            cd.zero_rows.push_back(d);
            continue;
        }
        double norm = std::sqrt(ss);
        for (double& v : row) v /= norm;
    }
    cd.normalized = true;
    return cd;
}

inline void write_cd_csv(const Matrix& values, const std::vector<std::string>& doc_ids, std::ostream& out) {
    out << "doc_id";
    for (std::size_t c = 0; c < values.cols(); ++c) out << ",c" << c;
    out << '\n';
    for (std::size_t d = 0; d < values.rows(); ++d) {
        out << csv::escape(doc_ids[d]);
        for (double v : values.row(d)) out << ',' << csv::format(v);
        out << '\n';
    }
}

struct LabeledRows {
    std::vector<std::string> ids;
    Matrix values;
};

inline LabeledRows read_cd_csv(const std::filesystem::path& path) {
    auto table = csv::read_table(path);
    if (table.header.empty() || table.header.front() != "doc_id") throw DataError(path.string() + ": expected doc_id column");
    LabeledRows out;
    out.values = Matrix(table.rows.size(), table.header.size() - 1);
    for (std::size_t d = 0; d < table.rows.size(); ++d) {
        out.ids.push_back(table.rows[d][0]);
        for (std::size_t c = 1; c < table.header.size(); ++c) {
            auto v = csv::parse_double(table.rows[d][c]);
            if (!v) throw DataError(path.string() + ": bad number '" + table.rows[d][c] + "'");
            out.values(d, c - 1) = *v;
        }
    }
    return out;
}

}  // namespace weclust
