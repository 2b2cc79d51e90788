#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "weclust/error.hpp"
#include "weclust/parallel.hpp"
#include "weclust/stoplist.hpp"
#include "weclust/text.hpp"

namespace weclust {

using Sentence = std::vector<std::string>;

struct Document {
    std::string id;
    std::string text;
    std::optional<std::string> label;
    std::vector<Sentence> sentences;

    std::size_t token_count() const {
        std::size_t n = 0;
        for (const auto& s : sentences) n += s.size();
        return n;
    }
};

struct Corpus {
    std::vector<Document> documents;

    std::size_t size() const noexcept { return documents.size(); }

    /// True when every document carries a ground-truth label.
    bool has_labels() const {
        return !documents.empty() &&
               std::all_of(documents.begin(), documents.end(), [](const Document& d) { return d.label.has_value(); });
    }

    std::size_t label_count() const {
        std::set<std::string> seen;
        for (const auto& d : documents)
            if (d.label) seen.insert(*d.label);
        return seen.size();
    }

    std::vector<std::string> ids() const {
        std::vector<std::string> out;
        out.reserve(documents.size());
        for (const auto& d : documents) out.push_back(d.id);
        return out;
    }
};

// --- ingestion -------------------------------------------------------------

namespace detail {

inline void check_corpus(const Corpus& corpus, const std::string& source) {
    if (corpus.documents.empty()) throw DataError("empty corpus: " + source);
    std::unordered_set<std::string> ids;
    for (const auto& d : corpus.documents)
        if (!ids.insert(d.id).second) throw DataError("duplicate document id '" + d.id + "' in " + source);
}

inline std::vector<std::string> split_tabs(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto tab = line.find('\t', start);
        out.emplace_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
        if (tab == std::string_view::npos) break;
        start = tab + 1;
    }
    return out;
}

}  // namespace detail

/// Reads a labeled corpus: header row naming the columns id, label and text
/// (any order). An empty label field leaves the document unlabeled. Extra
/// tabs are folded into the text when text is the last column.
inline Corpus read_corpus_tsv(std::istream& in, const std::string& source = "<tsv>") {
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty corpus: " + source);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = detail::split_tabs(line);
    auto find = [&](std::string_view name) -> std::size_t {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw DataError(source + ": TSV header lacks column '" + std::string(name) + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t id_col = find("id"), label_col = find("label"), text_col = find("text");

    Corpus corpus;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = detail::split_tabs(line);
        if (fields.size() > header.size() && text_col == header.size() - 1) {
            for (std::size_t i = header.size(); i < fields.size(); ++i) fields[text_col] += "\t" + fields[i];
            fields.resize(header.size());
        }
        if (fields.size() != header.size())
            throw DataError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " fields");
        Document doc;
        doc.id = fields[id_col];
        doc.text = fields[text_col];
        if (!fields[label_col].empty()) doc.label = fields[label_col];
        if (doc.id.empty()) throw DataError(source + ":" + std::to_string(line_no) + ": empty id");
        corpus.documents.push_back(std::move(doc));
    }
    detail::check_corpus(corpus, source);
    return corpus;
}

/// Every regular *.txt file in the directory, ordered by filename. The id is
/// the filename.
inline Corpus read_corpus_directory(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw DataError("unreadable corpus directory " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir, ec))
        if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
    if (ec) throw DataError("unreadable corpus directory " + dir.string());
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

    Corpus corpus;
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        if (!in) throw DataError("unreadable file " + f.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        corpus.documents.push_back(Document{f.filename().string(), ss.str(), std::nullopt, {}});
    }
    detail::check_corpus(corpus, dir.string());
    return corpus;
}

/// Dispatches on the path: a directory of text files or a TSV file.
inline Corpus ingest(const std::filesystem::path& source) {
    std::error_code ec;
    if (std::filesystem::is_directory(source, ec)) return read_corpus_directory(source);
    std::ifstream in(source, std::ios::binary);
    if (!in) throw DataError("unreadable corpus " + source.string());
    return read_corpus_tsv(in, source.string());
}

// --- preprocessing ---------------------------------------------------------

/// Strips leading and trailing punctuation code points.
inline std::string strip_punctuation(std::string_view token) {
    std::vector<std::pair<std::size_t, char32_t>> cps;
    std::size_t pos = 0;
    while (pos < token.size()) {
        std::size_t at = pos;
        cps.emplace_back(at, text::decode(token, pos));
    }
    std::size_t b = 0, e = cps.size();
    while (b < e && text::is_punct(cps[b].second)) ++b;
    while (e > b && text::is_punct(cps[e - 1].second)) --e;
    if (b == e) return {};
    std::size_t start = cps[b].first;
    std::size_t stop = e < cps.size() ? cps[e].first : token.size();
    return std::string(token.substr(start, stop - start));
}

/// Lowercases, splits sentences at every '.', '!' or '?', splits tokens on
/// Unicode whitespace and trims punctuation from each token. Empty tokens and
/// empty sentences are dropped.
inline std::vector<Sentence> split_sentences(std::string_view raw) {
    const std::string lowered = text::to_lower(raw);
    std::vector<Sentence> sentences;
    Sentence current;
    std::string token;

    auto flush_token = [&] {
        if (token.empty()) return;
        std::string t = strip_punctuation(token);
        if (!t.empty()) current.push_back(std::move(t));
        token.clear();
    };
    auto flush_sentence = [&] {
        flush_token();
        if (!current.empty()) sentences.push_back(std::move(current));
        current.clear();
    };

    std::size_t pos = 0;
    while (pos < lowered.size()) {
        std::size_t at = pos;
        char32_t cp = text::decode(lowered, pos);
        if (text::is_sentence_terminal(cp)) {
            flush_sentence();
        } else if (text::is_space(cp)) {
            flush_token();
        } else {
            token.append(lowered, at, pos - at);
        }
    }
    flush_sentence();
    return sentences;
}

inline Document preprocess(Document doc) {
    doc.sentences = split_sentences(doc.text);
    return doc;
}

/// Preprocesses every document in place; parallel over documents.
inline void preprocess(Corpus& corpus) {
    parallel_for(corpus.size(), [&](std::size_t i) { corpus.documents[i].sentences = split_sentences(corpus.documents[i].text); }, 8);
}

// --- vocabulary --------------------------------------------------------------

/// True when the token survives filtration: not a stopword, not made only of
/// punctuation, not made only of decimal digits.
inline bool keep_token(std::string_view token, const Stoplist& stoplist) {
    if (token.empty()) return false;
    if (text::is_all(token, text::is_punct)) return false;
    if (text::is_all(token, text::is_ascii_digit)) return false;
    return !stoplist.contains(std::string(token));
}

class Vocabulary {
public:
    Vocabulary() = default;

    /// Terms must be unique; they are stored in byte-lexicographic order.
    Vocabulary(std::map<std::string, std::size_t> doc_freq) {
        terms_.reserve(doc_freq.size());
        doc_freq_.reserve(doc_freq.size());
        for (auto& [term, df] : doc_freq) {
            index_.emplace(term, terms_.size());
            terms_.push_back(term);
            doc_freq_.push_back(df);
        }
    }

    std::size_t size() const noexcept { return terms_.size(); }
    bool empty() const noexcept { return terms_.empty(); }
    const std::vector<std::string>& terms() const noexcept { return terms_; }
    const std::string& term(std::size_t i) const { return terms_[i]; }
    std::size_t doc_freq(std::size_t i) const { return doc_freq_[i]; }

    std::optional<std::size_t> find(std::string_view term) const {
        auto it = index_.find(std::string(term));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    bool contains(std::string_view term) const { return find(term).has_value(); }

private:
    std::vector<std::string> terms_;
    std::vector<std::size_t> doc_freq_;
    std::unordered_map<std::string, std::size_t> index_;
};

inline Vocabulary build_vocabulary(const Corpus& corpus, const Stoplist& stoplist) {
    std::vector<std::set<std::string>> per_doc(corpus.size());
    parallel_for(corpus.size(), [&](std::size_t i) {
        for (const auto& sentence : corpus.documents[i].sentences)
            for (const auto& tok : sentence)
                if (keep_token(tok, stoplist)) per_doc[i].insert(tok);
    }, 8);
    std::map<std::string, std::size_t> df;
    for (const auto& terms : per_doc)
        for (const auto& t : terms) ++df[t];
    if (df.empty()) throw DataError("empty vocabulary after filtration");
    return Vocabulary(std::move(df));
}

// --- tf-idf ------------------------------------------------------------------

struct TfIdfEntry {
    std::uint32_t term;
    std::uint32_t count;  // raw term frequency in the document
    double score;

    friend bool operator==(const TfIdfEntry&, const TfIdfEntry&) = default;
};

/// Sparse documents × terms matrix; each row sorted by term index.
struct TfIdfMatrix {
    std::size_t n_docs = 0;
    std::size_t n_terms = 0;
    std::vector<std::vector<TfIdfEntry>> rows;

    std::size_t nnz() const {
        std::size_t n = 0;
        for (const auto& r : rows) n += r.size();
        return n;
    }

    double at(std::size_t doc, std::size_t term) const {
        const auto& r = rows[doc];
        auto it = std::lower_bound(r.begin(), r.end(), term,
                                   [](const TfIdfEntry& e, std::size_t t) { return e.term < t; });
        return (it != r.end() && it->term == term) ? it->score : 0.0;
    }

    double row_sum(std::size_t doc) const {
        double s = 0.0;
        for (const auto& e : rows[doc]) s += e.score;
        return s;
    }
};

/// ln((1 + N) / (1 + df)) + 1.
inline double smoothed_idf(std::size_t n_docs, std::size_t doc_freq) {
    return std::log((1.0 + static_cast<double>(n_docs)) / (1.0 + static_cast<double>(doc_freq))) + 1.0;
}

inline TfIdfMatrix tfidf(const Corpus& corpus, const Vocabulary& vocab) {
    if (vocab.empty()) throw DataError("tf-idf requires a nonempty vocabulary");
    TfIdfMatrix m;
    m.n_docs = corpus.size();
    m.n_terms = vocab.size();
    m.rows.resize(m.n_docs);
    std::vector<double> idf(vocab.size());
    for (std::size_t t = 0; t < vocab.size(); ++t) idf[t] = smoothed_idf(m.n_docs, vocab.doc_freq(t));

    parallel_for(m.n_docs, [&](std::size_t d) {
        std::map<std::uint32_t, std::uint32_t> counts;
        for (const auto& sentence : corpus.documents[d].sentences)
            for (const auto& tok : sentence)
                if (auto t = vocab.find(tok)) ++counts[static_cast<std::uint32_t>(*t)];
        auto& row = m.rows[d];
        row.reserve(counts.size());
        for (auto [t, c] : counts) row.push_back({t, c, static_cast<double>(c) * idf[t]});
    }, 8);
    return m;
}

}  // namespace weclust
