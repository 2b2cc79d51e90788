#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "weclust/corpus.hpp"
#include "weclust/embed_store.hpp"
#include "weclust/matrix.hpp"
#include "weclust/random.hpp"

// Planted-structure data for demos and tests.
namespace weclust::synthetic {

struct Blobs {
    Matrix points;
    std::vector<std::size_t> labels;
};

/// `centers` isotropic Gaussian blobs (unit σ) whose centres sit on scaled
/// coordinate axes, pairwise `separation` σ apart. Requires centers <= dim.
inline Blobs make_blobs(std::size_t n, std::size_t dim, std::size_t centers, double separation, std::uint64_t seed) {
    Rng rng(seed);
    Blobs b{Matrix(n, dim), std::vector<std::size_t>(n)};
    const double offset = separation / std::sqrt(2.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t c = i % centers;
        b.labels[i] = c;
        auto row = b.points.row(i);
        for (std::size_t j = 0; j < dim; ++j) row[j] = rng.normal() + (j == c ? offset : 0.0);
    }
    return b;
}

struct TopicCorpusSpec {
    std::size_t documents = 300;
    std::size_t topics = 3;
    std::size_t words_per_topic = 40;
    std::size_t dim = 32;
    double separation = 8.0;      // between topic centroids, in σ
    double noise_fraction = 0.1;  // share of content words drawn from any topic
    std::size_t min_tokens = 40;
    std::size_t max_tokens = 80;
    std::size_t unembedded_words = 5;  // content words with no vector
    std::uint64_t seed = 1;
};

struct TopicCorpus {
    Corpus corpus;
    EmbeddingTable embeddings;  // includes a few stopwords that filtration removes
    std::vector<std::size_t> topic_of_doc;
    std::vector<std::vector<std::string>> topic_words;
};

namespace detail {
inline std::string pseudo_word(std::size_t index) {
    static constexpr const char* kSyllables[] = {"ka", "lo", "mi", "ne", "ru", "sa", "ti", "vo", "xe", "zu",
                                                 "ba", "de", "fi", "go", "hu", "ja", "pe", "qui", "wo", "yi"};
    constexpr std::size_t n = std::size(kSyllables);
    std::string w;
    std::size_t x = index;
    do {
        w += kSyllables[x % n];
        x /= n;
    } while (x > 0);
    return w + kSyllables[(index * 7 + 3) % n] + "n";
}
}  // namespace detail

inline TopicCorpus make_topic_corpus(const TopicCorpusSpec& spec) {
    Rng rng(spec.seed);
    TopicCorpus out;
    out.embeddings = EmbeddingTable(spec.dim);
    const double offset = spec.separation / std::sqrt(2.0);

    std::size_t next_word = 0;
    out.topic_words.resize(spec.topics);
    std::vector<float> v(spec.dim);
    for (std::size_t t = 0; t < spec.topics; ++t) {
        for (std::size_t w = 0; w < spec.words_per_topic; ++w) {
            std::string word = detail::pseudo_word(next_word++);
            for (std::size_t j = 0; j < spec.dim; ++j)
                v[j] = static_cast<float>(rng.normal() + (j % spec.topics == t && j < spec.topics ? offset : 0.0));
            out.embeddings.add(word, v);
            out.topic_words[t].push_back(std::move(word));
        }
    }
    static constexpr const char* kFiller[] = {"the", "of", "and", "a", "in", "is", "to", "with"};
    for (const char* s : kFiller) {
        for (auto& x : v) x = static_cast<float>(rng.normal());
        out.embeddings.add(s, v);
    }
    std::vector<std::string> unembedded;
    for (std::size_t i = 0; i < spec.unembedded_words; ++i) unembedded.push_back(detail::pseudo_word(next_word++) + "x");

    for (std::size_t d = 0; d < spec.documents; ++d) {
        const std::size_t topic = d % spec.topics;
        const std::size_t tokens = spec.min_tokens + rng.below(spec.max_tokens - spec.min_tokens + 1);
        std::string text;
        std::size_t in_sentence = 0, sentence_len = 5 + rng.below(8);
        for (std::size_t i = 0; i < tokens; ++i) {
            std::string word;
            double u = rng.uniform();
            if (u < 0.25) {
                word = kFiller[rng.below(std::size(kFiller))];
            } else if (u < 0.27 && !unembedded.empty()) {
                word = unembedded[rng.below(unembedded.size())];
            } else if (u < 0.28) {
                word = std::to_string(rng.below(1000));
            } else {
                std::size_t src = rng.uniform() < spec.noise_fraction ? rng.below(spec.topics) : topic;
                word = out.topic_words[src][rng.below(out.topic_words[src].size())];
            }
            if (in_sentence == 0) word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
            text += word;
            if (++in_sentence == sentence_len) {
                text += ". ";
                in_sentence = 0;
                sentence_len = 5 + rng.below(8);
            } else {
                text += rng.uniform() < 0.08 ? ", " : " ";
            }
        }
        Document doc;
        doc.id = "doc" + std::to_string(d);
        doc.text = std::move(text);
        doc.label = "topic" + std::to_string(topic);
        out.corpus.documents.push_back(std::move(doc));
        out.topic_of_doc.push_back(topic);
    }
    return out;
}

/// Corpus as the TSV ingestion format (id, label, text).
inline void write_corpus_tsv(const Corpus& corpus, std::ostream& out) {
    out << "id\tlabel\ttext\n";
    for (const auto& d : corpus.documents) out << d.id << '\t' << d.label.value_or("") << '\t' << d.text << '\n';
}

}  // namespace weclust::synthetic
