// Library-level walk through the pipeline on a small planted-topic corpus,
// without touching the filesystem.

#include <iostream>

#include "weclust/weclust.hpp"
#include "weclust/synthetic.hpp"

int main() {
    using namespace weclust;

    synthetic::TopicCorpusSpec spec;
    spec.documents = 120;
    spec.seed = 3;
    auto data = synthetic::make_topic_corpus(spec);

    Corpus corpus = data.corpus;
    preprocess(corpus);
    Vocabulary vocab = build_vocabulary(corpus, builtin_stoplist());
    TfIdfMatrix scores = tfidf(corpus, vocab);
    EmbeddingTable table = filter(data.embeddings, vocab);

    KMeansConfig word_cfg;
    word_cfg.batch_size = 64;
    word_cfg.restarts = 3;
    word_cfg.seed = 11;
    ElbowCurve curve = elbow_select(table.to_matrix(), 2, 10, word_cfg);
    word_cfg.k = curve.chosen_k;
    ConceptModel concepts = assign_concepts(table, minibatch_kmeans(table.to_matrix(), word_cfg));

    CDMatrix cd = normalize(build_cd(corpus, vocab, scores, concepts));

    KMeansConfig doc_cfg;
    doc_cfg.k = spec.topics;
    doc_cfg.restarts = 20;
    doc_cfg.seed = 5;
    auto docs = lloyd(cd.values, doc_cfg);
    auto ward_labels = cut(ward_cluster(cd.values), spec.topics);

    std::vector<std::string> truth;
    for (const auto& d : corpus.documents) truth.push_back(*d.label);
    auto t = LabelVector::from(truth);
    auto km = LabelVector::from(docs.labels);
    auto ag = LabelVector::from(ward_labels);

    std::cout << "vocabulary " << vocab.size() << " terms, " << table.size() << " embedded, k_voc " << curve.chosen_k << "\n";
    std::cout << "kmeans:        silhouette " << silhouette(cd.values, km) << "  purity " << purity(km, t) << "  ari "
              << ari(km, t) << "\n";
    std::cout << "agglomerative: silhouette " << silhouette(cd.values, ag) << "  purity " << purity(ag, t) << "  ari "
              << ari(ag, t) << "\n";
}
