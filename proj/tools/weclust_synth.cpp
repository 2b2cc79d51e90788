// weclust-synth: writes a planted-topic corpus, matching embeddings and a
// ready-to-run config into a directory.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "weclust/synthetic.hpp"

int main(int argc, char** argv) {
    CLI::App app{"generate a synthetic labeled corpus with topic-aligned word embeddings"};
    std::string out_dir = "synthetic";
    weclust::synthetic::TopicCorpusSpec spec;
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--documents", spec.documents, "number of documents");
    app.add_option("--topics", spec.topics, "number of planted topics");
    app.add_option("--words-per-topic", spec.words_per_topic, "content words per topic");
    app.add_option("--dim", spec.dim, "embedding dimension");
    app.add_option("--separation", spec.separation, "topic centroid separation in sigma");
    app.add_option("--seed", spec.seed, "generator seed");
    CLI11_PARSE(app, argc, argv);
    if (spec.topics == 0 || spec.topics > spec.dim) {
        std::cerr << "weclust-synth: need 1 <= topics <= dim\n";
        return 2;
    }

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    auto data = weclust::synthetic::make_topic_corpus(spec);
    {
        std::ofstream out(fs::path(out_dir) / "corpus.tsv", std::ios::binary);
        weclust::synthetic::write_corpus_tsv(data.corpus, out);
    }
    weclust::write_wemb(data.embeddings, fs::path(out_dir) / "embeddings.wemb");
    {
        std::ofstream cfg(fs::path(out_dir) / "config.txt");
        cfg << "# generated by weclust-synth\n"
            << "corpus = corpus.tsv\n"
            << "embeddings = embeddings.wemb\n"
            << "output = run\n"
            << "k_voc = elbow\n"
            << "elbow_min = 2\n"
            << "elbow_max = 12\n"
            << "elbow_step = 1\n"
            << "doc_algorithm = kmeans\n"
            << "seed = 7\n"
            << "dataset = synthetic\n";
    }
    std::cout << "wrote " << data.corpus.size() << " documents and " << data.embeddings.size() << " word vectors to "
              << out_dir << "\n";
    return 0;
}
