#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "weclust/synthetic.hpp"
#include "weclust/weclust.hpp"

using namespace weclust;
namespace fs = std::filesystem;

namespace {

struct Fixture {
    fs::path dir;
    PipelineConfig cfg;
};

// Writes a small synthetic corpus and embeddings; returns a config for it.
Fixture make_fixture(const std::string& name, bool labeled = true, std::size_t docs = 90) {
    Fixture f;
    f.dir = fs::temp_directory_path() / ("weclust_pipe_" + name);
    fs::remove_all(f.dir);
    fs::create_directories(f.dir);
    synthetic::TopicCorpusSpec spec;
    spec.documents = docs;
    spec.words_per_topic = 15;
    spec.seed = 4;
    auto data = synthetic::make_topic_corpus(spec);
    if (!labeled)
        for (auto& d : data.corpus.documents) d.label.reset();
    {
        std::ofstream out(f.dir / "corpus.tsv", std::ios::binary);
        synthetic::write_corpus_tsv(data.corpus, out);
    }
    write_wemb(data.embeddings, f.dir / "emb.wemb");
    f.cfg.corpus = f.dir / "corpus.tsv";
    f.cfg.embeddings = f.dir / "emb.wemb";
    f.cfg.output = f.dir / "run";
    f.cfg.k_voc = 3;
    f.cfg.c = 3;
    f.cfg.restarts = 5;
    f.cfg.seed = 3;
    return f;
}

}  // namespace

TEST(Config, ParsesFileAndResolvesPaths) {
    std::istringstream in("# comment\ncorpus = data/c.tsv\nembeddings=/abs/e.wemb  # trailing\nk_voc = elbow\n"
                          "elbow_min=2\nc = auto\ndoc_algorithm = agglomerative\nseed = 18446744073709551615\n");
    auto cfg = parse_config(in, "/base");
    EXPECT_EQ(cfg.corpus, fs::path("/base/data/c.tsv"));
    EXPECT_EQ(cfg.embeddings, fs::path("/abs/e.wemb"));
    EXPECT_FALSE(cfg.k_voc);
    EXPECT_EQ(cfg.elbow_min, 2u);
    EXPECT_FALSE(cfg.c);
    EXPECT_EQ(cfg.doc_algorithm, DocAlgorithm::agglomerative);
    EXPECT_EQ(cfg.seed, 18446744073709551615ull);
    EXPECT_EQ(cfg.word_seed(), 3u);
    EXPECT_EQ(cfg.resolved_run_name(), "weclust_agglomerative");
    EXPECT_EQ(cfg.resolved_dataset(), "c");
}

TEST(Config, RejectsBadValues) {
    PipelineConfig cfg;
    EXPECT_THROW(apply_setting(cfg, "k_voc", "1"), ConfigError);
    EXPECT_THROW(apply_setting(cfg, "c", "0"), ConfigError);
    EXPECT_THROW(apply_setting(cfg, "restarts", "x"), ConfigError);
    EXPECT_THROW(apply_setting(cfg, "doc_algorithm", "dbscan"), ConfigError);
    EXPECT_THROW(apply_setting(cfg, "colour", "red"), ConfigError);
    std::istringstream in("no equals sign\n");
    EXPECT_THROW(parse_config(in), ConfigError);
    EXPECT_THROW(validate_paths(cfg), ConfigError);
}

TEST(Config, ResolvedSettingsRoundtrip) {
    PipelineConfig cfg;
    cfg.corpus = "/x/c.tsv";
    cfg.k_voc = 12;
    cfg.cd_scoring = CdScoring::count_times_mean;
    cfg.ward_storage = WardStorage::on_demand;
    cfg.tol = 2.5e-7;
    PipelineConfig back;
    for (const auto& [k, v] : resolved_settings(cfg)) apply_setting(back, k, v);
    EXPECT_EQ(resolved_settings(back), resolved_settings(cfg));
    EXPECT_EQ(std::size(kConfigKeys), resolved_settings(cfg).size());
}

TEST(Pipeline, LabeledHappyPath) {
    auto f = make_fixture("happy");
    auto r = run_pipeline(f.cfg);
    EXPECT_TRUE(fs::exists(r.dir / run_files::metrics));
    auto rows = read_metrics_csv(r.dir / run_files::metrics);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_TRUE(rows[0].silhouette && rows[0].purity && rows[0].ari);
    EXPECT_GE(*rows[0].purity, 0.9);
    EXPECT_EQ(rows[0].k_voc, 3u);
    EXPECT_EQ(rows[0].c, 3u);
    EXPECT_LT(r.k_voc, r.vocabulary_size);
    auto md = RunMetadata::read(r.dir / run_files::metadata);
    EXPECT_EQ(md.get("status"), "ok");
    EXPECT_EQ(md.get("seed.doc_clustering"), "9");
    EXPECT_EQ(md.get("decision.occurrence_reduction"), "mean");
    EXPECT_TRUE(md.get("hash.labels.csv"));
    EXPECT_FALSE(fs::exists(r.dir / run_files::failed));
    for (auto name : {run_files::documents, run_files::vocabulary, run_files::tfidf, run_files::embeddings,
                      run_files::concepts, run_files::cd_matrix, run_files::labels, run_files::report})
        EXPECT_TRUE(fs::exists(r.dir / name)) << name;
}

TEST(Pipeline, UnlabeledCorpusReportsSilhouetteOnly) {
    auto f = make_fixture("unlabeled", false);
    auto r = run_pipeline(f.cfg);
    EXPECT_TRUE(r.metrics.silhouette);
    EXPECT_FALSE(r.metrics.purity);
    EXPECT_FALSE(r.metrics.ari);
    EXPECT_NE(csv::read_file(r.dir / run_files::metrics).find(",n/a,n/a,"), std::string::npos);
    EXPECT_FALSE(fs::exists(r.dir / run_files::truth));
}

TEST(Pipeline, UnlabeledWithoutCIsConfigError) {
    auto f = make_fixture("unlabeled_noc", false);
    f.cfg.c.reset();
    EXPECT_THROW(run_pipeline(f.cfg), ConfigError);
    EXPECT_TRUE(fs::exists(f.cfg.output / run_files::failed));
}

TEST(Pipeline, ElbowRecordsChoice) {
    auto f = make_fixture("elbow");
    f.cfg.k_voc.reset();
    f.cfg.elbow_min = 2;
    f.cfg.elbow_max = 12;
    f.cfg.elbow_step = 1;
    auto r = run_pipeline(f.cfg);
    ASSERT_TRUE(r.elbow);
    EXPECT_TRUE(fs::exists(r.dir / run_files::elbow));
    EXPECT_EQ(r.metadata.get("elbow.chosen_k"), std::to_string(r.elbow->chosen_k));
    EXPECT_EQ(r.k_voc, r.elbow->chosen_k);
    EXPECT_EQ(r.elbow->chosen_k, 3u);
}

TEST(Pipeline, DefaultCIsCategoryCount) {
    auto f = make_fixture("default_c");
    f.cfg.c.reset();
    auto r = run_pipeline(f.cfg);
    EXPECT_EQ(r.metrics.c, 3u);
    EXPECT_EQ(r.metadata.get("resolved.c"), "3");
}

TEST(Pipeline, RepeatedRunsAreByteIdentical) {
    auto f = make_fixture("repeat");
    f.cfg.k_voc.reset();
    f.cfg.elbow_min = 2;
    f.cfg.elbow_max = 8;
    f.cfg.elbow_step = 1;
    run_pipeline(f.cfg);
    auto first = csv::read_file(f.cfg.output / run_files::metrics);
    auto first_labels = csv::read_file(f.cfg.output / run_files::labels);
    set_thread_count(3);
    run_pipeline(f.cfg);
    set_thread_count(0);
    EXPECT_EQ(csv::read_file(f.cfg.output / run_files::metrics), first);
    EXPECT_EQ(csv::read_file(f.cfg.output / run_files::labels), first_labels);
}

TEST(Pipeline, FailureLeavesMarker) {
    auto f = make_fixture("fail");
    f.cfg.k_voc = 100000;
    try {
        run_pipeline(f.cfg);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("[word_clustering]"), std::string::npos);
    }
    EXPECT_TRUE(fs::exists(f.cfg.output / run_files::failed));
    EXPECT_TRUE(fs::exists(f.cfg.output / run_files::vocabulary));
    EXPECT_EQ(RunMetadata::read(f.cfg.output / run_files::metadata).get("status"), "failed");
}

TEST(Pipeline, DataErrorsAreTagged) {
    auto f = make_fixture("bad_emb");
    std::ofstream(f.cfg.embeddings, std::ios::binary) << "XEMB garbage";
    try {
        run_pipeline(f.cfg);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("[embeddings]"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("bad magic"), std::string::npos);
    }
}

TEST(Slices, ClusterDocsReproducesFullRun) {
    auto f = make_fixture("slice_docs");
    auto r = run_pipeline(f.cfg);
    auto cfg = load_run_config(r.dir);
    auto out = f.dir / "slice";
    run_cluster_docs_stage(cfg, r.dir, out);
    EXPECT_EQ(csv::read_file(out / run_files::labels), csv::read_file(r.dir / run_files::labels));
    EXPECT_EQ(csv::read_file(out / run_files::metrics), csv::read_file(r.dir / run_files::metrics));
}

TEST(Slices, SwitchingAlgorithmTouchesOnlyDocOutputs) {
    auto f = make_fixture("slice_switch");
    auto r = run_pipeline(f.cfg);
    auto cd_before = csv::read_file(r.dir / run_files::cd_matrix);
    auto cfg = load_run_config(r.dir);
    cfg.doc_algorithm = DocAlgorithm::agglomerative;
    cfg.run_name.clear();
    auto m = run_cluster_docs_stage(cfg, r.dir, r.dir);
    EXPECT_EQ(csv::read_file(r.dir / run_files::cd_matrix), cd_before);
    EXPECT_TRUE(fs::exists(r.dir / run_files::dendrogram));
    EXPECT_EQ(m.run, "weclust_agglomerative");
    EXPECT_GE(*m.purity, 0.9);
}

TEST(Slices, ElbowRerunIsDeterministic) {
    auto f = make_fixture("slice_elbow");
    f.cfg.k_voc.reset();
    f.cfg.elbow_min = 2;
    f.cfg.elbow_max = 10;
    f.cfg.elbow_step = 2;
    auto r = run_pipeline(f.cfg);
    auto curve = run_elbow_stage(load_run_config(r.dir), r.dir, f.dir / "elbow_again");
    EXPECT_EQ(curve.chosen_k, r.elbow->chosen_k);
    EXPECT_EQ(csv::read_file(f.dir / "elbow_again" / run_files::elbow), csv::read_file(r.dir / run_files::elbow));
}

TEST(Slices, EvaluateMatchesFullRun) {
    auto f = make_fixture("slice_eval");
    f.cfg.doc_algorithm = DocAlgorithm::agglomerative;
    auto r = run_pipeline(f.cfg);
    auto e = evaluate_files(r.dir / run_files::labels, r.dir / run_files::truth, r.dir / run_files::cd_matrix);
    EXPECT_EQ(e.silhouette, r.metrics.silhouette);
    EXPECT_EQ(e.purity, r.metrics.purity);
    EXPECT_EQ(e.ari, r.metrics.ari);
}

TEST(Slices, MissingInputsAreDataErrors) {
    auto dir = fs::temp_directory_path() / "weclust_pipe_missing";
    fs::remove_all(dir);
    fs::create_directories(dir);
    EXPECT_THROW(load_run_config(dir), DataError);
    EXPECT_THROW(run_cluster_docs_stage(PipelineConfig{}, dir, dir), DataError);
    EXPECT_THROW(evaluate_files(dir / "labels.csv", std::nullopt, std::nullopt), DataError);
}
