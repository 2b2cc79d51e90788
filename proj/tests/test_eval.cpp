#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "weclust/eval.hpp"

using namespace weclust;

namespace {

LabelVector lv(std::vector<int> v) { return LabelVector::from(v); }

Matrix line(std::initializer_list<double> xs) {
    Matrix m(xs.size(), 1);
    std::size_t i = 0;
    for (double x : xs) m(i++, 0) = x;
    return m;
}

std::vector<int> random_labels(std::size_t n, int k, std::mt19937_64& gen) {
    std::vector<int> v(n);
    for (auto& x : v) x = static_cast<int>(gen() % k);
    return v;
}

std::vector<int> relabel(const std::vector<int>& v, std::mt19937_64& gen) {
    std::vector<int> map(10);
    std::iota(map.begin(), map.end(), 0);
    std::shuffle(map.begin(), map.end(), gen);
    std::vector<int> out;
    for (int x : v) out.push_back(map[x] * 7 + 3);
    return out;
}

EvalReport row(std::string run, std::string ds, std::optional<double> s, std::optional<double> p = std::nullopt,
               std::optional<double> a = std::nullopt) {
    EvalReport r;
    r.run = std::move(run);
    r.dataset = std::move(ds);
    r.silhouette = s;
    r.purity = p;
    r.ari = a;
    return r;
}

}  // namespace

TEST(Labels, DenseInFirstAppearanceOrder) {
    auto l = LabelVector::from(std::vector<std::string>{"b", "a", "b", "c"});
    EXPECT_EQ(l.labels, (std::vector<std::size_t>{0, 1, 0, 2}));
    EXPECT_EQ(l.count, 3u);
}

TEST(Silhouette, TwoPairs) {
    auto x = line({0, 0.1, 10, 10.1});
    auto labels = lv({0, 0, 1, 1});
    auto s = silhouette_samples(x, labels);
    EXPECT_NEAR(s[0], (10.05 - 0.1) / 10.05, 1e-12);
    EXPECT_NEAR(s[0], 0.99005, 1e-5);
    EXPECT_NEAR(silhouette(x, labels), oracle::silhouette_direct(x, {0, 0, 1, 1}), 1e-12);
    EXPECT_NEAR(silhouette(x, labels), 0.99, 1e-4);
}

TEST(Silhouette, SingletonsScoreZero) {
    EXPECT_EQ(silhouette(line({0, 5}), lv({0, 1})), 0.0);
}

TEST(Silhouette, OneClusterIsError) {
    EXPECT_THROW(silhouette(line({0, 5, 6}), lv({0, 0, 0})), DataError);
}

TEST(Silhouette, MatchesDirectDefinition) {
    std::mt19937_64 gen(1);
    for (int trial = 0; trial < 40; ++trial) {
        std::size_t n = 2 + gen() % 199;
        int k = 2 + static_cast<int>(gen() % 5);
        auto x = oracle::uniform_points(n, 1 + gen() % 4, gen);
        auto labels = random_labels(n, k, gen);
        labels[0] = 0;
        labels[1] = 1;
        EXPECT_NEAR(silhouette(x, lv(labels)), oracle::silhouette_direct(x, labels), 1e-9);
    }
}

TEST(Silhouette, TranslationAndScaleInvariant) {
    std::mt19937_64 gen(2);
    for (int trial = 0; trial < 30; ++trial) {
        auto x = oracle::uniform_points(60, 3, gen);
        auto labels = lv(random_labels(60, 3, gen));
        double base = silhouette(x, labels);
        Matrix y = x;
        for (std::size_t i = 0; i < y.rows(); ++i)
            for (std::size_t d = 0; d < 3; ++d) y(i, d) = 4.5 * y(i, d) + (d + 1) * 17.0;
        EXPECT_NEAR(silhouette(y, labels), base, 1e-9);
    }
}

TEST(Silhouette, ThreadCountDoesNotMatter) {
    std::mt19937_64 gen(3);
    auto x = oracle::uniform_points(500, 4, gen);
    auto labels = lv(random_labels(500, 4, gen));
    set_thread_count(1);
    double a = silhouette(x, labels);
    set_thread_count(5);
    double b = silhouette(x, labels);
    set_thread_count(0);
    EXPECT_EQ(a, b);
}

TEST(Purity, Examples) {
    EXPECT_EQ(purity(lv({0, 0, 1, 1}), lv({0, 0, 1, 1})), 1.0);
    EXPECT_DOUBLE_EQ(purity(lv({0, 0, 0, 1, 1}), lv({0, 0, 1, 1, 1})), 0.8);
    EXPECT_EQ(purity(lv({0, 1, 2, 3, 4}), lv({0, 0, 1, 1, 0})), 1.0);
    EXPECT_THROW(purity(lv({0, 1}), lv({0})), DataError);
}

TEST(Purity, MatchesCountOracle) {
    std::mt19937_64 gen(4);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n = 1 + gen() % 80;
        auto p = random_labels(n, 1 + gen() % 6, gen), t = random_labels(n, 1 + gen() % 6, gen);
        EXPECT_EQ(purity(lv(p), lv(t)), oracle::purity_count(p, t));
    }
}

TEST(Purity, RefinementIsPure) {
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 50; ++trial) {
        auto t = random_labels(40, 4, gen);
        std::vector<int> p;
        for (int x : t) p.push_back(x * 3 + static_cast<int>(gen() % 3));
        EXPECT_EQ(purity(lv(p), lv(t)), 1.0);
    }
}

TEST(Ari, Examples) {
    EXPECT_EQ(ari(lv({0, 0, 1, 1}), lv({0, 0, 1, 1})), 1.0);
    EXPECT_DOUBLE_EQ(ari(lv({0, 1, 0, 1}), lv({0, 0, 1, 1})), -0.5);
    EXPECT_EQ(ari(lv({0, 0, 0}), lv({0, 0, 0})), 1.0);
    EXPECT_EQ(ari(lv({0, 1, 2}), lv({0, 1, 2})), 1.0);
    EXPECT_THROW(ari(lv({0}), lv({0})), DataError);
    EXPECT_THROW(ari(lv({0, 1}), lv({0, 1, 1})), DataError);
}

TEST(Ari, MatchesPairEnumerationForSmallN) {
    for (std::size_t n = 2; n <= 6; ++n) {
        auto parts = oracle::set_partitions(n, 3);
        for (const auto& p : parts)
            for (const auto& t : parts) ASSERT_EQ(ari(lv(p), lv(t)), oracle::ari_pairs(p, t));
    }
}

TEST(Ari, SymmetricAndRelabelInvariant) {
    std::mt19937_64 gen(6);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 2 + gen() % 100;
        auto p = random_labels(n, 1 + gen() % 5, gen), t = random_labels(n, 1 + gen() % 5, gen);
        double a = ari(lv(p), lv(t));
        EXPECT_EQ(a, ari(lv(t), lv(p)));
        EXPECT_EQ(a, ari(lv(relabel(p, gen)), lv(t)));
        EXPECT_EQ(purity(lv(p), lv(t)), purity(lv(relabel(p, gen)), lv(relabel(t, gen))));
        EXPECT_GE(a, -1.0);
        EXPECT_LE(a, 1.0);
    }
}

TEST(Ari, RandomLabelsAverageNearZero) {
    std::mt19937_64 gen(7);
    auto truth = random_labels(200, 4, gen);
    double sum = 0;
    for (int s = 0; s < 100; ++s) sum += ari(lv(random_labels(200, 4, gen)), lv(truth));
    EXPECT_NEAR(sum / 100, 0.0, 0.05);
}

TEST(Ari, LargeInputsDoNotOverflow) {
    std::vector<int> a(200000), b(200000);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = static_cast<int>(i % 3);
        b[i] = static_cast<int>(i % 3);
    }
    EXPECT_EQ(ari(lv(a), lv(b)), 1.0);
}

TEST(Report, PercentChange) {
    EXPECT_NEAR(*percent_change(0.45, 0.65), 44.444444, 1e-5);
    EXPECT_EQ(*percent_change(0.3, 0.3), 0.0);
    EXPECT_FALSE(percent_change(0.0, 0.5));
}

TEST(Report, MetricsCsvRoundtrip) {
    EvalReport r = row("k++", "Data, one", 0.5, std::nullopt, -0.25);
    r.k_voc = 30;
    r.c = 4;
    r.seed = 7;
    std::ostringstream out;
    write_metrics_csv({r}, out);
    EXPECT_EQ(out.str(), "run,dataset,silhouette,purity,ari,k_voc,c,seed\nk++,\"Data, one\",0.5,n/a,-0.25,30,4,7\n");
    std::istringstream in(out.str());
    auto back = read_metrics_csv(in);
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(back[0].dataset, "Data, one");
    EXPECT_FALSE(back[0].purity);
    EXPECT_EQ(back[0].ari, -0.25);
    EXPECT_EQ(back[0].k_voc, 30u);
}

TEST(Report, IdenticalRunsGiveZeroChange) {
    std::vector<EvalReport> runs = {row("a", "x", 0.4, 0.9, 0.8), row("b", "x", 0.4, 0.9, 0.8)};
    for (const auto& c : percentage_changes(runs, "a", "b")) EXPECT_EQ(*c.pct, 0.0);
}

TEST(Report, MissingRunIsError) {
    std::vector<EvalReport> runs = {row("a", "x", 0.4)};
    EXPECT_THROW(percentage_changes(runs, "a", "zzz"), DataError);
    EXPECT_THROW(percentage_changes(runs, "zzz", "a"), DataError);
}

TEST(Report, SummaryIsMedianOfDatasetChanges) {
    std::vector<EvalReport> runs;
    std::vector<std::pair<double, double>> vals = {{1, 2}, {1, 1.1}, {2, 1}};
    for (std::size_t i = 0; i < vals.size(); ++i) {
        runs.push_back(row("base", "d" + std::to_string(i), vals[i].first));
        runs.push_back(row("prop", "d" + std::to_string(i), vals[i].second));
    }
    auto s = summarize_changes(percentage_changes(runs, "base", "prop"));
    EXPECT_EQ(s[0].metric, Metric::silhouette);
    EXPECT_EQ(s[0].datasets, 3u);
    EXPECT_NEAR(*s[0].median, 10.0, 1e-9);
    EXPECT_NEAR(*s[0].min, -50.0, 1e-9);
    EXPECT_EQ(s[0].min_dataset, "d2");
    EXPECT_NEAR(*s[0].max, 100.0, 1e-9);
    EXPECT_FALSE(s[1].median);
}

TEST(Report, FilesWritten) {
    auto dir = std::filesystem::temp_directory_path() / "weclust_test_report";
    std::filesystem::remove_all(dir);
    std::vector<EvalReport> runs = {row("a", "x", 0.45), row("b", "x", 0.65)};
    auto only = write_report(runs, dir / "single");
    EXPECT_TRUE(std::filesystem::exists(only.metrics));
    EXPECT_TRUE(std::filesystem::exists(only.table));
    EXPECT_FALSE(only.percentages);
    EXPECT_FALSE(std::filesystem::exists(dir / "single" / "pct_change.csv"));

    auto both = write_report(runs, dir / "both", "a", "b");
    ASSERT_TRUE(both.percentages);
    auto pct = csv::read_file(*both.percentages);
    EXPECT_NE(pct.find("x,silhouette,0.45,0.65,44.44"), std::string::npos);
    EXPECT_NE(pct.find("x,purity,n/a,n/a,n/a"), std::string::npos);
    EXPECT_THROW(write_report(runs, dir / "bad", std::nullopt, "b"), DataError);
}
