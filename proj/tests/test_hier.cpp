#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "weclust/hier.hpp"

using namespace weclust;

namespace {

Matrix line(std::initializer_list<double> xs) {
    Matrix m(xs.size(), 1);
    std::size_t i = 0;
    for (double x : xs) m(i++, 0) = x;
    return m;
}

void expect_matches_oracle(const Dendrogram& got, const std::vector<oracle::WardStep>& want, const std::string& ctx) {
    ASSERT_EQ(got.merges.size(), want.size()) << ctx;
    for (std::size_t i = 0; i < want.size(); ++i) {
        EXPECT_EQ(got.merges[i].a, want[i].a) << ctx << " step " << i;
        EXPECT_EQ(got.merges[i].b, want[i].b) << ctx << " step " << i;
        EXPECT_EQ(got.merges[i].size, want[i].size) << ctx << " step " << i;
        EXPECT_NEAR(got.merges[i].cost, want[i].cost, 1e-9) << ctx << " step " << i;
    }
}

// Canonical form of a partition: the sorted list of member sets.
std::set<std::set<std::size_t>> blocks(const std::vector<std::size_t>& labels, const std::vector<std::size_t>& id_of_pos) {
    std::map<std::size_t, std::set<std::size_t>> m;
    for (std::size_t i = 0; i < labels.size(); ++i) m[labels[i]].insert(id_of_pos[i]);
    std::set<std::set<std::size_t>> out;
    for (auto& [l, s] : m) out.insert(s);
    return out;
}

}  // namespace

TEST(Ward, ThreePointExample) {
    for (auto storage : {WardStorage::matrix, WardStorage::on_demand}) {
        auto t = ward_cluster(line({0, 1, 10}), storage);
        ASSERT_EQ(t.merges.size(), 2u);
        EXPECT_EQ(t.merges[0], (Merge{0, 1, 0.5, 2}));
        EXPECT_EQ(t.merges[1].a, 2u);
        EXPECT_EQ(t.merges[1].b, 3u);
        EXPECT_NEAR(t.merges[1].cost, 546.0 / 9.0 - 0.5, 1e-12);
        EXPECT_NEAR(t.merges[1].cost, 60.1667, 1e-4);
        EXPECT_EQ(t.merges[1].size, 3u);
    }
}

TEST(Ward, IdenticalPoints) {
    auto t = ward_cluster(line({4, 4}));
    ASSERT_EQ(t.merges.size(), 1u);
    EXPECT_EQ(t.merges[0], (Merge{0, 1, 0.0, 2}));
}

TEST(Ward, NeedsTwoPoints) {
    EXPECT_THROW(ward_cluster(line({1})), DataError);
}

TEST(Ward, MatchesGreedyOracle) {
    std::mt19937_64 gen(2);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 2 + trial % 9, dim = 1 + trial % 3;
        auto x = oracle::uniform_points(n, dim, gen);
        auto want = oracle::greedy_ward(x);
        expect_matches_oracle(ward_cluster(x, WardStorage::matrix), want, "matrix trial " + std::to_string(trial));
        expect_matches_oracle(ward_cluster(x, WardStorage::on_demand), want, "on_demand trial " + std::to_string(trial));
    }
}

TEST(Ward, StorageModesAgreeOnLargerInputs) {
    std::mt19937_64 gen(3);
    auto x = oracle::uniform_points(300, 5, gen);
    auto a = ward_cluster(x, WardStorage::matrix), b = ward_cluster(x, WardStorage::on_demand);
    ASSERT_EQ(a.merges.size(), b.merges.size());
    for (std::size_t i = 0; i < a.merges.size(); ++i) {
        EXPECT_EQ(a.merges[i].a, b.merges[i].a);
        EXPECT_EQ(a.merges[i].b, b.merges[i].b);
        EXPECT_NEAR(a.merges[i].cost, b.merges[i].cost, 1e-9 * std::max(1.0, a.merges[i].cost));
    }
    auto automatic_small = ward_cluster(x, WardStorage::automatic, 0);
    EXPECT_EQ(automatic_small.merges.size(), b.merges.size());
}

TEST(Ward, TreeStructure) {
    std::mt19937_64 gen(4);
    for (int trial = 0; trial < 30; ++trial) {
        std::size_t n = 2 + gen() % 60;
        auto x = oracle::uniform_points(n, 3, gen);
        auto t = ward_cluster(x);
        ASSERT_EQ(t.merges.size(), n - 1);
        std::vector<int> used(2 * n - 1, 0);
        for (std::size_t i = 0; i < t.merges.size(); ++i) {
            const auto& m = t.merges[i];
            EXPECT_LT(m.a, m.b);
            EXPECT_LT(m.b, n + i);
            EXPECT_GE(m.cost, 0.0);
            ++used[m.a];
            ++used[m.b];
        }
        for (std::size_t id = 0; id + 1 < 2 * n - 1; ++id) EXPECT_EQ(used[id], 1) << "node " << id;
        EXPECT_EQ(t.merges.back().size, n);
    }
}

TEST(Ward, CostsSumToTotalSse) {
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 30; ++trial) {
        std::size_t n = 2 + gen() % 120;
        auto x = oracle::uniform_points(n, 4, gen, 10.0);
        auto t = ward_cluster(x);
        double sum = 0;
        for (const auto& m : t.merges) sum += m.cost;
        std::vector<int> zeros(n, 0);
        double total = oracle::sse(x, zeros, 1);
        EXPECT_NEAR(sum, total, 1e-6 * std::max(1.0, total));
    }
}

TEST(Ward, PermutationGivesSamePartitions) {
    std::mt19937_64 gen(6);
    for (int trial = 0; trial < 40; ++trial) {
        std::size_t n = 3 + gen() % 30;
        auto x = oracle::uniform_points(n, 2, gen);
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), gen);
        Matrix y(n, 2);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t d = 0; d < 2; ++d) y(i, d) = x(perm[i], d);
        auto tx = ward_cluster(x), ty = ward_cluster(y);
        std::vector<std::size_t> identity(n);
        std::iota(identity.begin(), identity.end(), 0);
        for (std::size_t c = 1; c <= n; ++c) EXPECT_EQ(blocks(cut(tx, c), identity), blocks(cut(ty, c), perm));
    }
}

TEST(Cut, Examples) {
    auto t = ward_cluster(line({0, 1, 10}));
    EXPECT_EQ(cut(t, 1), (std::vector<std::size_t>{0, 0, 0}));
    EXPECT_EQ(cut(t, 2), (std::vector<std::size_t>{0, 0, 1}));
    EXPECT_EQ(cut(t, 3), (std::vector<std::size_t>{0, 1, 2}));
    EXPECT_THROW(cut(t, 0), ConfigError);
    EXPECT_THROW(cut(t, 4), ConfigError);
}

TEST(Cut, LabelsNumberedBySmallestLeaf) {
    auto t = ward_cluster(line({10, 0, 11, 1, 20}));
    auto l = cut(t, 3);
    EXPECT_EQ(l, (std::vector<std::size_t>{0, 1, 0, 1, 2}));
}

TEST(Cut, ClusterCountsMatch) {
    std::mt19937_64 gen(7);
    auto x = oracle::uniform_points(40, 2, gen);
    auto t = ward_cluster(x);
    for (std::size_t c = 1; c <= 40; ++c) {
        auto l = cut(t, c);
        std::set<std::size_t> distinct(l.begin(), l.end());
        EXPECT_EQ(distinct.size(), c);
        EXPECT_EQ(*distinct.rbegin(), c - 1);
    }
}

TEST(Dendrogram, CsvDump) {
    std::ostringstream out;
    write_dendrogram_csv(ward_cluster(line({0, 1, 10})), out);
    EXPECT_EQ(out.str().substr(0, 31), "step,a,b,cost,size\n0,0,1,0.5,2\n");
}
