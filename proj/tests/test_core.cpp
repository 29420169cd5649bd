#include "conceptkernel/core.hpp"
#include "conceptkernel/rng.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace ck;

TEST(ConceptSet, SortedUniqueAndSetAlgebra) {
    const ConceptSet a{5, 1, 3, 1};
    EXPECT_EQ(a.indices(), (std::vector<std::size_t>{1, 3, 5}));
    const ConceptSet b{3, 4};
    EXPECT_EQ(a.unite(b), (ConceptSet{1, 3, 4, 5}));
    EXPECT_EQ(a.minus(b), (ConceptSet{1, 5}));
    EXPECT_EQ(a.intersect(b), (ConceptSet{3}));
    EXPECT_TRUE((ConceptSet{1, 5}).is_subset_of(a));
    EXPECT_FALSE(b.is_subset_of(a));
    EXPECT_TRUE(a.contains(3));
    EXPECT_FALSE(a.contains(4));
    EXPECT_EQ(a.max_index_plus_one(), 6u);
    EXPECT_EQ(ConceptSet{}.max_index_plus_one(), 0u);
}

TEST(Rng, SeededStreamsRepeat) {
    Rng a(11), b(11), c(12);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        EXPECT_EQ(x, b.next_u64());
        differs |= x != c.next_u64();
    }
    EXPECT_TRUE(differs);
}

TEST(Rng, UniformAndIndexRanges) {
    Rng rng(3);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        ASSERT_LT(rng.index(7), 7u);
    }
}

TEST(Rng, NormalMoments) {
    Rng rng(4);
    const int n = 200000;
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sq += x * x;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.01);
    EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(Rng, DeriveSeedSeparatesStreams) {
    EXPECT_EQ(derive_seed(7, "a"), derive_seed(7, "a"));
    EXPECT_NE(derive_seed(7, "a"), derive_seed(7, "b"));
    EXPECT_NE(derive_seed(7, "a"), derive_seed(8, "a"));
}

TEST(Rng, ShuffleIsAPermutation) {
    Rng rng(5);
    std::vector<int> v(50);
    for (int i = 0; i < 50; ++i) v[i] = i;
    rng.shuffle(v);
    EXPECT_EQ(std::set<int>(v.begin(), v.end()).size(), 50u);
}

TEST(Quantize, RoundsThroughFloat) {
    Vector v(2);
    v << 0.1, 1.0;
    const auto q = quantize_f32(v);
    EXPECT_EQ(q[0], static_cast<double>(0.1f));
    EXPECT_EQ(q[1], 1.0);
    EXPECT_EQ(quantize_f32(q), q);
}
