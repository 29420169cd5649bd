#include "conceptkernel/retrieval.hpp"
#include "conceptkernel/synthetic.hpp"

#include <gtest/gtest.h>

using namespace ck;

namespace {

ConceptActivations acts(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return {v};
}

Vector onehots(std::size_t n, std::initializer_list<std::size_t> ids) {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(n));
    for (auto i : ids) v[static_cast<Eigen::Index>(i)] = 1.0;
    return v;
}

EmbeddingProvider no_text() {
    return [](const std::string&) -> Vector { throw std::logic_error("unexpected embedding call"); };
}

ApiDoc doc(const std::string& id, Vector v) {
    ApiDoc d;
    d.id = id;
    d.domain = "dom";
    d.text = "text";
    d.vector = std::move(v);
    return d;
}

std::size_t rank_of(const RankOutcome& out, const std::string& id) {
    for (std::size_t r = 0; r < out.ranking.size(); ++r) {
        if (out.ranking[r].id == id) return r;
    }
    return out.ranking.size();
}

}  // namespace

TEST(IndexCorpus, ConceptsFromActivationsAndIdempotent) {
    const auto sae = synth::identity_sae(10);
    const auto a = index_corpus({doc("a", onehots(10, {3, 7}))}, sae, no_text(), 0.0);
    EXPECT_EQ(a.docs[0].concepts, (ConceptSet{3, 7}));
    const auto b = index_corpus(a.docs, sae, no_text(), 0.0);
    EXPECT_EQ(b.docs[0].concepts, a.docs[0].concepts);

    EXPECT_THROW(index_corpus({doc("a", onehots(10, {1})), doc("a", onehots(10, {2}))}, sae, no_text(), 0.0),
                 DataError);
    ApiDoc empty;
    empty.id = "e";
    empty.text = "   ";
    EXPECT_THROW(index_corpus({empty}, sae, no_text(), 0.0), DataError);
    EXPECT_THROW(index_corpus({}, sae, no_text(), 0.0), DataError);
}

TEST(IndexCorpus, EmbedsTextWhenNoVectorIsGiven) {
    const auto sae = synth::identity_sae(4);
    ApiDoc d;
    d.id = "t";
    d.text = "hello";
    const auto c = index_corpus({d}, sae, [](const std::string&) { return onehots(4, {2}); }, 0.0);
    EXPECT_EQ(c.docs[0].concepts, (ConceptSet{2}));
}

TEST(TopFraction, Examples) {
    const auto f = acts({0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 0.0});
    EXPECT_EQ(top_fraction(f, 0.5), (ConceptSet{5, 6, 7, 8, 9}));
    EXPECT_EQ(top_fraction(f, 1.0).size(), 10u);
    EXPECT_EQ(top_fraction(acts({0.9, 0.9, 0.1}), 0.34), (ConceptSet{0, 1}));
    EXPECT_EQ(top_fraction(acts({0.5, 0.9, 0.5}), 0.5), (ConceptSet{0, 1}));
    EXPECT_TRUE(top_fraction(acts({0, 0}), 0.5).empty());
    EXPECT_THROW(top_fraction(f, 0.0), ArgumentError);
    EXPECT_THROW(top_fraction(f, 1.5), ArgumentError);
}

TEST(TopFraction, MonotoneInRho) {
    Rng rng(1);
    for (int t = 0; t < 50; ++t) {
        ConceptActivations f{Vector::Zero(20)};
        for (auto& x : f.values) x = rng.uniform() < 0.5 ? 0.0 : std::round(rng.uniform() * 5) / 5;
        double prev = 0.05;
        for (double rho : {0.1, 0.2, 0.3, 0.5, 0.8, 1.0}) {
            EXPECT_TRUE(top_fraction(f, prev).is_subset_of(top_fraction(f, rho)));
            prev = rho;
        }
    }
}

TEST(UnionJoint, Examples) {
    EXPECT_EQ(union_joint_score({1, 2}, {}, {1, 2}), 1.0);
    EXPECT_EQ(union_joint_score({1}, {2}, {1, 2}), 1.0);
    EXPECT_EQ(union_joint_score({1}, {}, {2}), 0.0);
    EXPECT_EQ(union_joint_score({1, 2, 3}, {}, {2, 3, 4}), 0.5);
    EXPECT_EQ(union_joint_score({}, {}, {}), 0.0);
    EXPECT_EQ(union_joint_score({1, 2, 3}, {}, {2, 3, 4}, SetSimilarity::overlap), 2.0 / 3.0);
}

TEST(Sigmoid, StrictlyInsideUnitInterval) {
    for (double t : {-1e6, -800.0, -40.0, 0.0, 40.0, 800.0, 1e6}) {
        EXPECT_GT(sigmoid(t), 0.0);
        EXPECT_LT(sigmoid(t), 1.0);
    }
    EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
}

TEST(Boosting, SeparableLabelsHalveTheLoss) {
    Rng rng(2);
    std::vector<Vector> x;
    std::vector<int> y;
    for (int i = 0; i < 100; ++i) {
        Vector v(3);
        v << rng.uniform(), rng.uniform(), rng.uniform();
        y.push_back(v[1] > 0.4);
        x.push_back(v);
    }
    BoostConfig cfg;
    BoostTrace trace;
    const auto model = fit_boosted_stumps(x, y, 0, cfg, &trace);
    ASSERT_EQ(model.stumps.size(), 50u);
    ASSERT_EQ(trace.loss.size(), 51u);
    EXPECT_LE(trace.loss.back(), 0.5 * trace.loss.front());
    for (std::size_t t = 1; t < trace.loss.size(); ++t) EXPECT_LE(trace.loss[t], trace.loss[t - 1] + 1e-12);
    EXPECT_EQ(model.stumps.front().feature, 1u);

    const auto again = fit_boosted_stumps(x, y, 0, cfg);
    EXPECT_EQ(again.stumps, model.stumps);
    EXPECT_EQ(again.bias, model.bias);
}

TEST(Boosting, AllPositiveLabelsFollowThePrior) {
    std::vector<Vector> x{onehots(2, {0}), onehots(2, {1}), onehots(2, {})};
    const auto model = fit_boosted_stumps(x, {1, 1, 1}, 0, BoostConfig{});
    for (const auto& v : x) EXPECT_GT(model.probability(v), 0.5);
    EXPECT_GT(model.probability(onehots(2, {0, 1})), 0.5);
}

TEST(Boosting, RejectsBadConfig) {
    BoostConfig cfg;
    cfg.rounds = 0;
    EXPECT_THROW(cfg.validate(), ArgumentError);
    cfg = {};
    cfg.eta = 0.0;
    EXPECT_THROW(cfg.validate(), ArgumentError);
    EXPECT_THROW(fit_boosted_stumps({}, {}, 0, BoostConfig{}), ArgumentError);
}

TEST(PredictMissing, EmptySetsAndSaturatedBias) {
    const auto f = acts({0.0, 0.7, 0.0});
    EXPECT_TRUE(predict_missing(f, PredictorSet{}).empty());
    PredictorSet set;
    BoostedPredictor p;
    p.target_concept = 2;
    p.bias = 10.0;
    set.predictors.push_back(p);
    EXPECT_EQ(predict_missing(f, set), (ConceptSet{2}));
    set.predictors[0].target_concept = 1;
    EXPECT_TRUE(predict_missing(f, set).empty());
}

TEST(TrainPredictors, FlagsWhenNothingIsMissing) {
    const auto sae = synth::identity_sae(4);
    const auto corpus = index_corpus({doc("a", onehots(4, {0, 1}))}, sae, no_text(), 0.0);
    const std::vector<RetrievalExample> train{{"q", onehots(4, {0, 1, 3}), "a", "dom"}};
    const auto set = train_predictors(train, corpus, sae, BoostConfig{});
    EXPECT_TRUE(set.no_candidates);
    EXPECT_TRUE(set.predictors.empty());
    const std::vector<RetrievalExample> unknown{{"q", onehots(4, {0}), "zz", "dom"}};
    EXPECT_THROW(train_predictors(unknown, corpus, sae, BoostConfig{}), DataError);
}

TEST(Rank, SingleDocAndExactMatch) {
    const auto sae = synth::identity_sae(6);
    const auto one = index_corpus({doc("only", onehots(6, {5}))}, sae, no_text(), 0.0);
    const auto r = rank(onehots(6, {1}), one, sae, PredictorSet{}, RankConfig{1.0, 5, false});
    ASSERT_EQ(r.ranking.size(), 1u);
    EXPECT_EQ(r.ranking[0].id, "only");

    const auto two = index_corpus({doc("b", onehots(6, {1, 2})), doc("a", onehots(6, {1}))}, sae, no_text(), 0.0);
    const auto m = rank(onehots(6, {1, 2}), two, sae, PredictorSet{}, RankConfig{1.0, 5, false});
    EXPECT_EQ(m.ranking[0].id, "b");
    EXPECT_EQ(m.ranking[0].score, 1.0);
    EXPECT_EQ(rank(onehots(6, {1, 2}), two, sae, PredictorSet{}, RankConfig{1.0, 5, false}).ranking, m.ranking);

    // equal scores fall back to id order
    const auto tie = rank(onehots(6, {3}), two, sae, PredictorSet{}, RankConfig{1.0, 5, false});
    EXPECT_EQ(tie.ranking[0].id, "a");
}

TEST(EvaluateRetrieval, PerfectWhenQuestionsMatchDocs) {
    const auto sae = synth::identity_sae(6);
    auto corpus = index_corpus({doc("a", onehots(6, {0, 1})), doc("b", onehots(6, {2, 3}))}, sae, no_text(), 0.0);
    corpus.docs[1].domain = "other";
    const std::vector<RetrievalExample> test{{"q1", onehots(6, {0, 1}), "a", "dom"},
                                             {"q2", onehots(6, {2, 3}), "b", "other"}};
    const auto report = evaluate_retrieval(test, corpus, sae, PredictorSet{}, {1.0, 0.5});
    ASSERT_EQ(report.rows.size(), 2u);
    EXPECT_EQ(report.rows[0].rho, 1.0);
    EXPECT_EQ(report.rows[1].rho, 0.5);
    EXPECT_EQ(report.rows[0].api_top1, 1.0);
    EXPECT_EQ(report.rows[0].domain_top1, 1.0);
    const std::vector<RetrievalExample> bad{{"q", onehots(6, {0}), "zz", "dom"}};
    EXPECT_THROW(evaluate_retrieval(bad, corpus, sae, PredictorSet{}, {0.5}), DataError);
}

TEST(PlantedBench, PredictorsRecoverTheMissingConceptAndImproveRank) {
    const synth::RetrievalBenchConfig cfg;
    const auto bench = synth::make_retrieval_bench(cfg);
    const auto corpus = index_corpus(bench.docs, bench.sae, no_text(), 0.0);
    const auto predictors = train_predictors(bench.train, corpus, bench.sae, BoostConfig{});

    std::size_t planted = 0, recovered = 0, improved = 0;
    for (const auto& ex : bench.test) {
        const auto f = encode(bench.sae, ex.question);
        const auto missing = corpus.find(ex.gold_api)->concepts.minus(active_concepts(f, 0.0));
        const auto predicted = predict_missing(f, predictors);
        planted += missing.size();
        recovered += missing.intersect(predicted).size();

        const auto with = rank(ex.question, corpus, bench.sae, predictors, RankConfig{0.5, 0, true});
        const auto without = rank(ex.question, corpus, bench.sae, predictors, RankConfig{0.5, 0, false});
        const auto r_with = rank_of(with, ex.gold_api), r_without = rank_of(without, ex.gold_api);
        EXPECT_LE(r_with, r_without);
        if (missing.is_subset_of(predicted) && r_without > 0) {
            EXPECT_LT(r_with, r_without);
            ++improved;
        }
    }
    EXPECT_EQ(planted, bench.test.size());
    EXPECT_GE(static_cast<double>(recovered), 0.8 * static_cast<double>(planted));
    EXPECT_GT(improved, 0u);
}
