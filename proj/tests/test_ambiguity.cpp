#include "conceptkernel/ambiguity.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace ck;

namespace {

std::vector<LabeledValue> two_gaussians(double amb_mean, double una_mean, double sd, std::size_t each, Rng& rng) {
    std::vector<LabeledValue> out;
    for (std::size_t i = 0; i < each; ++i) {
        out.push_back({rng.normal(amb_mean, sd), Label::ambiguous});
        out.push_back({rng.normal(una_mean, sd), Label::unambiguous});
    }
    return out;
}

std::vector<Prediction> predict(const std::vector<LabeledValue>& values, const ThresholdModel& model) {
    std::vector<Prediction> out;
    for (const auto& v : values) out.push_back({v.value, classify(v.value, model), v.label});
    return out;
}

}  // namespace

TEST(TripletStats, MeanAndRatios) {
    Rng rng(1);
    PathStates states;
    for (int j = 0; j < 3; ++j) states.snapshots.push_back(oracle::random_params(8, 4, rng, 1.0));
    const auto mask = ConceptMask::all(8);
    Vector q, a, b;
    do {
        q = oracle::random_vector(4, rng);
        a = oracle::random_vector(4, rng);
        b = oracle::random_vector(4, rng);
    } while (!(path_kernel(q, q, states, mask) > 0 && path_kernel(a, a, states, mask) > 0 &&
               path_kernel(b, b, states, mask) > 0));
    const auto s = triplet_stats(q, a, b, states, mask);
    EXPECT_DOUBLE_EQ(s.mean_d1, (s.d_q_i1 + s.d_q_i2 + s.d_i1_i2) / 3.0);
    EXPECT_EQ(s.d_q_i1, distance_d1(q, a, states, mask));
    EXPECT_EQ(s.d2_i1_i2, distance_d2(a, b, states, mask));
    ASSERT_TRUE(s.ratios_defined());
    EXPECT_DOUBLE_EQ(*s.ratio_1, s.d2_q_i1 / s.d2_i1_i2);
    EXPECT_GE(s.d_q_i1, -1e-12);
    EXPECT_GE(s.d2_q_i2, 0.0);

    // identical interpretations leave the ratios undefined
    const auto same = triplet_stats(q, a, a, states, mask);
    EXPECT_FALSE(same.ratios_defined());
    EXPECT_NEAR(same.mean_d1, 2.0 * same.d_q_i1 / 3.0, 1e-12);
}

TEST(TripletStats, ValidatesIds) {
    ActivationCorpus corpus(2);
    for (const char* id : {"q", "a", "b"}) {
        SentenceRecord r;
        r.id = id;
        r.vector = Vector::Ones(2);
        corpus.add(r);
    }
    EXPECT_THROW((Triplet{"q", "q", "b", {}}.validate(corpus)), DataError);
    EXPECT_THROW((Triplet{"q", "a", "zz", {}}.validate(corpus)), Error);
    EXPECT_NO_THROW((Triplet{"q", "a", "b", {}}.validate(corpus)));
    EXPECT_EQ(label_from_string("ambiguous"), Label::ambiguous);
    EXPECT_THROW(label_from_string("maybe"), DataError);
}

TEST(Calibrate, SeparatedGaussiansCrossNearTheMiddle) {
    Rng rng(2);
    const auto values = two_gaussians(0.8, 0.2, 0.05, 200, rng);
    const auto model = calibrate(values);
    EXPECT_GT(model.threshold, 0.4);
    EXPECT_LT(model.threshold, 0.6);
    EXPECT_GT(model.threshold, model.unambiguous_mean);
    EXPECT_LT(model.threshold, model.ambiguous_mean);
    EXPECT_FALSE(model.fallback_midpoint);
    EXPECT_EQ(model.bin_edges.size(), kHistogramBins + 1);

    const auto report = evaluate(predict(values, model), model);
    EXPECT_GE(report.accuracy, 0.9);
    EXPECT_EQ(report.overlap_fraction, 0.0);
}

TEST(Calibrate, IdenticalClassesFallBackToMidpoint) {
    std::vector<LabeledValue> values;
    for (int i = 0; i < 10; ++i) {
        values.push_back({0.1 * i, Label::ambiguous});
        values.push_back({0.1 * i, Label::unambiguous});
    }
    const auto model = calibrate(values);
    EXPECT_TRUE(model.fallback_midpoint);
    EXPECT_DOUBLE_EQ(model.threshold, model.ambiguous_mean);
}

TEST(Calibrate, NeedsSamplesOfBothClasses) {
    std::vector<LabeledValue> values;
    for (int i = 0; i < 10; ++i) values.push_back({0.1 * i, Label::ambiguous});
    values.push_back({0.5, Label::unambiguous});
    EXPECT_THROW(calibrate(values), DataError);
}

TEST(Calibrate, ScaleCovariant) {
    Rng rng(3);
    const auto values = two_gaussians(0.6, 0.35, 0.1, 100, rng);
    const auto base = calibrate(values);
    auto scaled = values;
    for (auto& v : scaled) v.value *= 3.0;
    const auto model = calibrate(scaled);
    EXPECT_NEAR(model.threshold, 3.0 * base.threshold, 1e-9 * std::abs(base.threshold));
    for (std::size_t i = 0; i < values.size(); ++i) {
        EXPECT_EQ(classify(values[i].value, base), classify(scaled[i].value, model));
    }
}

TEST(Classify, TieGoesToUnambiguousAndRuleIsMonotone) {
    ThresholdModel m;
    m.threshold = 0.5;
    EXPECT_EQ(classify(0.5 + 1e-12, m), Label::ambiguous);
    EXPECT_EQ(classify(0.5, m), Label::unambiguous);
    EXPECT_EQ(classify(0.5 - 1e-12, m), Label::unambiguous);
    bool seen_ambiguous = false;
    for (int i = 0; i <= 100; ++i) {
        const bool amb = classify(0.01 * i, m) == Label::ambiguous;
        EXPECT_TRUE(amb || !seen_ambiguous);
        seen_ambiguous |= amb;
    }
}

TEST(Evaluate, AccuracyAndClassBreakdown) {
    ThresholdModel m;
    m.threshold = 0.5;
    m.bin_edges = equal_width_edges(0.0, 1.0, kHistogramBins);
    std::vector<Prediction> all_right;
    for (int i = 0; i < 10; ++i) {
        all_right.push_back({0.9, Label::ambiguous, Label::ambiguous});
        all_right.push_back({0.1, Label::unambiguous, Label::unambiguous});
    }
    EXPECT_EQ(evaluate(all_right, m).accuracy, 1.0);

    // interleaved: both classes spread over the same values
    std::vector<Prediction> mixed;
    for (int i = 0; i < 100; ++i) {
        const double v = 0.01 * i;
        mixed.push_back({v, classify(v, m), Label::ambiguous});
        mixed.push_back({v, classify(v, m), Label::unambiguous});
    }
    const auto r = evaluate(mixed, m);
    EXPECT_NEAR(r.accuracy, 0.5, 0.01);
    EXPECT_NEAR(r.overlap_fraction, 1.0, 1e-12);
    const double weighted = (r.ambiguous_accuracy * static_cast<double>(r.ambiguous_count) +
                             r.unambiguous_accuracy * static_cast<double>(r.unambiguous_count)) /
                            static_cast<double>(r.ambiguous_count + r.unambiguous_count);
    EXPECT_NEAR(weighted, r.accuracy, 1e-12);
    EXPECT_THROW(evaluate({}, m), DataError);
}

TEST(Baseline, CosineDistance) {
    Vector x(2), y(2);
    x << 1, 0;
    y << 0, 3;
    EXPECT_DOUBLE_EQ(baseline_cosine_distance(x, 2.0 * x), 0.0);
    EXPECT_DOUBLE_EQ(baseline_cosine_distance(x, y), 1.0);
    EXPECT_DOUBLE_EQ(baseline_cosine_distance(x, -x), 2.0);
    EXPECT_THROW(baseline_cosine_distance(x, Vector::Zero(2)), ArgumentError);
}
