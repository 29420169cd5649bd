#pragma once

// Concept-based API retrieval: documents and questions are mapped to SAE
// concept sets, a boosted-stump predictor per target concept fills in concepts
// the question is missing, and documents are ranked by set similarity between
// (question concepts u predicted concepts) and the document's concepts.

#include "conceptkernel/activation_store.hpp"
#include "conceptkernel/core.hpp"
#include "conceptkernel/sae.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ck {

struct ApiDoc {
    std::string id;
    std::string domain;
    std::string call_template;
    std::string text;
    ConceptSet concepts;
    std::optional<Vector> vector;  // precomputed activation; embedded from text otherwise
};

struct RetrievalExample {
    std::string question_text;
    Vector question;  // activation vector of the question
    std::string gold_api;
    std::string gold_domain;
};

/// Maps text to an activation vector.
using EmbeddingProvider = std::function<Vector(const std::string&)>;

struct IndexedCorpus {
    std::vector<ApiDoc> docs;
    double threshold = 0.0;

    [[nodiscard]] const ApiDoc* find(const std::string& id) const {
        for (const auto& d : docs) {
            if (d.id == id) return &d;
        }
        return nullptr;
    }
};

inline Vector doc_vector(const ApiDoc& doc, const EmbeddingProvider& provider) {
    if (doc.vector) return *doc.vector;
    if (tokenize(doc.text).empty()) throw DataError("document '" + doc.id + "' has empty text");
    return provider(doc.text);
}

inline IndexedCorpus index_corpus(std::vector<ApiDoc> docs, const SaeParams& sae, const EmbeddingProvider& provider,
                                  double threshold) {
    if (docs.empty()) throw DataError("empty API corpus");
    std::map<std::string, int> seen;
    for (auto& d : docs) {
        if (!seen.emplace(d.id, 0).second) throw DataError("duplicate API id '" + d.id + "'");
        if (!d.vector && tokenize(d.text).empty()) throw DataError("document '" + d.id + "' has empty text");
        d.concepts = active_concepts(encode(sae, doc_vector(d, provider)), threshold);
    }
    return {std::move(docs), threshold};
}

// ---------------------------------------------------------------------------
// Boosted stumps
// ---------------------------------------------------------------------------

struct Stump {
    std::size_t feature = 0;
    double split = 0;  // x[feature] <= split goes left
    double left = 0;
    double right = 0;

    [[nodiscard]] double operator()(const Vector& x) const {
        return x[static_cast<Eigen::Index>(feature)] <= split ? left : right;
    }
    friend bool operator==(const Stump&, const Stump&) = default;
};

/// Kept strictly inside (0, 1) even where the double result would saturate.
inline double sigmoid(double t) {
    double p;
    if (t >= 0.0) {
        p = 1.0 / (1.0 + std::exp(-t));
    } else {
        const double e = std::exp(t);
        p = e / (1.0 + e);
    }
    return std::clamp(p, std::numeric_limits<double>::denorm_min(), std::nextafter(1.0, 0.0));
}

/// p(missing | x) = sigmoid(bias + sum_t eta * f_t(x)).
struct BoostedPredictor {
    std::size_t target_concept = 0;
    std::vector<Stump> stumps;
    double eta = 0.1;
    double bias = 0;

    [[nodiscard]] double margin(const Vector& x) const {
        double acc = bias;
        for (const auto& s : stumps) acc += eta * s(x);
        return acc;
    }
    [[nodiscard]] double probability(const Vector& x) const { return sigmoid(margin(x)); }
};

struct BoostConfig {
    std::size_t rounds = 50;  // T
    double eta = 0.1;
    std::size_t max_targets = 256;
    bool binary_features = false;  // presence indicators instead of raw activations

    void validate() const {
        if (rounds == 0) throw ArgumentError("boosting rounds must be positive");
        if (!(eta > 0.0)) throw ArgumentError("eta must be positive");
        if (max_targets == 0) throw ArgumentError("max_targets must be positive");
    }
};

inline constexpr double kPriorClip = 1e-6;

inline double logistic_loss(const std::vector<double>& margins, const std::vector<int>& labels) {
    double total = 0.0;
    for (std::size_t i = 0; i < margins.size(); ++i) {
        const double t = margins[i];
        // log(1 + exp(-t)) for y = 1, log(1 + exp(t)) for y = 0, computed stably.
        const double s = labels[i] ? -t : t;
        total += s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
    }
    return total / static_cast<double>(margins.size());
}

struct BoostTrace {
    std::vector<double> loss;  // entry 0 after the bias, entry t after round t
};

/// Gradient boosting with logistic loss: each round fits a least-squares stump to
/// the residuals y - p (exhaustive search over features and midpoints between
/// sorted distinct values) and adds it with shrinkage eta.
inline BoostedPredictor fit_boosted_stumps(const std::vector<Vector>& features, const std::vector<int>& labels,
                                           std::size_t target, const BoostConfig& config,
                                           BoostTrace* trace = nullptr) {
    config.validate();
    if (features.empty() || features.size() != labels.size()) throw ArgumentError("boosting: bad training set");
    const std::size_t n = features.size();
    const auto n_features = static_cast<std::size_t>(features.front().size());

    BoostedPredictor model;
    model.target_concept = target;
    model.eta = config.eta;
    double positives = 0.0;
    for (int y : labels) positives += y ? 1.0 : 0.0;
    const double rate = std::clamp(positives / static_cast<double>(n), kPriorClip, 1.0 - kPriorClip);
    model.bias = std::log(rate / (1.0 - rate));

    // Per-feature sample order, fixed across rounds.
    std::vector<std::vector<std::size_t>> order(n_features, std::vector<std::size_t>(n));
    for (std::size_t f = 0; f < n_features; ++f) {
        for (std::size_t i = 0; i < n; ++i) order[f][i] = i;
        std::stable_sort(order[f].begin(), order[f].end(), [&](std::size_t a, std::size_t b) {
            return features[a][static_cast<Eigen::Index>(f)] < features[b][static_cast<Eigen::Index>(f)];
        });
    }

    std::vector<double> margins(n, model.bias), residual(n);
    if (trace) trace->loss = {logistic_loss(margins, labels)};

    for (std::size_t round = 0; round < config.rounds; ++round) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            residual[i] = (labels[i] ? 1.0 : 0.0) - sigmoid(margins[i]);
            total += residual[i];
        }
        const double mean_all = total / static_cast<double>(n);
        // Default: a constant stump (no informative split exists).
        Stump best{0, std::numeric_limits<double>::max(), mean_all, mean_all};
        double best_gain = 0.0;
        for (std::size_t f = 0; f < n_features; ++f) {
            const auto& ord = order[f];
            const auto fi = static_cast<Eigen::Index>(f);
            double left_sum = 0.0;
            for (std::size_t k = 0; k + 1 < n; ++k) {
                left_sum += residual[ord[k]];
                const double v = features[ord[k]][fi];
                const double next = features[ord[k + 1]][fi];
                if (!(next > v)) continue;
                const double nl = static_cast<double>(k + 1);
                const double nr = static_cast<double>(n - k - 1);
                const double right_sum = total - left_sum;
                // Reduction in squared error relative to a single mean.
                const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - total * total / static_cast<double>(n);
                if (gain > best_gain + 1e-15) {
                    best_gain = gain;
                    best = {f, 0.5 * (v + next), left_sum / nl, right_sum / nr};
                }
            }
        }
        model.stumps.push_back(best);
        for (std::size_t i = 0; i < n; ++i) margins[i] += config.eta * best(features[i]);
        if (trace) trace->loss.push_back(logistic_loss(margins, labels));
    }
    return model;
}

inline Vector predictor_features(const ConceptActivations& f, bool binary) {
    if (!binary) return f.values;
    return (f.values.array() > 0.0).cast<double>().matrix();
}

struct PredictorSet {
    std::vector<BoostedPredictor> predictors;
    bool binary_features = false;
    bool no_candidates = false;  // every training question already held every gold concept
};

/// One predictor per candidate target concept: a concept present in some gold
/// document and absent from the matching training question, capped to the
/// `max_targets` most frequently missing (ties to the smaller index).
inline PredictorSet train_predictors(const std::vector<RetrievalExample>& train, const IndexedCorpus& corpus,
                                     const SaeParams& sae, const BoostConfig& config) {
    config.validate();
    if (train.empty()) throw DataError("empty training set");
    std::vector<Vector> features;
    std::vector<ConceptSet> question_sets;
    std::vector<const ApiDoc*> golds;
    std::map<std::size_t, std::size_t> missing_count;
    for (const auto& ex : train) {
        const auto* gold = corpus.find(ex.gold_api);
        if (!gold) throw DataError("unknown gold api '" + ex.gold_api + "'");
        const auto f = encode(sae, ex.question);
        auto qs = active_concepts(f, corpus.threshold);
        for (auto c : gold->concepts.minus(qs)) ++missing_count[c];
        features.push_back(predictor_features(f, config.binary_features));
        question_sets.push_back(std::move(qs));
        golds.push_back(gold);
    }
    PredictorSet out;
    out.binary_features = config.binary_features;
    if (missing_count.empty()) {
        out.no_candidates = true;
        return out;
    }
    std::vector<std::pair<std::size_t, std::size_t>> ranked(missing_count.begin(), missing_count.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > config.max_targets) ranked.resize(config.max_targets);
    std::sort(ranked.begin(), ranked.end());

    for (const auto& [target, count] : ranked) {
        std::vector<int> labels(train.size());
        for (std::size_t i = 0; i < train.size(); ++i) {
            labels[i] = golds[i]->concepts.contains(target) && !question_sets[i].contains(target);
        }
        out.predictors.push_back(fit_boosted_stumps(features, labels, target, config));
    }
    return out;
}

/// Target concepts predicted above `prob_threshold` that the question does not
/// already activate.
inline ConceptSet predict_missing(const ConceptActivations& question, const PredictorSet& predictors,
                                  double prob_threshold = 0.5, double activation_threshold = 0.0) {
    const auto active = active_concepts(question, activation_threshold);
    const Vector x = predictor_features(question, predictors.binary_features);
    std::vector<std::size_t> out;
    for (const auto& p : predictors.predictors) {
        if (active.contains(p.target_concept)) continue;
        if (p.probability(x) > prob_threshold) out.push_back(p.target_concept);
    }
    return ConceptSet(std::move(out));
}

/// The ceil(rho * count) strongest strictly positive activations, ties to the
/// smaller index.
inline ConceptSet top_fraction(const ConceptActivations& f, double rho) {
    if (!(rho > 0.0 && rho <= 1.0)) throw ArgumentError("rho must lie in (0, 1]");
    std::vector<std::size_t> active;
    for (Eigen::Index i = 0; i < f.values.size(); ++i) {
        if (f.values[i] > 0.0) active.push_back(static_cast<std::size_t>(i));
    }
    std::stable_sort(active.begin(), active.end(), [&](std::size_t a, std::size_t b) {
        return f.values[static_cast<Eigen::Index>(a)] > f.values[static_cast<Eigen::Index>(b)];
    });
    const auto keep = static_cast<std::size_t>(std::ceil(rho * static_cast<double>(active.size()) - 1e-12));
    active.resize(std::min(keep, active.size()));
    return ConceptSet(std::move(active));
}

enum class SetSimilarity { jaccard, overlap };

/// Similarity between (question u predicted) and the document's concepts.
inline double union_joint_score(const ConceptSet& question, const ConceptSet& predicted, const ConceptSet& doc,
                                SetSimilarity similarity = SetSimilarity::jaccard) {
    const ConceptSet q = question.unite(predicted);
    const double inter = static_cast<double>(q.intersect(doc).size());
    if (similarity == SetSimilarity::overlap) {
        const double smaller = static_cast<double>(std::min(q.size(), doc.size()));
        return smaller > 0.0 ? inter / smaller : 0.0;
    }
    const double uni = static_cast<double>(q.unite(doc).size());
    return uni > 0.0 ? inter / uni : 0.0;
}

struct RankConfig {
    double rho = 0.5;
    std::size_t top_k = 5;
    bool use_prediction = true;
    double prob_threshold = 0.5;
    SetSimilarity similarity = SetSimilarity::jaccard;
};

struct RankedDoc {
    std::string id;
    double score = 0;
    friend bool operator==(const RankedDoc&, const RankedDoc&) = default;
};

struct RankOutcome {
    ConceptSet question_concepts;
    ConceptSet predicted;
    std::vector<RankedDoc> ranking;
};

inline RankOutcome rank(const Vector& question, const IndexedCorpus& corpus, const SaeParams& sae,
                        const PredictorSet& predictors, const RankConfig& config) {
    if (corpus.docs.empty()) throw DataError("empty API corpus");
    const auto f = encode(sae, question);
    RankOutcome out;
    out.question_concepts = top_fraction(f, config.rho);
    if (config.use_prediction) out.predicted = predict_missing(f, predictors, config.prob_threshold, corpus.threshold);
    out.ranking.reserve(corpus.docs.size());
    for (const auto& d : corpus.docs) {
        out.ranking.push_back({d.id, union_joint_score(out.question_concepts, out.predicted, d.concepts, config.similarity)});
    }
    std::sort(out.ranking.begin(), out.ranking.end(), [](const RankedDoc& a, const RankedDoc& b) {
        return a.score != b.score ? a.score > b.score : a.id < b.id;
    });
    if (config.top_k > 0 && out.ranking.size() > config.top_k) out.ranking.resize(config.top_k);
    return out;
}

struct RhoRow {
    double rho = 0;
    double api_top1 = 0;
    double domain_top1 = 0;
    double api_top1_no_prediction = 0;
    double domain_top1_no_prediction = 0;
};

struct RetrievalReport {
    std::vector<RhoRow> rows;
    std::size_t test_size = 0;
};

inline RetrievalReport evaluate_retrieval(const std::vector<RetrievalExample>& test, const IndexedCorpus& corpus,
                                          const SaeParams& sae, const PredictorSet& predictors,
                                          const std::vector<double>& rhos, double prob_threshold = 0.5,
                                          SetSimilarity similarity = SetSimilarity::jaccard) {
    if (test.empty()) throw DataError("empty test set");
    for (const auto& ex : test) {
        if (!corpus.find(ex.gold_api)) throw DataError("unknown gold api '" + ex.gold_api + "'");
    }
    RetrievalReport report;
    report.test_size = test.size();
    for (double rho : rhos) {
        RhoRow row;
        row.rho = rho;
        for (int with_pred = 0; with_pred < 2; ++with_pred) {
            RankConfig cfg{rho, 1, with_pred == 1, prob_threshold, similarity};
            std::size_t api_hits = 0, domain_hits = 0;
            for (const auto& ex : test) {
                const auto outcome = rank(ex.question, corpus, sae, predictors, cfg);
                const auto* top = corpus.find(outcome.ranking.front().id);
                api_hits += top->id == ex.gold_api;
                domain_hits += top->domain == ex.gold_domain;
            }
            const double n = static_cast<double>(test.size());
            (with_pred ? row.api_top1 : row.api_top1_no_prediction) = static_cast<double>(api_hits) / n;
            (with_pred ? row.domain_top1 : row.domain_top1_no_prediction) = static_cast<double>(domain_hits) / n;
        }
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace ck
