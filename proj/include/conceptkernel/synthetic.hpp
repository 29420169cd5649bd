#pragma once

// Seeded synthetic benchmarks standing in for model-derived data:
//  * ambiguity triplets where ambiguous questions omit a concept-bearing bigram
//    that both interpretations carry,
//  * a clamp-then-sample suite for semantic entropy under concept steering,
//  * a planted missing-concept API retrieval corpus.

#include "conceptkernel/activation_store.hpp"
#include "conceptkernel/ambiguity.hpp"
#include "conceptkernel/path_kernel.hpp"
#include "conceptkernel/retrieval.hpp"
#include "conceptkernel/rng.hpp"
#include "conceptkernel/sae.hpp"
#include "conceptkernel/semantic_entropy.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace ck::synth {

namespace detail {

inline std::string word(const char* prefix, std::size_t i) { return std::string(prefix) + std::to_string(i); }

inline std::string join(const std::vector<std::string>& words) {
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) out += ' ';
        out += words[i];
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Ambiguity triplets
// ---------------------------------------------------------------------------

struct AmbiguityBenchConfig {
    std::uint64_t seed = 7;
    std::size_t n_ambiguous = 200;
    std::size_t n_unambiguous = 200;
    std::size_t frame_words = 4;    // words in the shared question frame
    std::size_t vocabulary = 400;   // frame vocabulary size
    std::size_t bigram_pool = 40;   // distinct concept-bearing bigrams
    std::size_t detail_pool = 60;   // disambiguating detail words
    ToyEmbedderConfig embedder{32, 7, {1, 2}, 1024};
};

struct AmbiguityBench {
    ActivationCorpus corpus;
    std::vector<Triplet> triplets;
};

/// Ambiguous: q = frame, i_k = frame + bigram + detail_k.
/// Unambiguous: q = frame + bigram, readings = q + detail and detail + q.
inline AmbiguityBench make_ambiguity_bench(const AmbiguityBenchConfig& config) {
    config.embedder.validate();
    Rng rng(derive_seed(config.seed, "ambiguity-bench"));
    AmbiguityBench bench;
    bench.corpus = ActivationCorpus(config.embedder.dim);
    const std::size_t total = config.n_ambiguous + config.n_unambiguous;
    std::vector<Label> labels;
    labels.insert(labels.end(), config.n_ambiguous, Label::ambiguous);
    labels.insert(labels.end(), config.n_unambiguous, Label::unambiguous);
    rng.shuffle(labels);

    for (std::size_t t = 0; t < total; ++t) {
        std::vector<std::string> frame;
        for (std::size_t k = 0; k < config.frame_words; ++k) frame.push_back(detail::word("w", rng.index(config.vocabulary)));
        const std::size_t bigram = rng.index(config.bigram_pool);
        const std::string first = detail::word("ba", bigram);
        const std::string second = detail::word("bb", bigram);
        const std::size_t d1 = rng.index(config.detail_pool);
        std::size_t d2 = rng.index(config.detail_pool - 1);
        if (d2 >= d1) ++d2;
        const std::size_t at = rng.index(frame.size() + 1);

        std::vector<std::string> with_bigram = frame;
        with_bigram.insert(with_bigram.begin() + static_cast<std::ptrdiff_t>(at), {first, second});
        auto with_detail = [](std::vector<std::string> words, std::size_t d) {
            words.push_back(detail::word("d", d));
            return words;
        };
        const std::string prefix = "t" + std::to_string(t);
        std::vector<std::string> question, first_reading, second_reading;
        if (labels[t] == Label::ambiguous) {
            question = frame;
            first_reading = with_detail(with_bigram, d1);
            second_reading = with_detail(with_bigram, d2);
        } else {
            // Both readings carry the same added detail; they differ only in where it sits.
            question = with_bigram;
            first_reading = with_detail(with_bigram, d1);
            second_reading = with_bigram;
            second_reading.insert(second_reading.begin(), detail::word("d", d1));
        }
        bench.corpus.add(embed_record(prefix + "_q", detail::join(question), config.embedder));
        bench.corpus.add(embed_record(prefix + "_i1", detail::join(first_reading), config.embedder));
        bench.corpus.add(embed_record(prefix + "_i2", detail::join(second_reading), config.embedder));
        bench.triplets.push_back({prefix + "_q", prefix + "_i1", prefix + "_i2", labels[t]});
    }
    return bench;
}


struct AmbiguityRunConfig {
    std::size_t n_concepts = 64;
    SaeTrainConfig train{0.003, 50, 0.05, 32, 7, 10};
    std::size_t n_steps = 32;  // interpolated path states
    double mask_threshold = 0.0;
};

struct AmbiguityRun {
    SaeTrainResult sae;
    PathStates states;
    std::vector<TripletStats> stats;  // one per triplet, bench order
    std::size_t mask_fallbacks = 0;
    ThresholdModel model;  // calibrated on the even-indexed triplets
    std::vector<Prediction> predictions;  // odd-indexed triplets
    EvaluationReport report;
};

/// Train, compute triplet statistics, calibrate on one half and classify the other.
inline AmbiguityRun run_ambiguity_bench(const AmbiguityBench& bench, const AmbiguityRunConfig& config) {
    AmbiguityRun run;
    run.sae = train(bench.corpus, config.n_concepts, config.train);
    run.states = interpolate(run.sae.params, config.n_steps);
    std::vector<LabeledValue> calibration;
    std::vector<std::pair<double, Label>> held_out;
    for (std::size_t t = 0; t < bench.triplets.size(); ++t) {
        const auto& tr = bench.triplets[t];
        const auto& q = bench.corpus.at(tr.q);
        const auto& i1 = bench.corpus.at(tr.i1);
        const auto& i2 = bench.corpus.at(tr.i2);
        const auto tm = triplet_mask(q, i1, i2, run.sae.params, run.states, config.mask_threshold);
        run.mask_fallbacks += tm.fallback;
        run.stats.push_back(triplet_stats(q.vector, i1.vector, i2.vector, run.states, tm.mask));
        if (t % 2 == 0) {
            calibration.push_back({run.stats.back().mean_d1, *tr.label});
        } else {
            held_out.emplace_back(run.stats.back().mean_d1, *tr.label);
        }
    }
    run.model = calibrate(calibration);
    for (const auto& [v, truth] : held_out) run.predictions.push_back({v, classify(v, run.model), truth});
    run.report = evaluate(run.predictions, run.model);
    return run;
}

// ---------------------------------------------------------------------------
// Clamp-then-entropy suite
// ---------------------------------------------------------------------------

// Each question has a default reading and a few alternative readings that all
// hinge on one concept the question does not activate. The stand-in generator
// scores readings linearly in the (possibly clamped) concept activations: the
// missing concept raises every alternative strongly, other concepts nudge them
// weakly and at random.

struct EntropySuiteConfig {
    std::uint64_t seed = 7;
    std::size_t questions = 20;
    std::size_t n_concepts = 32;
    std::size_t dim = 16;
    std::size_t readings = 4;  // default reading plus alternatives
    std::size_t samples = 200;
    double clamp_value = 10.0;
    double default_logit = 6.0;
    double target_sensitivity = 0.6;
    double cross_sensitivity = 0.3;
    double jitter = 0.02;
    double threshold = 0.3;  // clustering distance

    void validate() const {
        if (questions == 0 || samples == 0) throw ArgumentError("entropy suite needs questions and samples");
        if (readings < 2) throw ArgumentError("entropy suite needs at least 2 readings");
        if (n_concepts < 2 || dim == 0) throw ArgumentError("entropy suite needs n_concepts >= 2 and dim >= 1");
    }
};

struct EntropyQuestion {
    std::string id;
    Vector hidden;
    std::size_t missing = 0;        // concept the alternatives hinge on
    std::size_t random_concept = 0;  // control concept for the random clamp
    std::vector<Candidate> readings;  // probabilities filled per condition
    Matrix sensitivity;               // readings x concepts
    std::vector<double> base_logits;
};

struct EntropySuite {
    SaeParams sae;
    std::vector<EntropyQuestion> questions;
};

enum class ClampKind { none, random, targeted };

inline const char* to_string(ClampKind k) {
    switch (k) {
        case ClampKind::none: return "none";
        case ClampKind::random: return "random";
        case ClampKind::targeted: return "targeted";
    }
    return "?";
}

inline EntropySuite make_entropy_suite(const EntropySuiteConfig& config) {
    config.validate();
    EntropySuite suite;
    suite.sae = init_params(config.n_concepts, config.dim, derive_seed(config.seed, "entropy-sae"));
    Rng rng(derive_seed(config.seed, "entropy-suite"));
    const auto n = static_cast<Eigen::Index>(config.n_concepts);
    for (std::size_t qi = 0; qi < config.questions; ++qi) {
        EntropyQuestion q;
        q.id = "q" + std::to_string(qi);
        std::vector<std::size_t> inactive;
        for (int attempt = 0; inactive.empty(); ++attempt) {
            if (attempt == 100) throw NumericError("entropy suite: no inactive concept found");
            q.hidden = Vector(static_cast<Eigen::Index>(config.dim));
            for (auto& x : q.hidden) x = rng.normal();
            const auto f = encode(suite.sae, q.hidden);
            for (Eigen::Index c = 0; c < n; ++c) {
                if (f.values[c] <= 0.0) inactive.push_back(static_cast<std::size_t>(c));
            }
        }
        q.missing = inactive[rng.index(inactive.size())];
        q.random_concept = rng.index(config.n_concepts - 1);
        if (q.random_concept >= q.missing) ++q.random_concept;

        q.sensitivity = Matrix::Zero(static_cast<Eigen::Index>(config.readings), n);
        q.base_logits.assign(config.readings, 0.0);
        q.base_logits[0] = config.default_logit;
        for (std::size_t k = 0; k < config.readings; ++k) {
            Candidate c;
            c.text = q.id + " reading " + std::to_string(k);
            c.embedding = Vector(static_cast<Eigen::Index>(config.dim));
            for (auto& x : c.embedding) x = rng.normal();
            c.embedding.normalize();
            q.readings.push_back(std::move(c));
            if (k == 0) continue;
            const auto row = static_cast<Eigen::Index>(k);
            for (Eigen::Index c2 = 0; c2 < n; ++c2) q.sensitivity(row, c2) = config.cross_sensitivity * rng.normal();
            q.sensitivity(row, static_cast<Eigen::Index>(q.missing)) =
                config.target_sensitivity * (1.0 + 0.1 * rng.normal());
        }
        suite.questions.push_back(std::move(q));
    }
    return suite;
}

/// Reading probabilities given concept activations (softmax of the linear scores).
inline std::vector<double> reading_probabilities(const EntropyQuestion& q, const ConceptActivations& f) {
    const Vector logits = q.sensitivity * f.values;
    std::vector<double> p(q.base_logits.size());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < p.size(); ++k) {
        p[k] = q.base_logits[k] + logits[static_cast<Eigen::Index>(k)];
        top = std::max(top, p[k]);
    }
    double total = 0.0;
    for (auto& x : p) total += (x = std::exp(x - top));
    for (auto& x : p) x /= total;
    return p;
}

inline ConceptActivations condition_activations(const EntropySuite& suite, const EntropyQuestion& q, ClampKind kind,
                                                double value) {
    switch (kind) {
        case ClampKind::targeted: return clamp(suite.sae, q.hidden, q.missing, value).activations;
        case ClampKind::random: return clamp(suite.sae, q.hidden, q.random_concept, value).activations;
        case ClampKind::none: break;
    }
    return encode(suite.sae, q.hidden);
}

/// Draws the seeded sample set for one question under one condition.
inline SampleSet entropy_samples(const EntropySuite& suite, const EntropyQuestion& q, ClampKind kind,
                                 const EntropySuiteConfig& config) {
    auto pool = q.readings;
    const auto p = reading_probabilities(q, condition_activations(suite, q, kind, config.clamp_value));
    for (std::size_t k = 0; k < pool.size(); ++k) pool[k].probability = p[k];
    CandidatePoolGenerator generator(std::move(pool), config.jitter);
    Rng rng(derive_seed(config.seed, "entropy-sample/" + q.id + "/" + to_string(kind)));
    return generator.sample(config.samples, rng);
}

struct EntropySuiteResult {
    // [condition][question], conditions ordered none, random, targeted
    std::vector<std::vector<double>> entropies;
    std::vector<double> means;
};

inline EntropySuiteResult run_entropy_suite(const EntropySuite& suite, const EntropySuiteConfig& config) {
    EntropySuiteResult r;
    for (auto kind : {ClampKind::none, ClampKind::random, ClampKind::targeted}) {
        std::vector<double> hs;
        double sum = 0.0;
        for (const auto& q : suite.questions) {
            hs.push_back(semantic_entropy(entropy_samples(suite, q, kind, config), config.threshold).entropy);
            sum += hs.back();
        }
        r.means.push_back(sum / static_cast<double>(hs.size()));
        r.entropies.push_back(std::move(hs));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Planted missing-concept retrieval corpus
// ---------------------------------------------------------------------------

// Concept layout (activation vectors are concept activations directly; the
// SAE is the identity map):
//   [0, domains)                    domain concepts
//   [domains, domains+ops)          operation concepts, carried by documents only
//   [domains+ops, domains+2 ops)    hint concepts, weakly active in questions
//   the rest                        noise
// Each document is one (domain, operation) pair. Questions state the domain
// and hint at the operation but never activate the operation concept itself.

struct RetrievalBenchConfig {
    std::uint64_t seed = 7;
    std::size_t domains = 10;
    std::size_t ops = 5;
    std::size_t noise_concepts = 44;
    std::size_t noise_per_question = 3;
    std::size_t train_per_doc = 4;
    std::size_t test_questions = 100;

    [[nodiscard]] std::size_t n_concepts() const { return domains + 2 * ops + noise_concepts; }
    void validate() const {
        if (domains == 0 || ops == 0) throw ArgumentError("retrieval bench needs domains and ops");
        if (noise_per_question > noise_concepts) throw ArgumentError("noise_per_question exceeds noise_concepts");
    }
};

struct RetrievalBench {
    SaeParams sae;  // identity
    std::vector<ApiDoc> docs;
    std::vector<RetrievalExample> train;
    std::vector<RetrievalExample> test;
};

inline SaeParams identity_sae(std::size_t n) {
    auto p = SaeParams::zeros(n, n);
    p.encoder.setIdentity();
    p.dictionary.setIdentity();
    return p;
}

inline RetrievalBench make_retrieval_bench(const RetrievalBenchConfig& config) {
    config.validate();
    const std::size_t n = config.n_concepts();
    RetrievalBench bench;
    bench.sae = identity_sae(n);
    Rng rng(derive_seed(config.seed, "retrieval-bench"));
    auto domain_name = [](std::size_t d) { return detail::word("domain", d); };
    auto doc_id = [](std::size_t d, std::size_t k) { return "api_" + std::to_string(d) + "_" + std::to_string(k); };
    for (std::size_t d = 0; d < config.domains; ++d) {
        for (std::size_t k = 0; k < config.ops; ++k) {
            ApiDoc doc;
            doc.id = doc_id(d, k);
            doc.domain = domain_name(d);
            doc.call_template = doc.domain + ".op" + std::to_string(k) + "(...)";
            doc.text = doc.domain + " op" + std::to_string(k) + " api";
            Vector v = Vector::Zero(static_cast<Eigen::Index>(n));
            v[static_cast<Eigen::Index>(d)] = 1.0;
            v[static_cast<Eigen::Index>(config.domains + k)] = 0.9;
            doc.vector = quantize_f32(v);
            bench.docs.push_back(std::move(doc));
        }
    }
    auto question = [&](std::size_t d, std::size_t k, std::size_t serial) {
        RetrievalExample ex;
        Vector v = Vector::Zero(static_cast<Eigen::Index>(n));
        v[static_cast<Eigen::Index>(d)] = rng.uniform(0.7, 1.0);
        v[static_cast<Eigen::Index>(config.domains + config.ops + k)] = rng.uniform(0.2, 0.5);
        std::vector<std::size_t> noise(config.noise_concepts);
        for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = config.domains + 2 * config.ops + i;
        rng.shuffle(noise);
        for (std::size_t i = 0; i < config.noise_per_question; ++i) {
            v[static_cast<Eigen::Index>(noise[i])] = rng.uniform(0.05, 0.2);
        }
        ex.question = quantize_f32(v);
        ex.question_text = "question " + std::to_string(serial) + " about " + domain_name(d) + " hint" + std::to_string(k);
        ex.gold_api = doc_id(d, k);
        ex.gold_domain = domain_name(d);
        return ex;
    };
    std::size_t serial = 0;
    for (std::size_t d = 0; d < config.domains; ++d) {
        for (std::size_t k = 0; k < config.ops; ++k) {
            for (std::size_t r = 0; r < config.train_per_doc; ++r) bench.train.push_back(question(d, k, serial++));
        }
    }
    const std::size_t n_docs = bench.docs.size();
    for (std::size_t t = 0; t < config.test_questions; ++t) {
        const std::size_t j = t % n_docs;
        bench.test.push_back(question(j / config.ops, j % config.ops, serial++));
    }
    return bench;
}

}  // namespace ck::synth
