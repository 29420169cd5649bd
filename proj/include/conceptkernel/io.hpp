#pragma once

// JSON and JSONL encodings for the artifacts the command-line tool reads and
// writes: triplets, sample sets, API documents, retrieval questions,
// threshold models and predictor sets.

#include "conceptkernel/activation_store.hpp"
#include "conceptkernel/ambiguity.hpp"
#include "conceptkernel/retrieval.hpp"
#include "conceptkernel/semantic_entropy.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

namespace ck::io {

using nlohmann::json;

/// Calls `fn(object, line_number)` for every non-blank line. Errors raised by
/// `fn` are prefixed with the line number.
inline void for_each_jsonl(const std::string& path, const std::function<void(const json&, std::size_t)>& fn) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::is_blank(line)) continue;
        try {
            fn(json::parse(line), line_no);
        } catch (const json::exception& e) {
            throw DataError(path + " line " + std::to_string(line_no) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError(path + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

inline void write_file(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << content;
    if (!out) throw DataError("write failed for '" + path + "'");
}

inline void write_json(const std::string& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

inline void write_jsonl(const std::string& path, const std::vector<json>& rows) {
    std::string text;
    for (const auto& r : rows) text += r.dump() + "\n";
    write_file(path, text);
}

inline json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
}

/// Accepts both the persisted corpus format and plain activation JSONL.
inline ActivationCorpus read_corpus(const std::string& path, std::optional<std::size_t> expect_dim = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::string first;
    std::getline(in, first);
    bool persisted = false;
    try {
        const auto h = json::parse(first);
        persisted = h.is_object() && h.value("format", "") == kCorpusFormat;
    } catch (const json::exception&) {
    }
    auto corpus = persisted ? load(path) : ingest(path, expect_dim);
    if (expect_dim && corpus.dim() != *expect_dim) {
        throw DataError("corpus dimension " + std::to_string(corpus.dim()) + " does not match expected " +
                        std::to_string(*expect_dim));
    }
    return corpus;
}

inline std::string require_string(const json& j, const char* field) {
    if (!j.contains(field) || !j[field].is_string()) throw DataError(std::string("missing string field '") + field + "'");
    return j[field].get<std::string>();
}

inline json to_json(const Vector& v) { return detail::vector_to_json(v); }
inline json to_json(const ConceptSet& s) { return s.indices(); }

// ---------------------------------------------------------------------------
// Triplets
// ---------------------------------------------------------------------------

inline Triplet triplet_from_json(const json& j) {
    Triplet t{require_string(j, "q"), require_string(j, "i1"), require_string(j, "i2"), std::nullopt};
    if (j.contains("label") && !j["label"].is_null()) {
        if (!j["label"].is_string()) throw DataError("field 'label' must be a string");
        t.label = label_from_string(j["label"].get<std::string>());
    }
    return t;
}

inline json to_json(const Triplet& t) {
    json j{{"q", t.q}, {"i1", t.i1}, {"i2", t.i2}};
    if (t.label) j["label"] = to_string(*t.label);
    return j;
}

inline std::vector<Triplet> read_triplets(const std::string& path) {
    std::vector<Triplet> out;
    for_each_jsonl(path, [&](const json& j, std::size_t) { out.push_back(triplet_from_json(j)); });
    if (out.empty()) throw DataError("no triplets in '" + path + "'");
    return out;
}

inline json to_json(const TripletStats& s) {
    json j{{"d1_q_i1", s.d_q_i1},  {"d1_q_i2", s.d_q_i2},  {"d1_i1_i2", s.d_i1_i2},  {"mean_d1", s.mean_d1},
           {"d2_q_i1", s.d2_q_i1}, {"d2_q_i2", s.d2_q_i2}, {"d2_i1_i2", s.d2_i1_i2}};
    j["ratio_1"] = s.ratio_1 ? json(*s.ratio_1) : json(nullptr);
    j["ratio_2"] = s.ratio_2 ? json(*s.ratio_2) : json(nullptr);
    return j;
}

// ---------------------------------------------------------------------------
// Threshold model
// ---------------------------------------------------------------------------

inline json to_json(const ThresholdModel& m) {
    return {{"threshold", m.threshold},
            {"bin_edges", m.bin_edges},
            {"ambiguous_counts", m.ambiguous_counts},
            {"unambiguous_counts", m.unambiguous_counts},
            {"ambiguous_bandwidth", m.ambiguous_bandwidth},
            {"unambiguous_bandwidth", m.unambiguous_bandwidth},
            {"ambiguous_mean", m.ambiguous_mean},
            {"unambiguous_mean", m.unambiguous_mean},
            {"fallback_midpoint", m.fallback_midpoint}};
}

inline ThresholdModel threshold_model_from_json(const json& j) {
    try {
        ThresholdModel m;
        m.threshold = j.at("threshold").get<double>();
        m.bin_edges = j.at("bin_edges").get<std::vector<double>>();
        m.ambiguous_counts = j.at("ambiguous_counts").get<std::vector<std::size_t>>();
        m.unambiguous_counts = j.at("unambiguous_counts").get<std::vector<std::size_t>>();
        m.ambiguous_bandwidth = j.at("ambiguous_bandwidth").get<double>();
        m.unambiguous_bandwidth = j.at("unambiguous_bandwidth").get<double>();
        m.ambiguous_mean = j.at("ambiguous_mean").get<double>();
        m.unambiguous_mean = j.at("unambiguous_mean").get<double>();
        m.fallback_midpoint = j.at("fallback_midpoint").get<bool>();
        if (m.bin_edges.size() != kHistogramBins + 1 || m.ambiguous_counts.size() != kHistogramBins ||
            m.unambiguous_counts.size() != kHistogramBins) {
            throw DataError("threshold model: histogram must have " + std::to_string(kHistogramBins) + " bins");
        }
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("threshold model: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Semantic entropy samples
// ---------------------------------------------------------------------------

inline SampleSet read_samples(const std::string& path) {
    SampleSet s;
    std::size_t with_log_prob = 0;
    std::vector<double> log_probs;
    for_each_jsonl(path, [&](const json& j, std::size_t) {
        s.texts.push_back(j.contains("text") && j["text"].is_string() ? j["text"].get<std::string>() : "");
        if (!j.contains("vector")) throw DataError("missing field 'vector'");
        s.embeddings.push_back(detail::json_to_vector(j["vector"], "vector"));
        if (j.contains("log_prob") && !j["log_prob"].is_null()) {
            if (!j["log_prob"].is_number()) throw DataError("field 'log_prob' must be a number");
            ++with_log_prob;
            log_probs.push_back(j["log_prob"].get<double>());
        } else {
            log_probs.push_back(0.0);
        }
    });
    if (s.texts.empty()) throw DataError("no samples in '" + path + "'");
    if (with_log_prob == s.texts.size()) {
        s.log_probs = std::move(log_probs);
    } else if (with_log_prob != 0) {
        throw DataError("log_prob present on some samples but not all");
    }
    return s;
}

inline std::vector<json> samples_to_jsonl(const SampleSet& s) {
    std::vector<json> rows;
    for (std::size_t i = 0; i < s.texts.size(); ++i) {
        json j{{"text", s.texts[i]}, {"vector", to_json(s.embeddings[i])}};
        if (s.log_probs) j["log_prob"] = (*s.log_probs)[i];
        rows.push_back(std::move(j));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Retrieval
// ---------------------------------------------------------------------------

inline ApiDoc api_doc_from_json(const json& j) {
    ApiDoc d;
    d.id = require_string(j, "id");
    d.domain = require_string(j, "domain");
    d.call_template = j.contains("call_template") && j["call_template"].is_string()
                          ? j["call_template"].get<std::string>()
                          : std::string();
    d.text = require_string(j, "text");
    if (j.contains("vector") && !j["vector"].is_null()) d.vector = detail::json_to_vector(j["vector"], "vector");
    if (j.contains("concepts") && !j["concepts"].is_null()) {
        d.concepts = ConceptSet(j["concepts"].get<std::vector<std::size_t>>());
    }
    return d;
}

inline json to_json(const ApiDoc& d, bool with_concepts) {
    json j{{"id", d.id}, {"domain", d.domain}, {"call_template", d.call_template}, {"text", d.text}};
    if (d.vector) j["vector"] = to_json(*d.vector);
    if (with_concepts) j["concepts"] = to_json(d.concepts);
    return j;
}

inline std::vector<ApiDoc> read_api_docs(const std::string& path) {
    std::vector<ApiDoc> docs;
    for_each_jsonl(path, [&](const json& j, std::size_t) { docs.push_back(api_doc_from_json(j)); });
    return docs;
}

inline constexpr const char* kIndexFormat = "conceptkernel-api-index";

inline void write_index(const std::string& path, const IndexedCorpus& corpus) {
    std::vector<json> rows{{{"format", kIndexFormat}, {"version", 1}, {"threshold", corpus.threshold}, {"docs", corpus.docs.size()}}};
    for (const auto& d : corpus.docs) rows.push_back(to_json(d, true));
    write_jsonl(path, rows);
}

inline IndexedCorpus read_index(const std::string& path) {
    IndexedCorpus corpus;
    bool header = false;
    std::size_t expected = 0;
    for_each_jsonl(path, [&](const json& j, std::size_t) {
        if (!header) {
            if (j.value("format", "") != kIndexFormat) throw DataError("not an API index file");
            corpus.threshold = j.at("threshold").get<double>();
            expected = j.at("docs").get<std::size_t>();
            header = true;
            return;
        }
        corpus.docs.push_back(api_doc_from_json(j));
    });
    if (!header) throw DataError("empty API index '" + path + "'");
    if (corpus.docs.size() != expected) throw DataError("API index '" + path + "' is truncated");
    if (corpus.docs.empty()) throw DataError("empty API corpus");
    return corpus;
}

/// Question lines: {question_text, gold_api, gold_domain, vector?}; questions
/// without a vector are embedded with `provider`.
inline std::vector<RetrievalExample> read_questions(const std::string& path, const EmbeddingProvider& provider) {
    std::vector<RetrievalExample> out;
    for_each_jsonl(path, [&](const json& j, std::size_t) {
        RetrievalExample ex;
        ex.question_text = require_string(j, "question_text");
        ex.gold_api = j.contains("gold_api") && j["gold_api"].is_string() ? j["gold_api"].get<std::string>() : "";
        ex.gold_domain = j.contains("gold_domain") && j["gold_domain"].is_string() ? j["gold_domain"].get<std::string>() : "";
        if (j.contains("vector") && !j["vector"].is_null()) {
            ex.question = detail::json_to_vector(j["vector"], "vector");
        } else {
            if (tokenize(ex.question_text).empty()) throw DataError("empty question_text");
            ex.question = provider(ex.question_text);
        }
        out.push_back(std::move(ex));
    });
    if (out.empty()) throw DataError("no questions in '" + path + "'");
    return out;
}

inline json to_json(const RetrievalExample& ex, bool with_vector) {
    json j{{"question_text", ex.question_text}, {"gold_api", ex.gold_api}, {"gold_domain", ex.gold_domain}};
    if (with_vector) j["vector"] = to_json(ex.question);
    return j;
}

inline json to_json(const PredictorSet& set) {
    json preds = json::array();
    for (const auto& p : set.predictors) {
        json stumps = json::array();
        for (const auto& s : p.stumps) stumps.push_back({s.feature, s.split, s.left, s.right});
        preds.push_back({{"target_concept", p.target_concept}, {"eta", p.eta}, {"bias", p.bias}, {"stumps", stumps}});
    }
    return {{"binary_features", set.binary_features}, {"no_candidates", set.no_candidates}, {"predictors", preds}};
}

inline PredictorSet predictor_set_from_json(const json& j) {
    try {
        PredictorSet set;
        set.binary_features = j.at("binary_features").get<bool>();
        set.no_candidates = j.at("no_candidates").get<bool>();
        for (const auto& pj : j.at("predictors")) {
            BoostedPredictor p;
            p.target_concept = pj.at("target_concept").get<std::size_t>();
            p.eta = pj.at("eta").get<double>();
            p.bias = pj.at("bias").get<double>();
            for (const auto& sj : pj.at("stumps")) {
                if (!sj.is_array() || sj.size() != 4) throw DataError("stump must be [feature, split, left, right]");
                p.stumps.push_back({sj[0].get<std::size_t>(), sj[1].get<double>(), sj[2].get<double>(), sj[3].get<double>()});
            }
            set.predictors.push_back(std::move(p));
        }
        return set;
    } catch (const json::exception& e) {
        throw DataError(std::string("predictor file: ") + e.what());
    }
}

}  // namespace ck::io
