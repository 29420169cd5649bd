#pragma once

// Sentence activation vectors: ingest from JSONL dumps, a deterministic
// hashed n-gram stand-in embedder, and exact persistence.

#include "conceptkernel/core.hpp"
#include "conceptkernel/rng.hpp"

#include "json.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace ck {

struct SentenceRecord {
    std::string id;
    std::string text;
    std::vector<std::string> tokens;
    Vector vector;                             // H(x)
    std::optional<std::vector<Vector>> token_vectors;  // H(t_1) ... H(t_n)

    [[nodiscard]] Eigen::Index dim() const noexcept { return vector.size(); }
};

/// Immutable-after-ingest collection of records sharing one dimension.
/// Components are held at 32-bit float precision (the file precision).
class ActivationCorpus {
  public:
    ActivationCorpus() = default;
    explicit ActivationCorpus(std::size_t dim) : dim_(dim) {
        if (dim == 0) throw ArgumentError("corpus dimension must be positive");
    }

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t size() const noexcept { return records_.size(); }
    [[nodiscard]] bool empty() const noexcept { return records_.empty(); }
    [[nodiscard]] const std::vector<SentenceRecord>& records() const noexcept { return records_; }
    [[nodiscard]] auto begin() const noexcept { return records_.begin(); }
    [[nodiscard]] auto end() const noexcept { return records_.end(); }
    [[nodiscard]] const SentenceRecord& operator[](std::size_t i) const { return records_.at(i); }

    [[nodiscard]] const SentenceRecord* find(const std::string& id) const {
        auto it = index_.find(id);
        return it == index_.end() ? nullptr : &records_[it->second];
    }
    [[nodiscard]] const SentenceRecord& at(const std::string& id) const {
        if (const auto* r = find(id)) return *r;
        throw DataError("unknown record id '" + id + "'");
    }

    /// Validates and appends a record; vectors are rounded to float32.
    void add(SentenceRecord record) {
        if (dim_ == 0) {
            if (record.vector.size() == 0) throw DataError("record '" + record.id + "' has an empty vector");
            dim_ = static_cast<std::size_t>(record.vector.size());
        }
        if (static_cast<std::size_t>(record.vector.size()) != dim_) {
            throw DataError("dimension mismatch: record '" + record.id + "' has dim " +
                            std::to_string(record.vector.size()) + ", corpus dim " + std::to_string(dim_));
        }
        if (!all_finite(record.vector)) throw DataError("non-finite component in record '" + record.id + "'");
        record.vector = quantize_f32(record.vector);
        if (!all_finite(record.vector)) throw DataError("non-finite component in record '" + record.id + "'");
        if (record.token_vectors) {
            if (record.token_vectors->size() != record.tokens.size()) {
                throw DataError("record '" + record.id + "': token_vectors length " +
                                std::to_string(record.token_vectors->size()) + " != token count " +
                                std::to_string(record.tokens.size()));
            }
            for (auto& tv : *record.token_vectors) {
                if (static_cast<std::size_t>(tv.size()) != dim_) {
                    throw DataError("dimension mismatch in token_vectors of record '" + record.id + "'");
                }
                tv = quantize_f32(tv);
                if (!all_finite(tv)) throw DataError("non-finite component in token_vectors of '" + record.id + "'");
            }
        }
        if (index_.contains(record.id)) throw DataError("duplicate id '" + record.id + "'");
        index_.emplace(record.id, records_.size());
        records_.push_back(std::move(record));
    }

    friend bool operator==(const ActivationCorpus& a, const ActivationCorpus& b) {
        if (a.dim_ != b.dim_ || a.records_.size() != b.records_.size()) return false;
        for (std::size_t i = 0; i < a.records_.size(); ++i) {
            const auto& x = a.records_[i];
            const auto& y = b.records_[i];
            if (x.id != y.id || x.text != y.text || x.tokens != y.tokens || x.vector != y.vector) return false;
            if (x.token_vectors.has_value() != y.token_vectors.has_value()) return false;
            if (x.token_vectors) {
                if (x.token_vectors->size() != y.token_vectors->size()) return false;
                for (std::size_t k = 0; k < x.token_vectors->size(); ++k) {
                    if ((*x.token_vectors)[k] != (*y.token_vectors)[k]) return false;
                }
            }
        }
        return true;
    }

  private:
    std::size_t dim_ = 0;
    std::vector<SentenceRecord> records_;
    std::unordered_map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// Toy embedder
// ---------------------------------------------------------------------------

struct ToyEmbedderConfig {
    std::size_t dim = 32;
    std::uint64_t seed = 0;
    std::vector<std::size_t> ngram_orders{1, 2};
    std::size_t hash_buckets = 1024;

    void validate() const {
        if (dim < 8) throw ArgumentError("embedder dim must be >= 8");
        if (hash_buckets < dim) throw ArgumentError("hash_buckets must be >= dim");
        if (ngram_orders.empty()) throw ArgumentError("ngram_orders must not be empty");
        for (auto n : ngram_orders) {
            if (n == 0) throw ArgumentError("ngram orders must be positive");
        }
    }
};

/// Whitespace split, ASCII lowercased.
inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string tok;
    while (in >> tok) {
        for (auto& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        out.push_back(std::move(tok));
    }
    return out;
}

namespace detail {

// Row `bucket` of the fixed B x d Gaussian projection, generated on demand.
inline void add_projection_row(Vector& acc, std::uint64_t seed, std::uint64_t bucket, double weight) {
    Rng rng(splitmix64(seed ^ splitmix64(bucket + 0x51ed270b27f4a3c1ULL)));
    for (Eigen::Index k = 0; k < acc.size(); ++k) acc[k] += weight * rng.normal();
}

inline Vector embed_tokens(const std::vector<std::string>& tokens, const ToyEmbedderConfig& config) {
    std::vector<std::uint64_t> bucket_order;
    std::unordered_map<std::uint64_t, double> counts;
    for (auto order : config.ngram_orders) {
        if (tokens.size() < order) continue;
        for (std::size_t start = 0; start + order <= tokens.size(); ++start) {
            std::string gram = std::to_string(order) + ":";
            for (std::size_t k = 0; k < order; ++k) {
                if (k) gram += ' ';
                gram += tokens[start + k];
            }
            const std::uint64_t bucket = splitmix64(fnv1a(gram) ^ config.seed) % config.hash_buckets;
            auto [it, inserted] = counts.try_emplace(bucket, 0.0);
            if (inserted) bucket_order.push_back(bucket);
            it->second += 1.0;
        }
    }
    // Accumulate in bucket order so the result does not depend on hash-map iteration.
    std::sort(bucket_order.begin(), bucket_order.end());
    Vector v = Vector::Zero(static_cast<Eigen::Index>(config.dim));
    for (auto b : bucket_order) detail::add_projection_row(v, config.seed, b, counts[b]);
    const double norm = v.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) throw ArgumentError("text produces no n-gram features");
    return v / norm;
}

}  // namespace detail

/// Hashed n-gram counts projected to `dim` by a seeded Gaussian matrix, unit norm.
inline Vector toy_embed(const std::string& text, const ToyEmbedderConfig& config) {
    config.validate();
    auto tokens = tokenize(text);
    if (tokens.empty()) throw ArgumentError("empty text");
    return detail::embed_tokens(tokens, config);
}

/// One embedding per whitespace token, each embedded on its own.
inline std::vector<Vector> token_vectors(const std::string& text, const ToyEmbedderConfig& config) {
    config.validate();
    auto tokens = tokenize(text);
    if (tokens.empty()) throw ArgumentError("empty text");
    std::vector<Vector> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(detail::embed_tokens({t}, config));
    return out;
}

/// Builds a complete record (sentence + token vectors) with the toy embedder.
inline SentenceRecord embed_record(std::string id, const std::string& text, const ToyEmbedderConfig& config,
                                   bool with_tokens = true) {
    SentenceRecord r;
    r.id = std::move(id);
    r.text = text;
    r.tokens = tokenize(text);
    r.vector = toy_embed(text, config);
    if (with_tokens) r.token_vectors = token_vectors(text, config);
    return r;
}

// ---------------------------------------------------------------------------
// JSONL ingest / persist
// ---------------------------------------------------------------------------

namespace detail {

inline Vector json_to_vector(const nlohmann::json& j, const char* field) {
    if (!j.is_array()) throw DataError(std::string("field '") + field + "' must be an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t k = 0; k < j.size(); ++k) {
        if (!j[k].is_number()) throw DataError(std::string("field '") + field + "' must contain only numbers");
        v[static_cast<Eigen::Index>(k)] = j[k].get<double>();
    }
    return v;
}

inline nlohmann::json vector_to_json(const Vector& v) {
    auto arr = nlohmann::json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) arr.push_back(v[k]);
    return arr;
}

inline SentenceRecord record_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw DataError("record must be a JSON object");
    SentenceRecord r;
    if (!j.contains("id") || !j["id"].is_string()) throw DataError("missing string field 'id'");
    r.id = j["id"].get<std::string>();
    if (j.contains("text")) {
        if (!j["text"].is_string()) throw DataError("field 'text' must be a string");
        r.text = j["text"].get<std::string>();
    }
    if (j.contains("tokens")) {
        if (!j["tokens"].is_array()) throw DataError("field 'tokens' must be an array of strings");
        for (const auto& t : j["tokens"]) {
            if (!t.is_string()) throw DataError("field 'tokens' must be an array of strings");
            r.tokens.push_back(t.get<std::string>());
        }
    } else {
        r.tokens = tokenize(r.text);
    }
    if (!j.contains("vector")) throw DataError("missing field 'vector'");
    r.vector = json_to_vector(j["vector"], "vector");
    if (j.contains("token_vectors") && !j["token_vectors"].is_null()) {
        if (!j["token_vectors"].is_array()) throw DataError("field 'token_vectors' must be an array of arrays");
        std::vector<Vector> tvs;
        for (const auto& tv : j["token_vectors"]) tvs.push_back(json_to_vector(tv, "token_vectors"));
        r.token_vectors = std::move(tvs);
    }
    return r;
}

inline nlohmann::json record_to_json(const SentenceRecord& r) {
    nlohmann::json j;
    j["id"] = r.id;
    j["text"] = r.text;
    j["tokens"] = r.tokens;
    j["vector"] = vector_to_json(r.vector);
    if (r.token_vectors) {
        auto arr = nlohmann::json::array();
        for (const auto& tv : *r.token_vectors) arr.push_back(vector_to_json(tv));
        j["token_vectors"] = std::move(arr);
    }
    return j;
}

inline bool is_blank(const std::string& line) {
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace detail

/// Reads one JSON record per line. Errors name the 1-based line number.
inline ActivationCorpus ingest(const std::string& path, std::optional<std::size_t> expect_dim = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    if (expect_dim && *expect_dim == 0) throw ArgumentError("expected dimension must be positive");
    ActivationCorpus corpus = expect_dim ? ActivationCorpus(*expect_dim) : ActivationCorpus();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::is_blank(line)) continue;
        try {
            auto j = nlohmann::json::parse(line);
            corpus.add(detail::record_from_json(j));
        } catch (const nlohmann::json::exception& e) {
            throw DataError("line " + std::to_string(line_no) + ": malformed record: " + e.what());
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (corpus.empty()) throw DataError("empty corpus");
    return corpus;
}

inline constexpr const char* kCorpusFormat = "conceptkernel-activations";

/// Writes a header line followed by one record per line.
inline void persist(const ActivationCorpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path + "'");
    nlohmann::json header{{"format", kCorpusFormat}, {"version", 1}, {"dim", corpus.dim()}, {"records", corpus.size()}};
    out << header.dump() << '\n';
    for (const auto& r : corpus) out << detail::record_to_json(r).dump() << '\n';
    if (!out) throw DataError("write failed for '" + path + "'");
}

inline ActivationCorpus load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("corrupt record: missing header in '" + path + "'");
    std::size_t dim = 0;
    std::size_t expected = 0;
    try {
        auto h = nlohmann::json::parse(line);
        if (h.value("format", "") != kCorpusFormat) throw DataError("corrupt record: unrecognized header");
        dim = h.at("dim").get<std::size_t>();
        expected = h.at("records").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("corrupt record: bad header: ") + e.what());
    }
    ActivationCorpus corpus(dim);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        try {
            corpus.add(detail::record_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw DataError("corrupt record at line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (corpus.size() != expected) {
        throw DataError("corrupt record: expected " + std::to_string(expected) + " records, found " +
                        std::to_string(corpus.size()));
    }
    return corpus;
}

}  // namespace ck
