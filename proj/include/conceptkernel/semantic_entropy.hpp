#pragma once

// Monte-Carlo semantic entropy: cluster sampled outputs by meaning (cosine
// distance, average-linkage agglomeration), estimate cluster masses by counts or
// by log-sum-exp stabilized sequence probabilities, and take the Shannon entropy.

#include "conceptkernel/core.hpp"
#include "conceptkernel/rng.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace ck {

struct SampleSet {
    std::vector<std::string> texts;
    std::optional<std::vector<double>> log_probs;
    std::vector<Vector> embeddings;

    [[nodiscard]] std::size_t size() const noexcept { return texts.size(); }

    void validate() const {
        if (texts.empty()) throw DataError("sample set is empty");
        if (embeddings.size() != texts.size()) throw DataError("sample set: embeddings and texts differ in length");
        if (log_probs && log_probs->size() != texts.size()) {
            throw DataError("sample set: log_probs and texts differ in length");
        }
    }
};

struct Clustering {
    std::vector<std::size_t> labels;  // cluster of each sample, in 0..k-1
    std::size_t k = 0;
};

/// Average-linkage agglomerative clustering under cosine distance. Merges while
/// the closest pair of clusters is within `distance_threshold`; equal distances
/// are resolved by the smallest (min member of A, min member of B).
inline Clustering cluster(const std::vector<Vector>& embeddings, double distance_threshold) {
    const std::size_t m = embeddings.size();
    if (m == 0) throw ArgumentError("cluster: no embeddings");
    std::vector<Vector> unit;
    unit.reserve(m);
    for (const auto& e : embeddings) {
        const double n = e.norm();
        if (!(n > 0.0) || !std::isfinite(n)) throw ArgumentError("cluster: zero-norm embedding");
        unit.push_back(e / n);
    }

    // Distances between live clusters, indexed by each cluster's smallest member.
    std::vector<double> dist(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const double d = 1.0 - unit[i].dot(unit[j]);
            dist[i * m + j] = d;
            dist[j * m + i] = d;
        }
    }
    std::vector<std::size_t> parent(m), size(m, 1);
    std::vector<bool> alive(m, true);
    for (std::size_t i = 0; i < m; ++i) parent[i] = i;

    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> nearest(m, none);
    auto refresh = [&](std::size_t a) {
        nearest[a] = none;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t b = 0; b < m; ++b) {
            if (b == a || !alive[b]) continue;
            if (dist[a * m + b] < best) {
                best = dist[a * m + b];
                nearest[a] = b;
            }
        }
    };
    for (std::size_t a = 0; a < m; ++a) refresh(a);

    std::size_t live = m;
    while (live > 1) {
        std::size_t lo = none, hi = none;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < m; ++a) {
            if (!alive[a] || nearest[a] == none) continue;
            const std::size_t b = nearest[a];
            const double d = dist[a * m + b];
            const std::size_t x = std::min(a, b), y = std::max(a, b);
            if (d < best || (d == best && (x < lo || (x == lo && y < hi)))) {
                best = d;
                lo = x;
                hi = y;
            }
        }
        if (lo == none || best > distance_threshold) break;

        // Merge hi into lo (lo keeps the smaller member index).
        const double na = static_cast<double>(size[lo]);
        const double nb = static_cast<double>(size[hi]);
        for (std::size_t c = 0; c < m; ++c) {
            if (!alive[c] || c == lo || c == hi) continue;
            const double d = (na * dist[lo * m + c] + nb * dist[hi * m + c]) / (na + nb);
            dist[lo * m + c] = d;
            dist[c * m + lo] = d;
        }
        alive[hi] = false;
        size[lo] += size[hi];
        parent[hi] = lo;
        --live;

        for (std::size_t c = 0; c < m; ++c) {
            if (!alive[c]) continue;
            if (c == lo || nearest[c] == lo || nearest[c] == hi) {
                refresh(c);
            } else if (nearest[c] != none) {
                const double dn = dist[c * m + nearest[c]];
                const double dl = dist[c * m + lo];
                if (dl < dn || (dl == dn && lo < nearest[c])) nearest[c] = lo;
            }
        }
    }

    auto root = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i];
        return i;
    };
    Clustering out;
    out.labels.resize(m);
    std::unordered_map<std::size_t, std::size_t> label_of_root;
    for (std::size_t i = 0; i < m; ++i) {
        const auto r = root(i);
        auto [it, inserted] = label_of_root.try_emplace(r, out.k);
        if (inserted) ++out.k;
        out.labels[i] = it->second;
    }
    return out;
}

enum class MassMode { counts, weighted };

inline constexpr double kMassFloor = 1e-12;

/// Cluster probabilities, clipped at 1e-12 and renormalized.
inline std::vector<double> cluster_masses(const Clustering& clustering, MassMode mode,
                                          const std::optional<std::vector<double>>& log_probs = std::nullopt) {
    const std::size_t m = clustering.labels.size();
    if (m == 0) throw ArgumentError("cluster_masses: empty clustering");
    std::vector<double> p(clustering.k, 0.0);
    if (mode == MassMode::counts) {
        for (auto l : clustering.labels) p.at(l) += 1.0;
        for (auto& x : p) x /= static_cast<double>(m);
    } else {
        if (!log_probs) throw ArgumentError("weighted mode requires log_probs");
        if (log_probs->size() != m) throw ArgumentError("log_probs length differs from the sample count");
        double top = -std::numeric_limits<double>::infinity();
        for (double s : *log_probs) {
            if (!std::isfinite(s)) throw DataError("non-finite log probability");
            top = std::max(top, s);
        }
        std::vector<double> w(m);
        double total = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            w[i] = std::exp((*log_probs)[i] - top);
            total += w[i];
        }
        // summing before dividing keeps equal weights bit-identical to counts
        for (std::size_t i = 0; i < m; ++i) p.at(clustering.labels[i]) += w[i];
        for (auto& x : p) x /= total;
    }
    double total = 0.0;
    for (auto& x : p) {
        x = std::max(x, kMassFloor);
        total += x;
    }
    for (auto& x : p) x /= total;
    return p;
}

/// Shannon entropy in the given base.
inline double entropy(const std::vector<double>& p, double base = 2.0) {
    if (!(base > 1.0)) throw ArgumentError("entropy base must be > 1");
    if (p.empty()) throw ArgumentError("entropy of an empty distribution");
    double sum = 0.0;
    for (double x : p) {
        if (!(x > 0.0)) throw ArgumentError("entropy: components must be positive");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ArgumentError("entropy: probabilities sum to " + std::to_string(sum));
    double h = 0.0;
    for (double x : p) h -= x * std::log(x);
    return h / std::log(base);
}

struct SemanticEntropyResult {
    double entropy = 0;
    std::vector<double> probabilities;
    Clustering clustering;
};

inline SemanticEntropyResult semantic_entropy(const SampleSet& samples, double distance_threshold = 0.3,
                                              MassMode mode = MassMode::counts, double base = 2.0) {
    samples.validate();
    SemanticEntropyResult r;
    r.clustering = cluster(samples.embeddings, distance_threshold);
    r.probabilities = cluster_masses(r.clustering, mode, samples.log_probs);
    r.entropy = entropy(r.probabilities, base);
    return r;
}

/// Exact entropy of the meaning distribution obtained by pushing p(s|x) through
/// an explicit partition of the sequences into meaning classes.
inline double entropy_oracle(const std::vector<std::pair<std::string, double>>& sequence_probs,
                             const std::vector<std::vector<std::string>>& partition, double base = 2.0) {
    if (!(base > 1.0)) throw ArgumentError("entropy base must be > 1");
    std::map<std::string, std::size_t> class_of;
    for (std::size_t c = 0; c < partition.size(); ++c) {
        for (const auto& s : partition[c]) {
            if (!class_of.emplace(s, c).second) throw ArgumentError("sequence '" + s + "' appears in two classes");
        }
    }
    std::vector<double> mass(partition.size(), 0.0);
    double total = 0.0;
    for (const auto& [id, prob] : sequence_probs) {
        if (!(prob >= 0.0 && prob <= 1.0)) throw ArgumentError("probability out of range for '" + id + "'");
        auto it = class_of.find(id);
        if (it == class_of.end()) throw ArgumentError("sequence '" + id + "' belongs to no class");
        mass[it->second] += prob;
        total += prob;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ArgumentError("sequence probabilities sum to " + std::to_string(total));
    double h = 0.0;
    for (double m : mass) {
        if (m > 0.0) h -= m * std::log(m);
    }
    return h / std::log(base);
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

struct Candidate {
    std::string text;
    Vector embedding;
    double probability = 0;
};

/// Draws outputs from a finite candidate pool with fixed probabilities. Each
/// draw reports log(probability) as its sequence score; `jitter` adds isotropic
/// Gaussian noise to the embedding of every draw.
class CandidatePoolGenerator {
  public:
    explicit CandidatePoolGenerator(std::vector<Candidate> pool, double jitter = 0.0)
        : pool_(std::move(pool)), jitter_(jitter) {
        if (pool_.empty()) throw ArgumentError("candidate pool is empty");
        double total = 0.0;
        for (const auto& c : pool_) {
            if (!(c.probability >= 0.0)) throw ArgumentError("candidate probabilities must be >= 0");
            total += c.probability;
        }
        if (!(total > 0.0)) throw ArgumentError("candidate probabilities sum to zero");
        cumulative_.reserve(pool_.size());
        double acc = 0.0;
        for (auto& c : pool_) {
            c.probability /= total;
            acc += c.probability;
            cumulative_.push_back(acc);
        }
        cumulative_.back() = 1.0;
    }

    [[nodiscard]] const std::vector<Candidate>& pool() const noexcept { return pool_; }

    SampleSet sample(std::size_t m, Rng& rng) const {
        SampleSet out;
        out.log_probs.emplace();
        for (std::size_t i = 0; i < m; ++i) {
            const double u = rng.uniform();
            const auto k = static_cast<std::size_t>(
                std::upper_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin());
            const auto& c = pool_[std::min(k, pool_.size() - 1)];
            Vector e = c.embedding;
            if (jitter_ > 0.0) {
                for (Eigen::Index j = 0; j < e.size(); ++j) e[j] += jitter_ * rng.normal();
            }
            out.texts.push_back(c.text);
            out.log_probs->push_back(std::log(c.probability));
            out.embeddings.push_back(std::move(e));
        }
        return out;
    }

  private:
    std::vector<Candidate> pool_;
    std::vector<double> cumulative_;
    double jitter_;
};

}  // namespace ck
