#pragma once

// The SAE encoder read as a kernel machine. For an unmasked concept i the gate
// f_i(h) = ReLU(<w_i, h - b_d> + b_e,i) has encoder-parameter gradient
//
//   d/dw_i = a_i (h - b_d),   d/db_e,i = a_i,   d/db_d = -a_i w_i,   a_i = 1[z_i > 0]
//
// and the path kernel averages, over parameter snapshots, the sum over unmasked
// concepts of the inner products of these per-concept gradients. Decoder
// parameters never reach the gate, so they contribute nothing.

#include "conceptkernel/activation_store.hpp"
#include "conceptkernel/core.hpp"
#include "conceptkernel/sae.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

namespace ck {

/// Straight-line snapshots from the zero initialization to `final_params`:
/// snapshot j = (1 - a_j) * 0 + a_j * final, a_j = j / (n - 1).
inline PathStates interpolate(const SaeParams& final_params, std::size_t n) {
    if (n < 2) throw ArgumentError("interpolation needs n >= 2 (alpha undefined for n=1 under a_j = j/(n-1))");
    final_params.validate();
    PathStates states;
    states.source = PathSource::linear_interpolation;
    states.snapshots.reserve(n);
    const auto zero = SaeParams::zeros(final_params.n_concepts(), final_params.dim());
    for (std::size_t j = 0; j < n; ++j) {
        const double alpha = static_cast<double>(j) / static_cast<double>(n - 1);
        const double keep = 1.0 - alpha;
        SaeParams s;
        s.encoder = keep * zero.encoder + alpha * final_params.encoder;
        s.encoder_bias = keep * zero.encoder_bias + alpha * final_params.encoder_bias;
        s.pre_bias = keep * zero.pre_bias + alpha * final_params.pre_bias;
        s.dictionary = keep * zero.dictionary + alpha * final_params.dictionary;
        states.snapshots.push_back(std::move(s));
    }
    return states;
}

struct ConceptMask {
    std::size_t n_concepts = 0;
    ConceptSet valid;

    ConceptMask() = default;
    ConceptMask(std::size_t n, ConceptSet v) : n_concepts(n), valid(std::move(v)) {
        if (valid.max_index_plus_one() > n_concepts) throw ArgumentError("mask concept index out of range");
    }

    static ConceptMask all(std::size_t n) {
        std::vector<std::size_t> ids(n);
        for (std::size_t i = 0; i < n; ++i) ids[i] = i;
        return {n, ConceptSet(std::move(ids))};
    }
};

struct KernelConfig {
    std::size_t n_steps = 32;
    double activation_threshold = 0.0;
    static constexpr double relu_subgradient_at_zero = 0.0;

    void validate() const {
        if (n_steps < 2) throw ArgumentError("n_steps must be >= 2");
        if (!(activation_threshold >= 0.0)) throw ArgumentError("activation_threshold must be >= 0");
    }
};

/// Gradient of one unmasked gate with respect to the encoder parameters.
struct ConceptGradient {
    std::size_t index = 0;
    bool active = false;
    Vector d_weights;   // w.r.t. w_i (d)
    double d_bias = 0;  // w.r.t. b_e,i
    Vector d_pre_bias;  // w.r.t. b_d (d)
};

struct MaskedGradient {
    std::vector<ConceptGradient> concepts;  // one entry per valid concept, ascending
};

inline void check_mask(const ConceptMask& mask, std::size_t n_concepts) {
    if (mask.n_concepts != n_concepts) {
        throw DataError("mask covers " + std::to_string(mask.n_concepts) + " concepts, SAE has " +
                        std::to_string(n_concepts));
    }
}

inline MaskedGradient masked_grad(const SaeParams& params, const Vector& h, const ConceptMask& mask) {
    require_dim(h, static_cast<Eigen::Index>(params.dim()), "masked_grad");
    check_mask(mask, params.n_concepts());
    const Vector centered = h - params.pre_bias;
    MaskedGradient out;
    out.concepts.reserve(mask.valid.size());
    for (auto i : mask.valid) {
        const auto row = static_cast<Eigen::Index>(i);
        const double z = params.encoder.row(row).dot(centered) + params.encoder_bias[row];
        ConceptGradient g;
        g.index = i;
        g.active = z > 0.0;
        if (g.active) {
            g.d_weights = centered;
            g.d_bias = 1.0;
            g.d_pre_bias = -params.encoder.row(row).transpose();
        } else {
            g.d_weights = Vector::Zero(centered.size());
            g.d_pre_bias = Vector::Zero(centered.size());
        }
        out.concepts.push_back(std::move(g));
    }
    return out;
}

namespace detail {

// Per-snapshot kernel term: sum over unmasked concepts active for both inputs of
// <h_x - b_d, h_y - b_d> + 1 + |w_i|^2.
inline double snapshot_term(const SaeParams& s, const Vector& hx, const Vector& hy, const ConceptMask& mask) {
    const Vector ux = hx - s.pre_bias;
    const Vector uy = hy - s.pre_bias;
    double count = 0.0;
    double weight_terms = 0.0;
    for (auto i : mask.valid) {
        const auto row = static_cast<Eigen::Index>(i);
        const auto w = s.encoder.row(row);
        if (w.dot(ux) + s.encoder_bias[row] > 0.0 && w.dot(uy) + s.encoder_bias[row] > 0.0) {
            count += 1.0;
            weight_terms += 1.0 + w.squaredNorm();
        }
    }
    if (count == 0.0) return 0.0;
    return count * ux.dot(uy) + weight_terms;
}

}  // namespace detail

/// Uniform average over the n snapshots of the masked Jacobian inner product.
inline double path_kernel(const Vector& hx, const Vector& hy, const PathStates& states, const ConceptMask& mask) {
    states.validate();
    require_dim(hx, static_cast<Eigen::Index>(states.dim()), "path_kernel");
    require_dim(hy, static_cast<Eigen::Index>(states.dim()), "path_kernel");
    check_mask(mask, states.n_concepts());
    if (mask.valid.empty()) return 0.0;
    double total = 0.0;
    for (const auto& s : states.snapshots) total += detail::snapshot_term(s, hx, hy, mask);
    return total / static_cast<double>(states.n_steps());
}

inline double path_kernel(const SentenceRecord& x, const SentenceRecord& y, const PathStates& states,
                          const ConceptMask& mask) {
    return path_kernel(x.vector, y.vector, states, mask);
}

/// Concepts a sentence activates that none of its individual tokens activate,
/// united over all example sentences.
inline ConceptMask build_mask(const std::vector<const SentenceRecord*>& examples, const SaeParams& params,
                              double threshold) {
    ConceptSet valid;
    for (const auto* ex : examples) {
        if (!ex->token_vectors || ex->token_vectors->empty()) {
            throw DataError("record '" + ex->id + "' has no token_vectors; cannot build mask");
        }
        ConceptSet sentence = active_concepts(encode(params, ex->vector), threshold);
        ConceptSet from_tokens;
        for (const auto& tv : *ex->token_vectors) from_tokens = from_tokens.unite(active_concepts(encode(params, tv), threshold));
        valid = valid.unite(sentence.minus(from_tokens));
    }
    return {params.n_concepts(), std::move(valid)};
}

inline ConceptMask build_mask(const SentenceRecord& example, const SaeParams& params, double threshold) {
    return build_mask(std::vector<const SentenceRecord*>{&example}, params, threshold);
}

// ---------------------------------------------------------------------------
// Distances
// ---------------------------------------------------------------------------

/// Cosine normalization, 1 - K(x,y) / sqrt(K(x,x) K(y,y)).
inline double distance_d1_from_kernel(double kxx, double kyy, double kxy) {
    if (!(kxx > 0.0) || !(kyy > 0.0)) {
        throw NumericError("sentence activates no unmasked concepts along the path");
    }
    return 1.0 - kxy / std::sqrt(kxx * kyy);
}

/// Kernel-induced distance; the radicand is clipped at 0.
inline double distance_d2_from_kernel(double kxx, double kyy, double kxy) {
    return std::sqrt(std::max(0.0, kxx + kyy - 2.0 * kxy));
}

inline double distance_d1(const Vector& x, const Vector& y, const PathStates& states, const ConceptMask& mask) {
    return distance_d1_from_kernel(path_kernel(x, x, states, mask), path_kernel(y, y, states, mask),
                                   path_kernel(x, y, states, mask));
}

inline double distance_d2(const Vector& x, const Vector& y, const PathStates& states, const ConceptMask& mask) {
    return distance_d2_from_kernel(path_kernel(x, x, states, mask), path_kernel(y, y, states, mask),
                                   path_kernel(x, y, states, mask));
}

inline double distance_d1(const SentenceRecord& x, const SentenceRecord& y, const PathStates& states,
                          const ConceptMask& mask) {
    return distance_d1(x.vector, y.vector, states, mask);
}

inline double distance_d2(const SentenceRecord& x, const SentenceRecord& y, const PathStates& states,
                          const ConceptMask& mask) {
    return distance_d2(x.vector, y.vector, states, mask);
}

// ---------------------------------------------------------------------------
// Gram matrix
// ---------------------------------------------------------------------------

struct GramResult {
    Eigen::MatrixXd matrix;
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;

    [[nodiscard]] bool is_psd(double rel_tol = 1e-8) const {
        return min_eigenvalue >= -rel_tol * std::max(max_eigenvalue, 0.0);
    }
};

/// Path-kernel Gram matrix over `vectors`, rows filled by worker threads. Only
/// the upper triangle is evaluated and mirrored, so the result is exactly symmetric.
inline GramResult gram(const std::vector<Vector>& vectors, const PathStates& states, const ConceptMask& mask,
                       unsigned threads = 0) {
    if (vectors.empty()) throw ArgumentError("gram needs at least one record");
    states.validate();
    check_mask(mask, states.n_concepts());
    for (const auto& v : vectors) require_dim(v, static_cast<Eigen::Index>(states.dim()), "gram");
    const auto m = static_cast<Eigen::Index>(vectors.size());
    GramResult out;
    out.matrix = Eigen::MatrixXd::Zero(m, m);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(m));
    auto worker = [&](unsigned t) {
        for (Eigen::Index i = t; i < m; i += threads) {
            for (Eigen::Index j = i; j < m; ++j) {
                out.matrix(i, j) = path_kernel(vectors[static_cast<std::size_t>(i)],
                                               vectors[static_cast<std::size_t>(j)], states, mask);
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker, t);
        worker(0);
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) out.matrix(i, j) = out.matrix(j, i);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.matrix, Eigen::EigenvaluesOnly);
    out.min_eigenvalue = eig.eigenvalues().minCoeff();
    out.max_eigenvalue = eig.eigenvalues().maxCoeff();
    return out;
}

inline GramResult gram(const std::vector<SentenceRecord>& records, const PathStates& states, const ConceptMask& mask,
                       unsigned threads = 0) {
    std::vector<Vector> vs;
    vs.reserve(records.size());
    for (const auto& r : records) vs.push_back(r.vector);
    return gram(vs, states, mask, threads);
}

}  // namespace ck
