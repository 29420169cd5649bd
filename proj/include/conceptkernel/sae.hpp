#pragma once

// Sparse autoencoder over activation vectors:
//   f(h)  = ReLU(W_e (h - b_d) + b_e)
//   h_hat = b_d + sum_i f_i(h) d_i
// The output bias of the reconstruction is tied to the pre-encoder bias b_d.

#include "conceptkernel/activation_store.hpp"
#include "conceptkernel/core.hpp"
#include "conceptkernel/rng.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace ck {

struct SaeParams {
    Matrix encoder;          // N x d, rows w_i
    Vector encoder_bias;     // N
    Vector pre_bias;         // d, also the reconstruction bias
    Matrix dictionary;       // N x d, rows d_i

    [[nodiscard]] std::size_t n_concepts() const noexcept { return static_cast<std::size_t>(encoder.rows()); }
    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(encoder.cols()); }

    static SaeParams zeros(std::size_t n_concepts, std::size_t dim) {
        const auto n = static_cast<Eigen::Index>(n_concepts);
        const auto d = static_cast<Eigen::Index>(dim);
        return {Matrix::Zero(n, d), Vector::Zero(n), Vector::Zero(d), Matrix::Zero(n, d)};
    }

    void validate() const {
        if (encoder.rows() == 0 || encoder.cols() == 0) throw DataError("SAE has no concepts or zero dimension");
        if (encoder_bias.size() != encoder.rows() || pre_bias.size() != encoder.cols() ||
            dictionary.rows() != encoder.rows() || dictionary.cols() != encoder.cols()) {
            throw DataError("SAE parameter blocks have inconsistent shapes");
        }
        if (!encoder.allFinite() || !encoder_bias.allFinite() || !pre_bias.allFinite() || !dictionary.allFinite()) {
            throw DataError("SAE parameters contain non-finite entries");
        }
    }

    [[nodiscard]] bool same_shape(const SaeParams& o) const noexcept {
        return n_concepts() == o.n_concepts() && dim() == o.dim();
    }

    friend bool operator==(const SaeParams& a, const SaeParams& b) {
        return a.same_shape(b) && a.encoder == b.encoder && a.encoder_bias == b.encoder_bias &&
               a.pre_bias == b.pre_bias && a.dictionary == b.dictionary;
    }
};

/// Gate values f(h), non-negative.
struct ConceptActivations {
    Vector values;

    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }
    double operator[](std::size_t i) const { return values[static_cast<Eigen::Index>(i)]; }
};

inline Vector pre_activations(const SaeParams& params, const Vector& h) {
    return params.encoder * (h - params.pre_bias) + params.encoder_bias;
}

inline ConceptActivations encode(const SaeParams& params, const Vector& h) {
    require_dim(h, params.encoder.cols(), "encode");
    if (!all_finite(h)) throw DataError("encode: non-finite input");
    return {pre_activations(params, h).cwiseMax(0.0)};
}

inline Vector decode(const SaeParams& params, const ConceptActivations& f) {
    if (f.values.size() != params.dictionary.rows()) {
        throw DataError("decode: expected " + std::to_string(params.n_concepts()) + " activations, got " +
                        std::to_string(f.values.size()));
    }
    Vector out = params.pre_bias;
    out.noalias() += params.dictionary.transpose() * f.values;
    return out;
}

struct ClampResult {
    ConceptActivations activations;
    Vector reconstruction;
};

/// Overwrites one concept's gate before decoding.
inline ClampResult clamp(const SaeParams& params, const Vector& h, std::size_t index, double value) {
    if (index >= params.n_concepts()) {
        throw ArgumentError("clamp: concept " + std::to_string(index) + " out of range [0, " +
                            std::to_string(params.n_concepts()) + ")");
    }
    auto f = encode(params, h);
    f.values[static_cast<Eigen::Index>(index)] = value;
    auto rec = decode(params, f);
    return {std::move(f), std::move(rec)};
}

/// Indices with f_i strictly above the threshold.
inline ConceptSet active_concepts(const ConceptActivations& f, double threshold) {
    if (!(threshold >= 0.0)) throw ArgumentError("activation threshold must be >= 0");
    std::vector<std::size_t> ids;
    for (Eigen::Index i = 0; i < f.values.size(); ++i) {
        if (f.values[i] > threshold) ids.push_back(static_cast<std::size_t>(i));
    }
    return ConceptSet(std::move(ids));
}

// ---------------------------------------------------------------------------
// Path states (parameter snapshots along a trajectory)
// ---------------------------------------------------------------------------

enum class PathSource { recorded, linear_interpolation };

struct PathStates {
    std::vector<SaeParams> snapshots;
    PathSource source = PathSource::recorded;

    [[nodiscard]] std::size_t n_steps() const noexcept { return snapshots.size(); }
    [[nodiscard]] std::size_t n_concepts() const { return snapshots.at(0).n_concepts(); }
    [[nodiscard]] std::size_t dim() const { return snapshots.at(0).dim(); }

    void validate() const {
        if (snapshots.size() < 2) throw DataError("path needs at least 2 snapshots");
        for (const auto& s : snapshots) {
            if (!s.same_shape(snapshots.front())) throw DataError("path snapshots disagree in shape");
        }
    }
};

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct SaeTrainConfig {
    double l1_weight = 1e-3;
    std::size_t epochs = 50;
    double learning_rate = 0.05;
    std::size_t batch_size = 16;
    std::uint64_t seed = 0;
    std::size_t snapshot_stride = 10;

    void validate() const {
        if (!(l1_weight >= 0.0) || !std::isfinite(l1_weight)) throw ArgumentError("l1_weight must be >= 0");
        if (epochs == 0) throw ArgumentError("epochs must be positive");
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ArgumentError("learning_rate must be > 0");
        if (batch_size == 0) throw ArgumentError("batch_size must be positive");
        if (snapshot_stride == 0) throw ArgumentError("snapshot_stride must be positive");
    }
};

struct SaeTrainResult {
    SaeParams params;
    PathStates path;
    /// Mean objective over the corpus; entry 0 is before the first step, entry e after epoch e.
    std::vector<double> loss_history;
    /// Mean squared reconstruction error over the corpus, same indexing.
    std::vector<double> reconstruction_history;
};

inline void normalize_dictionary(SaeParams& params) {
    for (Eigen::Index i = 0; i < params.dictionary.rows(); ++i) {
        const double n = params.dictionary.row(i).norm();
        if (n > 0.0) params.dictionary.row(i) /= n;
    }
}

inline SaeParams init_params(std::size_t n_concepts, std::size_t dim, std::uint64_t seed) {
    auto p = SaeParams::zeros(n_concepts, dim);
    Rng rng(derive_seed(seed, "sae-init"));
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    for (Eigen::Index i = 0; i < p.encoder.rows(); ++i) {
        for (Eigen::Index k = 0; k < p.encoder.cols(); ++k) p.encoder(i, k) = rng.uniform(-scale, scale);
    }
    for (Eigen::Index i = 0; i < p.dictionary.rows(); ++i) {
        for (Eigen::Index k = 0; k < p.dictionary.cols(); ++k) p.dictionary(i, k) = rng.uniform(-scale, scale);
    }
    normalize_dictionary(p);
    return p;
}

namespace detail {

struct SaeObjective {
    double total = 0.0;
    double reconstruction = 0.0;
};

inline SaeObjective sae_objective(const SaeParams& p, const std::vector<Vector>& data, double l1) {
    SaeObjective o;
    for (const auto& h : data) {
        const Vector f = pre_activations(p, h).cwiseMax(0.0);
        Vector rec = p.pre_bias;
        rec.noalias() += p.dictionary.transpose() * f;
        const double err = (rec - h).squaredNorm();
        o.reconstruction += err;
        o.total += err + l1 * f.sum();
    }
    o.total /= static_cast<double>(data.size());
    o.reconstruction /= static_cast<double>(data.size());
    return o;
}

}  // namespace detail

/// Mini-batch gradient descent on mean(|h - h_hat|^2 + l1 * |f|_1), decoder rows
/// renormalized after every step. Snapshots every `snapshot_stride` steps, plus
/// the initial and final states.
inline SaeTrainResult train(const std::vector<Vector>& data, std::size_t n_concepts, const SaeTrainConfig& config) {
    config.validate();
    if (data.empty()) throw DataError("empty corpus");
    if (n_concepts == 0) throw ArgumentError("n_concepts must be positive");
    const auto dim = static_cast<std::size_t>(data.front().size());
    for (const auto& h : data) {
        require_dim(h, static_cast<Eigen::Index>(dim), "train");
        if (!all_finite(h)) throw DataError("train: non-finite input");
    }

    SaeTrainResult result;
    SaeParams p = init_params(n_concepts, dim, config.seed);
    result.path.source = PathSource::recorded;
    result.path.snapshots.push_back(p);
    {
        auto o = detail::sae_objective(p, data, config.l1_weight);
        result.loss_history.push_back(o.total);
        result.reconstruction_history.push_back(o.reconstruction);
    }

    Rng rng(derive_seed(config.seed, "sae-batches"));
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const auto n = static_cast<Eigen::Index>(n_concepts);
    const auto d = static_cast<Eigen::Index>(dim);
    Matrix g_enc(n, d), g_dict(n, d);
    Vector g_eb(n), g_pb(d);
    std::size_t step = 0;
    bool last_snapshotted = true;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            const double inv_b = 1.0 / static_cast<double>(stop - start);
            g_enc.setZero();
            g_dict.setZero();
            g_eb.setZero();
            g_pb.setZero();
            double batch_loss = 0.0;
            for (std::size_t k = start; k < stop; ++k) {
                const Vector& h = data[order[k]];
                const Vector centered = h - p.pre_bias;
                const Vector z = p.encoder * centered + p.encoder_bias;
                const Vector f = z.cwiseMax(0.0);
                Vector residual = p.pre_bias - h;
                residual.noalias() += p.dictionary.transpose() * f;
                batch_loss += residual.squaredNorm() + config.l1_weight * f.sum();

                const Vector two_r = 2.0 * residual;
                // dL/df_i = 2 <d_i, r> + l1, gated by the ReLU (subgradient 0 at z = 0).
                Vector gz = p.dictionary * two_r;
                gz.array() += config.l1_weight;
                for (Eigen::Index i = 0; i < n; ++i) {
                    if (!(z[i] > 0.0)) gz[i] = 0.0;
                }
                g_dict.noalias() += f * two_r.transpose();
                g_enc.noalias() += gz * centered.transpose();
                g_eb += gz;
                g_pb += two_r;
                g_pb.noalias() -= p.encoder.transpose() * gz;
            }
            ++step;
            if (!std::isfinite(batch_loss)) {
                throw NumericError("non-finite loss at step " + std::to_string(step));
            }
            const double lr = config.learning_rate * inv_b;
            p.encoder -= lr * g_enc;
            p.dictionary -= lr * g_dict;
            p.encoder_bias -= lr * g_eb;
            p.pre_bias -= lr * g_pb;
            normalize_dictionary(p);
            last_snapshotted = false;
            if (step % config.snapshot_stride == 0) {
                result.path.snapshots.push_back(p);
                last_snapshotted = true;
            }
        }
        auto o = detail::sae_objective(p, data, config.l1_weight);
        if (!std::isfinite(o.total)) throw NumericError("non-finite loss at step " + std::to_string(step));
        result.loss_history.push_back(o.total);
        result.reconstruction_history.push_back(o.reconstruction);
    }
    if (!last_snapshotted) result.path.snapshots.push_back(p);
    result.params = std::move(p);
    return result;
}

inline SaeTrainResult train(const ActivationCorpus& corpus, std::size_t n_concepts, const SaeTrainConfig& config) {
    if (corpus.empty()) throw DataError("empty corpus");
    std::vector<Vector> data;
    data.reserve(corpus.size());
    for (const auto& r : corpus) data.push_back(r.vector);
    return train(data, n_concepts, config);
}

// ---------------------------------------------------------------------------
// Binary parameter file: "SAEK", u32 N, u32 d, u32 snapshot count, then
// row-major little-endian float32 blocks (W_e, b_e, b_d, D) for the final
// parameters followed by each snapshot.
// ---------------------------------------------------------------------------

struct SaeFile {
    SaeParams params;
    std::optional<PathStates> path;
};

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw DataError("corrupt file: truncated header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_f32(std::ostream& out, double v) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
}

inline double get_f32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw DataError("corrupt file: truncated parameter block");
    const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    float f;
    std::memcpy(&f, &bits, 4);
    return static_cast<double>(f);
}

inline void put_params(std::ostream& out, const SaeParams& p) {
    for (Eigen::Index i = 0; i < p.encoder.size(); ++i) put_f32(out, p.encoder.data()[i]);
    for (Eigen::Index i = 0; i < p.encoder_bias.size(); ++i) put_f32(out, p.encoder_bias[i]);
    for (Eigen::Index i = 0; i < p.pre_bias.size(); ++i) put_f32(out, p.pre_bias[i]);
    for (Eigen::Index i = 0; i < p.dictionary.size(); ++i) put_f32(out, p.dictionary.data()[i]);
}

inline SaeParams get_params(std::istream& in, std::size_t n, std::size_t d) {
    auto p = SaeParams::zeros(n, d);
    for (Eigen::Index i = 0; i < p.encoder.size(); ++i) p.encoder.data()[i] = get_f32(in);
    for (Eigen::Index i = 0; i < p.encoder_bias.size(); ++i) p.encoder_bias[i] = get_f32(in);
    for (Eigen::Index i = 0; i < p.pre_bias.size(); ++i) p.pre_bias[i] = get_f32(in);
    for (Eigen::Index i = 0; i < p.dictionary.size(); ++i) p.dictionary.data()[i] = get_f32(in);
    return p;
}

}  // namespace detail

/// Rounds every parameter to float32, the precision of the parameter file.
inline SaeParams quantize_f32(const SaeParams& p) {
    SaeParams q = p;
    for (Eigen::Index i = 0; i < q.encoder.size(); ++i) q.encoder.data()[i] = static_cast<float>(q.encoder.data()[i]);
    for (Eigen::Index i = 0; i < q.dictionary.size(); ++i) {
        q.dictionary.data()[i] = static_cast<float>(q.dictionary.data()[i]);
    }
    q.encoder_bias = ck::quantize_f32(q.encoder_bias);
    q.pre_bias = ck::quantize_f32(q.pre_bias);
    return q;
}

inline void write_sae_file(const std::string& path, const SaeParams& params, const PathStates* states = nullptr) {
    params.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path + "'");
    out.write("SAEK", 4);
    detail::put_u32(out, static_cast<std::uint32_t>(params.n_concepts()));
    detail::put_u32(out, static_cast<std::uint32_t>(params.dim()));
    const std::size_t snaps = states ? states->snapshots.size() : 0;
    detail::put_u32(out, static_cast<std::uint32_t>(snaps));
    detail::put_params(out, params);
    if (states) {
        for (const auto& s : states->snapshots) {
            if (!s.same_shape(params)) throw DataError("snapshot shape differs from final parameters");
            detail::put_params(out, s);
        }
    }
    if (!out) throw DataError("write failed for '" + path + "'");
}

/// Reads a parameter file; when `expect_dim` is given the header must match it.
inline SaeFile read_sae_file(const std::string& path, std::optional<std::size_t> expect_dim = std::nullopt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "SAEK", 4) != 0) throw DataError("unrecognized format");
    const std::uint32_t n = detail::get_u32(in);
    const std::uint32_t d = detail::get_u32(in);
    const std::uint32_t snaps = detail::get_u32(in);
    if (n == 0 || d == 0) throw DataError("corrupt file: zero dimension in header");
    if (expect_dim && *expect_dim != d) {
        throw DataError("dimension header mismatch: file has d=" + std::to_string(d) + ", expected " +
                        std::to_string(*expect_dim));
    }
    SaeFile file;
    file.params = detail::get_params(in, n, d);
    if (snaps > 0) {
        PathStates states;
        states.source = PathSource::recorded;
        for (std::uint32_t s = 0; s < snaps; ++s) states.snapshots.push_back(detail::get_params(in, n, d));
        file.path = std::move(states);
    }
    in.peek();
    if (!in.eof()) throw DataError("corrupt file: trailing bytes");
    file.params.validate();
    return file;
}

inline void export_params(const SaeParams& params, const std::string& path) { write_sae_file(path, params); }

inline SaeParams import_params(const std::string& path, std::optional<std::size_t> expect_dim = std::nullopt) {
    return read_sae_file(path, expect_dim).params;
}

}  // namespace ck
