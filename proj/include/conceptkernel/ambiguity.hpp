#pragma once

// Triplet (question, interpretation 1, interpretation 2) distance statistics,
// histogram + KDE threshold calibration and classification.

#include "conceptkernel/activation_store.hpp"
#include "conceptkernel/core.hpp"
#include "conceptkernel/path_kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace ck {

enum class Label { ambiguous, unambiguous };

inline const char* to_string(Label l) { return l == Label::ambiguous ? "ambiguous" : "unambiguous"; }

inline Label label_from_string(const std::string& s) {
    if (s == "ambiguous") return Label::ambiguous;
    if (s == "unambiguous") return Label::unambiguous;
    throw DataError("unknown label '" + s + "'");
}

struct Triplet {
    std::string q;
    std::string i1;
    std::string i2;
    std::optional<Label> label;

    void validate(const ActivationCorpus& corpus) const {
        if (q == i1 || q == i2 || i1 == i2) throw DataError("triplet ids must be distinct");
        (void)corpus.at(q);
        (void)corpus.at(i1);
        (void)corpus.at(i2);
    }
};

struct TripletStats {
    double d_q_i1 = 0;  // D1
    double d_q_i2 = 0;
    double d_i1_i2 = 0;
    double mean_d1 = 0;
    double d2_q_i1 = 0;
    double d2_q_i2 = 0;
    double d2_i1_i2 = 0;
    std::optional<double> ratio_1;  // D2(q,i1) / D2(i1,i2); empty when D2(i1,i2) = 0
    std::optional<double> ratio_2;

    [[nodiscard]] bool ratios_defined() const noexcept { return ratio_1.has_value(); }
};

/// Six kernel evaluations, both distance families, and the derived statistics.
inline TripletStats triplet_stats(const Vector& q, const Vector& i1, const Vector& i2, const PathStates& states,
                                  const ConceptMask& mask) {
    const double kqq = path_kernel(q, q, states, mask);
    const double k11 = path_kernel(i1, i1, states, mask);
    const double k22 = path_kernel(i2, i2, states, mask);
    const double kq1 = path_kernel(q, i1, states, mask);
    const double kq2 = path_kernel(q, i2, states, mask);
    const double k12 = path_kernel(i1, i2, states, mask);

    TripletStats s;
    s.d_q_i1 = distance_d1_from_kernel(kqq, k11, kq1);
    s.d_q_i2 = distance_d1_from_kernel(kqq, k22, kq2);
    s.d_i1_i2 = distance_d1_from_kernel(k11, k22, k12);
    s.mean_d1 = (s.d_q_i1 + s.d_q_i2 + s.d_i1_i2) / 3.0;
    s.d2_q_i1 = distance_d2_from_kernel(kqq, k11, kq1);
    s.d2_q_i2 = distance_d2_from_kernel(kqq, k22, kq2);
    s.d2_i1_i2 = distance_d2_from_kernel(k11, k22, k12);
    if (s.d2_i1_i2 > 0.0) {
        s.ratio_1 = s.d2_q_i1 / s.d2_i1_i2;
        s.ratio_2 = s.d2_q_i2 / s.d2_i1_i2;
    }
    return s;
}

inline TripletStats triplet_stats(const Triplet& t, const ActivationCorpus& corpus, const PathStates& states,
                                  const ConceptMask& mask) {
    t.validate(corpus);
    return triplet_stats(corpus.at(t.q).vector, corpus.at(t.i1).vector, corpus.at(t.i2).vector, states, mask);
}

struct TripletMask {
    ConceptMask mask;
    bool fallback = false;  // the built mask was unusable and every concept is kept
};

/// Mask built from the triplet's own sentences. Falls back to all concepts when
/// the built mask is empty or leaves one of the sentences with a zero self-kernel.
inline TripletMask triplet_mask(const SentenceRecord& q, const SentenceRecord& i1, const SentenceRecord& i2,
                                const SaeParams& params, const PathStates& states, double threshold) {
    TripletMask out{build_mask({&q, &i1, &i2}, params, threshold), false};
    bool usable = !out.mask.valid.empty();
    for (const auto* r : {&q, &i1, &i2}) {
        if (usable && !(path_kernel(r->vector, r->vector, states, out.mask) > 0.0)) usable = false;
    }
    if (!usable) {
        out.mask = ConceptMask::all(params.n_concepts());
        out.fallback = true;
    }
    return out;
}

/// Dense-vector baseline: 1 - cosine similarity.
inline double baseline_cosine_distance(const Vector& x, const Vector& y) {
    if (x.size() != y.size()) throw DataError("baseline_cosine_distance: dimension mismatch");
    const double nx = x.norm();
    const double ny = y.norm();
    if (!(nx > 0.0) || !(ny > 0.0)) throw ArgumentError("baseline_cosine_distance: zero-norm vector");
    return 1.0 - x.dot(y) / (nx * ny);
}

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

inline constexpr std::size_t kHistogramBins = 40;
inline constexpr std::size_t kThresholdGrid = 1000;
inline constexpr std::size_t kMinClassSamples = 5;

struct LabeledValue {
    double value = 0;  // mean D1 of a triplet
    Label label = Label::unambiguous;
};

/// Gaussian kernel density estimate.
struct Kde {
    std::vector<double> samples;
    double bandwidth = 1.0;

    [[nodiscard]] double operator()(double x) const {
        const double norm = 1.0 / (static_cast<double>(samples.size()) * bandwidth * std::sqrt(2.0 * std::numbers::pi));
        double acc = 0.0;
        for (double s : samples) {
            const double u = (x - s) / bandwidth;
            acc += std::exp(-0.5 * u * u);
        }
        return acc * norm;
    }
};

namespace detail {

inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace detail

/// Silverman's rule, 0.9 min(sigma, IQR/1.34) m^(-1/5). Degenerate spreads fall
/// back to whichever of the two is positive, then to a tiny scale-relative width.
inline double silverman_bandwidth(std::vector<double> samples) {
    std::sort(samples.begin(), samples.end());
    const double m = static_cast<double>(samples.size());
    const double mean = detail::mean_of(samples);
    double var = 0.0;
    for (double x : samples) var += (x - mean) * (x - mean);
    const double sigma = samples.size() > 1 ? std::sqrt(var / (m - 1.0)) : 0.0;
    const double iqr = detail::quantile_sorted(samples, 0.75) - detail::quantile_sorted(samples, 0.25);
    double spread = std::min(sigma, iqr / 1.34);
    if (!(spread > 0.0)) spread = std::max(sigma, iqr / 1.34);
    if (!(spread > 0.0)) spread = 1e-6 * std::max(1.0, std::abs(mean));
    return 0.9 * spread * std::pow(m, -0.2);
}

struct ThresholdModel {
    double threshold = 0;
    std::vector<double> bin_edges;                // kHistogramBins + 1 edges
    std::vector<std::size_t> ambiguous_counts;    // per bin
    std::vector<std::size_t> unambiguous_counts;  // per bin
    double ambiguous_bandwidth = 0;
    double unambiguous_bandwidth = 0;
    double ambiguous_mean = 0;
    double unambiguous_mean = 0;
    bool fallback_midpoint = false;  // no density crossing between the class means

    /// Bin index for a value, clamped to the end bins.
    [[nodiscard]] std::size_t bin_of(double v) const {
        const double lo = bin_edges.front();
        const double hi = bin_edges.back();
        if (!(hi > lo)) return 0;
        auto b = static_cast<long>(std::floor((v - lo) / (hi - lo) * static_cast<double>(kHistogramBins)));
        b = std::clamp<long>(b, 0, static_cast<long>(kHistogramBins) - 1);
        return static_cast<std::size_t>(b);
    }
};

inline std::vector<double> equal_width_edges(double lo, double hi, std::size_t bins) {
    if (!(hi > lo)) {
        const double pad = 0.5 * std::max(1e-9, std::abs(lo) * 1e-6);
        lo -= pad;
        hi += pad;
    }
    std::vector<double> edges(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b) {
        edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
    }
    edges.back() = hi;
    return edges;
}

/// Threshold at the crossing of the two class densities between their means.
inline ThresholdModel calibrate(const std::vector<LabeledValue>& labeled) {
    std::vector<double> amb, una;
    for (const auto& lv : labeled) {
        if (!std::isfinite(lv.value)) throw DataError("calibrate: non-finite value");
        (lv.label == Label::ambiguous ? amb : una).push_back(lv.value);
    }
    if (amb.size() < kMinClassSamples || una.size() < kMinClassSamples) {
        throw DataError("calibrate: each class needs at least " + std::to_string(kMinClassSamples) +
                        " samples (ambiguous " + std::to_string(amb.size()) + ", unambiguous " +
                        std::to_string(una.size()) + ")");
    }
    ThresholdModel model;
    double lo = labeled.front().value, hi = labeled.front().value;
    for (const auto& lv : labeled) {
        lo = std::min(lo, lv.value);
        hi = std::max(hi, lv.value);
    }
    model.bin_edges = equal_width_edges(lo, hi, kHistogramBins);
    model.ambiguous_counts.assign(kHistogramBins, 0);
    model.unambiguous_counts.assign(kHistogramBins, 0);
    for (double v : amb) ++model.ambiguous_counts[model.bin_of(v)];
    for (double v : una) ++model.unambiguous_counts[model.bin_of(v)];

    model.ambiguous_mean = detail::mean_of(amb);
    model.unambiguous_mean = detail::mean_of(una);
    model.ambiguous_bandwidth = silverman_bandwidth(amb);
    model.unambiguous_bandwidth = silverman_bandwidth(una);
    const Kde kde_amb{amb, model.ambiguous_bandwidth};
    const Kde kde_una{una, model.unambiguous_bandwidth};

    const double a = std::min(model.ambiguous_mean, model.unambiguous_mean);
    const double b = std::max(model.ambiguous_mean, model.unambiguous_mean);
    const double mid = 0.5 * (a + b);
    std::vector<double> grid(kThresholdGrid), diff(kThresholdGrid);
    for (std::size_t k = 0; k < kThresholdGrid; ++k) {
        grid[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(kThresholdGrid - 1);
        diff[k] = kde_amb(grid[k]) - kde_una(grid[k]);
    }
    std::optional<double> best;
    auto consider = [&](double x) {
        if (!(x > a && x < b)) return;
        if (!best || std::abs(x - mid) < std::abs(*best - mid)) best = x;
    };
    for (std::size_t k = 0; k + 1 < kThresholdGrid && b > a; ++k) {
        if (diff[k] == 0.0) {
            consider(grid[k]);
        } else if ((diff[k] < 0.0) != (diff[k + 1] < 0.0) && diff[k + 1] != 0.0) {
            // the grid point of the pair closer to the crossing
            consider(std::abs(diff[k]) <= std::abs(diff[k + 1]) ? grid[k] : grid[k + 1]);
        }
    }
    if (best) {
        model.threshold = *best;
    } else {
        model.threshold = mid;
        model.fallback_midpoint = true;
    }
    return model;
}

/// Larger mean distance means ambiguous; a tie goes to unambiguous.
inline Label classify(double mean_d1, const ThresholdModel& model) {
    return mean_d1 > model.threshold ? Label::ambiguous : Label::unambiguous;
}

inline Label classify(const TripletStats& stats, const ThresholdModel& model) { return classify(stats.mean_d1, model); }

struct Prediction {
    double value = 0;  // mean D1
    Label predicted = Label::unambiguous;
    Label truth = Label::unambiguous;
};

struct EvaluationReport {
    double accuracy = 0;
    double ambiguous_accuracy = 0;
    double unambiguous_accuracy = 0;
    std::size_t ambiguous_count = 0;
    std::size_t unambiguous_count = 0;
    /// Share of samples lying in the overlap of the two class histograms
    /// (sum over bins of 2 min(n_amb, n_una), divided by the sample count).
    double overlap_fraction = 0;
    std::vector<std::size_t> ambiguous_counts;
    std::vector<std::size_t> unambiguous_counts;
};

inline EvaluationReport evaluate(const std::vector<Prediction>& predictions, const ThresholdModel& model) {
    if (predictions.empty()) throw DataError("evaluate: empty input");
    EvaluationReport r;
    std::size_t correct = 0, amb_correct = 0, una_correct = 0;
    r.ambiguous_counts.assign(kHistogramBins, 0);
    r.unambiguous_counts.assign(kHistogramBins, 0);
    for (const auto& p : predictions) {
        const bool ok = p.predicted == p.truth;
        correct += ok;
        if (p.truth == Label::ambiguous) {
            ++r.ambiguous_count;
            amb_correct += ok;
            ++r.ambiguous_counts[model.bin_of(p.value)];
        } else {
            ++r.unambiguous_count;
            una_correct += ok;
            ++r.unambiguous_counts[model.bin_of(p.value)];
        }
    }
    const double n = static_cast<double>(predictions.size());
    r.accuracy = static_cast<double>(correct) / n;
    r.ambiguous_accuracy = r.ambiguous_count ? static_cast<double>(amb_correct) / static_cast<double>(r.ambiguous_count) : 0.0;
    r.unambiguous_accuracy =
        r.unambiguous_count ? static_cast<double>(una_correct) / static_cast<double>(r.unambiguous_count) : 0.0;
    std::size_t overlap = 0;
    for (std::size_t b = 0; b < kHistogramBins; ++b) {
        overlap += 2 * std::min(r.ambiguous_counts[b], r.unambiguous_counts[b]);
    }
    r.overlap_fraction = static_cast<double>(overlap) / n;
    return r;
}

}  // namespace ck
