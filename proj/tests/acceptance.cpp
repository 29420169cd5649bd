// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any selected criterion fails.
//
//   acceptance                 run all
//   acceptance --criterion N   run one

#include "conceptkernel/ambiguity.hpp"
#include "conceptkernel/path_kernel.hpp"
#include "conceptkernel/retrieval.hpp"
#include "conceptkernel/semantic_entropy.hpp"
#include "conceptkernel/synthetic.hpp"

#include "cli_pipeline.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <unistd.h>

using namespace ck;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... xs) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, xs...);
    return buf;
}

ConceptMask random_mask(std::size_t n, Rng& rng) {
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < n; ++i) {
        if (rng.uniform() < 0.7) ids.push_back(i);
    }
    return {n, ConceptSet(std::move(ids))};
}

PathStates random_states(std::size_t n_concepts, std::size_t d, std::size_t steps, Rng& rng) {
    PathStates s;
    for (std::size_t j = 0; j < steps; ++j) s.snapshots.push_back(oracle::random_params(n_concepts, d, rng, 0.5));
    return s;
}

double block_error(const std::vector<double>& a, const std::vector<double>& b, std::size_t from, std::size_t to) {
    double diff = 0, na = 0, nb = 0;
    for (std::size_t k = from; k < to; ++k) {
        diff += (a[k] - b[k]) * (a[k] - b[k]);
        na += a[k] * a[k];
        nb += b[k] * b[k];
    }
    const double scale = std::sqrt(std::max(na, nb));
    return scale > 0 ? std::sqrt(diff) / scale : 0.0;
}

// Gradient vs central differences, per parameter block.
Outcome c1() {
    const auto t0 = Clock::now();
    Rng rng(101);
    double worst = 0;
    std::size_t gates = 0;
    for (int c = 0; c < 100; ++c) {
        const std::size_t n = 1 + rng.index(8), d = 1 + rng.index(8);
        const auto p = oracle::random_params(n, d, rng, 0.5);
        const auto mask = random_mask(n, rng);
        // keep every pre-activation clear of the ReLU kink
        Vector h;
        bool clear = false;
        while (!clear) {
            h = oracle::random_vector(d, rng);
            clear = true;
            for (std::size_t i = 0; i < n; ++i) clear &= std::abs(oracle::preactivation(p, h, i)) > 1e-3;
        }
        for (const auto& g : masked_grad(p, h, mask).concepts) {
            std::vector<double> an(g.d_weights.data(), g.d_weights.data() + d);
            an.push_back(g.d_bias);
            an.insert(an.end(), g.d_pre_bias.data(), g.d_pre_bias.data() + d);
            const auto fd = oracle::fd_gate_gradient(p, h, g.index, 1e-5);
            worst = std::max({worst, block_error(an, fd, 0, d), block_error(an, fd, d, d + 1),
                              block_error(an, fd, d + 1, 2 * d + 1)});
            ++gates;
        }
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-4 && secs < 10.0,
            fmt("gradient vs finite differences: 100 cases, %zu gates, max block rel err %.3g (tol 1e-4), %.2fs (limit 10s)",
                gates, worst, secs)};
}

// Kernel vs triple-loop oracle.
Outcome c2() {
    const auto t0 = Clock::now();
    Rng rng(202);
    double worst = 0;
    for (int c = 0; c < 50; ++c) {
        const std::size_t n = 1 + rng.index(8), d = 1 + rng.index(8), steps = 2 + rng.index(7);
        const auto states = c % 2 ? random_states(n, d, steps, rng)
                                  : interpolate(oracle::random_params(n, d, rng, 0.5), steps);
        const auto mask = random_mask(n, rng);
        const auto x = oracle::random_vector(d, rng);
        const auto y = oracle::random_vector(d, rng);
        worst = std::max(worst, oracle::relative_error(path_kernel(x, y, states, mask),
                                                       oracle::path_kernel(x, y, states, mask)));
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-10 && secs < 5.0,
            fmt("kernel vs triple-loop oracle: 50 cases, max rel err %.3g (tol 1e-10), %.3fs (limit 5s)", worst, secs)};
}

// PSD, triangle inequality, self-distance.
Outcome c3() {
    Rng rng(303);
    double worst_ratio = 1e300;
    bool psd = true;
    for (int g = 0; g < 20; ++g) {
        const auto states = random_states(16, 8, 6, rng);
        std::vector<Vector> xs;
        for (int i = 0; i < 10; ++i) xs.push_back(oracle::random_vector(8, rng));
        const auto r = gram(xs, states, ConceptMask::all(16));
        const double ratio = r.max_eigenvalue > 0 ? r.min_eigenvalue / r.max_eigenvalue : r.min_eigenvalue;
        worst_ratio = std::min(worst_ratio, ratio);
        psd &= r.min_eigenvalue >= -1e-8 * std::max(r.max_eigenvalue, 0.0);
    }
    double worst_tri = -1e300;
    const auto states = random_states(16, 8, 6, rng);
    const auto mask = random_mask(16, rng);
    for (int t = 0; t < 1000; ++t) {
        const auto a = oracle::random_vector(8, rng);
        const auto b = oracle::random_vector(8, rng);
        const auto c = oracle::random_vector(8, rng);
        worst_tri = std::max(worst_tri, distance_d2(a, c, states, mask) - distance_d2(a, b, states, mask) -
                                            distance_d2(b, c, states, mask));
    }
    double worst_self = 0;
    std::size_t self_checked = 0;
    for (int t = 0; t < 1000; ++t) {
        const auto x = oracle::random_vector(8, rng);
        if (!(path_kernel(x, x, states, mask) > 0)) continue;
        worst_self = std::max(worst_self, std::abs(distance_d1(x, x, states, mask)));
        ++self_checked;
    }
    const bool pass = psd && worst_tri <= 1e-9 && worst_self <= 1e-12 && self_checked > 0;
    return {pass, fmt("20 Gram matrices, smallest min/max eigenvalue ratio %.3g (need >= -1e-8); D2 triangle over 1000 triples, worst "
                      "excess %.3g (tol 1e-9); D1(x,x) max %.3g over %zu inputs (tol 1e-12)",
                      worst_ratio, worst_tri, worst_self, self_checked)};
}

// K with 128 vs 64 interpolated snapshots, on the trained benchmark SAE and
// random sentence pairs from its corpus.
Outcome c4() {
    const auto bench = synth::make_ambiguity_bench(synth::AmbiguityBenchConfig{});
    const synth::AmbiguityRunConfig rc;
    const auto sae = train(bench.corpus, rc.n_concepts, rc.train);
    const auto s128 = interpolate(sae.params, 128);
    const auto s64 = interpolate(sae.params, 64);
    const auto mask = ConceptMask::all(rc.n_concepts);
    Rng rng(404);
    double worst = 0, sum = 0;
    std::size_t within = 0, pairs = 0;
    while (pairs < 100) {
        const auto& x = bench.corpus[rng.index(bench.corpus.size())].vector;
        const auto& y = bench.corpus[rng.index(bench.corpus.size())].vector;
        const double k128 = path_kernel(x, y, s128, mask);
        if (k128 == 0.0) continue;
        const double rel = std::abs(k128 - path_kernel(x, y, s64, mask)) / std::abs(k128);
        worst = std::max(worst, rel);
        sum += rel;
        within += rel <= 1e-3;
        ++pairs;
    }
    return {worst <= 1e-3, fmt("|K128-K64|/|K128| over 100 sentence pairs: max %.3g, mean %.3g, %zu/100 within tol 1e-3",
                               worst, sum / 100.0, within)};
}

// Semantic entropy against the exact value, and log-sum-exp shift invariance.
Outcome c5() {
    const auto t0 = Clock::now();
    const double mass[3] = {0.5, 0.3, 0.2};
    std::vector<Candidate> pool;
    std::vector<std::pair<std::string, double>> probs;
    std::vector<std::vector<std::string>> partition(3);
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t v = 0; v < 3; ++v) {
            const std::string id = "c" + std::to_string(c) + "_" + std::to_string(v);
            Vector e = Vector::Zero(6);
            e[static_cast<Eigen::Index>(2 * c)] = 1.0;
            e[static_cast<Eigen::Index>(2 * c + 1)] = 0.1 * static_cast<double>(v);
            pool.push_back({id, e, mass[c] / 3.0});
            probs.emplace_back(id, mass[c] / 3.0);
            partition[c].push_back(id);
        }
    }
    CandidatePoolGenerator gen(pool, 0.01);
    Rng rng(505);
    const auto samples = gen.sample(2000, rng);
    const auto r = semantic_entropy(samples, 0.3);
    const double exact = entropy_oracle(probs, partition);
    const double gap = std::abs(r.entropy - exact);

    double shift_err = 0;
    std::vector<double> lp(samples.size());
    for (std::size_t i = 0; i < lp.size(); ++i) lp[i] = -5.0 * rng.uniform();
    const auto p0 = cluster_masses(r.clustering, MassMode::weighted, lp);
    const double h0 = entropy(p0);
    for (double c : {-1000.0, -3.5, 100.0, 1e4}) {
        auto shifted = lp;
        for (auto& x : shifted) x += c;
        const auto p = cluster_masses(r.clustering, MassMode::weighted, shifted);
        for (std::size_t k = 0; k < p.size(); ++k) shift_err = std::max(shift_err, std::abs(p[k] - p0[k]));
        shift_err = std::max(shift_err, std::abs(entropy(p) - h0));
    }
    const double secs = seconds_since(t0);
    return {gap <= 0.05 && shift_err <= 1e-12 && secs < 30.0,
            fmt("m=2000 3-class: H=%.4f vs exact %.4f, gap %.4f bits (tol 0.05), %zu clusters; LSE shift max diff %.3g "
                "(tol 1e-12); %.2fs (limit 30s)",
                r.entropy, exact, gap, r.clustering.k, shift_err, secs)};
}

// Clamp-then-entropy ordering on the 20-question suite.
Outcome c6() {
    const synth::EntropySuiteConfig cfg;
    const auto suite = synth::make_entropy_suite(cfg);
    const auto r = synth::run_entropy_suite(suite, cfg);
    const double m_none = r.means[0], m_random = r.means[1], m_targeted = r.means[2];
    const bool pass = suite.questions.size() == 20 && m_targeted - m_random > 0.1 && m_random - m_none > 0.1;
    return {pass, fmt("%zu questions, mean H none %.3f, random %.3f, targeted %.3f; margins %.3f and %.3f (need > 0.1)",
                      suite.questions.size(), m_none, m_random, m_targeted, m_targeted - m_random, m_random - m_none)};
}

// Ambiguity benchmark end to end.
Outcome c7() {
    const auto t0 = Clock::now();
    const synth::AmbiguityBenchConfig bc;
    const auto bench = synth::make_ambiguity_bench(bc);
    const synth::AmbiguityRunConfig rc;
    const auto run = synth::run_ambiguity_bench(bench, rc);
    const double secs = seconds_since(t0);
    const auto& rep = run.report;
    const bool pass = rep.accuracy >= 0.85 && rep.overlap_fraction <= 0.30 && secs < 300.0;
    return {pass, fmt("%zu ambiguous + %zu unambiguous triplets, N=%zu d=%zu: held-out accuracy %.4f (need >= 0.85), "
                      "overlap %.4f (need <= 0.30), threshold %.4f, %.1fs (limit 300s)",
                      bc.n_ambiguous, bc.n_unambiguous, rc.n_concepts, bc.embedder.dim, rep.accuracy,
                      rep.overlap_fraction, run.model.threshold, secs)};
}

// Planted retrieval benchmark.
Outcome c8() {
    const auto t0 = Clock::now();
    const synth::RetrievalBenchConfig cfg;
    const auto bench = synth::make_retrieval_bench(cfg);
    const auto corpus = index_corpus(bench.docs, bench.sae, [](const std::string& t) -> Vector {
        throw DataError("no embedder for '" + t + "'");
    }, 0.0);
    BoostConfig boost;
    boost.rounds = 50;
    boost.eta = 0.1;
    const auto predictors = train_predictors(bench.train, corpus, bench.sae, boost);
    const auto rep = evaluate_retrieval(bench.test, corpus, bench.sae, predictors, {0.5, 0.3, 0.2});
    const double secs = seconds_since(t0);
    const auto& r05 = rep.rows[0];
    const auto& r02 = rep.rows[2];
    const double gain = r05.api_top1 - r05.api_top1_no_prediction;
    const bool pass = corpus.docs.size() == 50 && rep.test_size == 100 && gain >= 0.10 && r05.api_top1 >= r02.api_top1 &&
                      secs < 180.0;
    return {pass, fmt("%zu docs, %zu test questions: top-1 at rho 0.5 %.2f vs no-prediction %.2f (gain %.2f, need >= 0.10); "
                      "rho 0.3 %.2f, rho 0.2 %.2f; %.2fs (limit 180s)",
                      corpus.docs.size(), rep.test_size, r05.api_top1, r05.api_top1_no_prediction, gain,
                      rep.rows[1].api_top1, r02.api_top1, secs)};
}

// Every subcommand twice, compared byte for byte.
Outcome c9() {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / ("conceptkernel-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(root);
    std::string failed;
    for (const char* run : {"run1", "run2"}) {
        failed = pipeline::run_all(root / run);
        if (!failed.empty()) break;
    }
    Outcome out;
    if (!failed.empty()) {
        out = {false, "subcommand '" + failed + "' failed (logs under " + root.string() + ")"};
        return out;
    }
    const auto a = pipeline::snapshot(root / "run1");
    const auto diff = pipeline::differences(a, pipeline::snapshot(root / "run2"));
    std::string names;
    for (const auto& d : diff) names += (names.empty() ? "" : ", ") + d;
    out = {diff.empty(), fmt("%zu subcommands run twice, %zu files compared, %zu differ%s%s",
                             pipeline::steps().size(), a.size(), diff.size(), diff.empty() ? "" : ": ", names.c_str())};
    if (diff.empty()) fs::remove_all(root);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::function<Outcome()>> criteria{c1, c2, c3, c4, c5, c6, c7, c8, c9};
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            only = std::atoi(argv[++i]);
        } else {
            std::fprintf(stderr, "usage: acceptance [--criterion N]\n");
            return 2;
        }
    }
    if (only < 0 || only > static_cast<int>(criteria.size())) {
        std::fprintf(stderr, "criterion must be 1..%zu\n", criteria.size());
        return 2;
    }
    bool all_pass = true;
    for (std::size_t n = 1; n <= criteria.size(); ++n) {
        if (only != 0 && static_cast<int>(n) != only) continue;
        Outcome o;
        try {
            o = criteria[n - 1]();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        std::printf("%s C%zu %s\n", o.pass ? "PASS" : "FAIL", n, o.detail.c_str());
        std::fflush(stdout);
        all_pass &= o.pass;
    }
    return all_pass ? 0 : 1;
}
