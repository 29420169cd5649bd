// conceptkernel: command-line front end over the header library.
//
//   conceptkernel [--config cfg.json] [--seed S] [--out-dir DIR] <subcommand> [options]
//
// Every report written embeds the tool version and the fully resolved config.
// Errors go to stderr as one JSON line; exit status 2 for usage errors, 1 otherwise.

#include "conceptkernel/activation_store.hpp"
#include "conceptkernel/ambiguity.hpp"
#include "conceptkernel/io.hpp"
#include "conceptkernel/path_kernel.hpp"
#include "conceptkernel/retrieval.hpp"
#include "conceptkernel/sae.hpp"
#include "conceptkernel/semantic_entropy.hpp"
#include "conceptkernel/synthetic.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;
using namespace ck;

const std::vector<std::string> kSubcommands = {
    "ingest",          "embed",           "sae-train",       "sae-import",     "kernel",
    "mask",            "ambiguity-calibrate", "ambiguity-classify", "entropy",  "retrieval-index",
    "retrieval-train", "retrieval-rank",  "retrieval-eval",  "synth-bench"};

struct UsageError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

json default_config() {
    return {
        {"seed", 7},
        {"out_dir", "."},
        {"embedder", {{"dim", 32}, {"seed", nullptr}, {"ngram_orders", {1, 2}}, {"hash_buckets", 1024}}},
        {"sae",
         {{"n_concepts", 64},
          {"l1_weight", 0.003},
          {"epochs", 50},
          {"learning_rate", 0.05},
          {"batch_size", 32},
          {"snapshot_stride", 10}}},
        {"kernel", {{"n_steps", 32}, {"threshold", 0.0}, {"path", "interpolate"}, {"metric", "d1"}, {"threads", 1}}},
        {"ambiguity", {{"mask", "triplet"}}},
        {"entropy", {{"threshold", 0.3}, {"mode", "counts"}, {"base", 2.0}}},
        {"retrieval",
         {{"rho", {0.5, 0.3, 0.2}},
          {"top_k", 5},
          {"predict", true},
          {"rounds", 50},
          {"eta", 0.1},
          {"max_targets", 256},
          {"prob_threshold", 0.5},
          {"activation_threshold", 0.0},
          {"binary_features", false},
          {"similarity", "jaccard"}}},
        {"synth",
         {{"n_ambiguous", 200},
          {"n_unambiguous", 200},
          {"frame_words", 4},
          {"vocabulary", 400},
          {"bigram_pool", 40},
          {"detail_pool", 60},
          {"entropy_questions", 20},
          {"entropy_samples", 200},
          {"retrieval_domains", 10},
          {"retrieval_ops", 5},
          {"retrieval_train_per_doc", 4},
          {"retrieval_test", 100}}},
    };
}

bool same_kind(const json& base, const json& v) {
    if (base.is_null()) return v.is_null() || v.is_number_integer();
    if (base.is_number_integer()) return v.is_number_integer();
    if (base.is_number()) return v.is_number();
    return base.type() == v.type();
}

void merge_config(json& base, const json& patch, const std::string& prefix) {
    if (!patch.is_object()) throw ArgumentError("config field '" + (prefix.empty() ? "<root>" : prefix) + "' must be an object");
    for (const auto& [key, value] : patch.items()) {
        const std::string name = prefix.empty() ? key : prefix + "." + key;
        if (!base.contains(key)) throw ArgumentError("config field '" + name + "' is not recognized");
        auto& slot = base[key];
        if (slot.is_object()) {
            merge_config(slot, value, name);
        } else if (!same_kind(slot, value)) {
            throw ArgumentError("config field '" + name + "' has the wrong type");
        } else {
            slot = value.is_number() && slot.is_number_float() ? json(value.get<double>()) : value;
        }
    }
}

struct Settings {
    json resolved;
    std::uint64_t seed = 7;
    std::string out_dir;
    ToyEmbedderConfig embedder;
    std::size_t n_concepts = 64;
    SaeTrainConfig train;
    KernelConfig kernel;
    std::string path_mode;
    std::string metric;
    std::size_t threads = 1;
    std::string ambiguity_mask;
    double entropy_threshold = 0.3;
    MassMode mass_mode = MassMode::counts;
    double entropy_base = 2.0;
    std::vector<double> rhos;
    std::size_t top_k = 5;
    bool predict = true;
    BoostConfig boost;
    double prob_threshold = 0.5;
    double activation_threshold = 0.0;
    SetSimilarity similarity = SetSimilarity::jaccard;
    json synth;
};

std::size_t get_size(const json& j, const char* section, const char* key, std::size_t min_value) {
    const auto& v = j.at(section).at(key);
    if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(min_value)) {
        throw ArgumentError(std::string("config field '") + section + "." + key + "' must be an integer >= " +
                            std::to_string(min_value));
    }
    return v.get<std::size_t>();
}

double get_real(const json& j, const char* section, const char* key) {
    const auto& v = j.at(section).at(key);
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
        throw ArgumentError(std::string("config field '") + section + "." + key + "' must be a finite number");
    }
    return v.get<double>();
}

std::string get_choice(const json& j, const char* section, const char* key, const std::set<std::string>& allowed) {
    const auto v = j.at(section).at(key).get<std::string>();
    if (!allowed.count(v)) {
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : "|") + a;
        throw ArgumentError(std::string("config field '") + section + "." + key + "' must be one of " + list);
    }
    return v;
}

void check(bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw ArgumentError("config field '" + field + "' " + what);
}

Settings resolve(json cfg) {
    Settings s;
    check(cfg.at("seed").is_number_unsigned() || cfg.at("seed").get<long long>() >= 0, "seed", "must be >= 0");
    s.seed = cfg.at("seed").get<std::uint64_t>();
    s.out_dir = cfg.at("out_dir").get<std::string>();
    check(!s.out_dir.empty(), "out_dir", "must not be empty");

    if (cfg["embedder"]["seed"].is_null()) cfg["embedder"]["seed"] = derive_seed(s.seed, "embedder");
    s.embedder.dim = get_size(cfg, "embedder", "dim", 8);
    s.embedder.seed = cfg["embedder"]["seed"].get<std::uint64_t>();
    s.embedder.hash_buckets = get_size(cfg, "embedder", "hash_buckets", 1);
    s.embedder.ngram_orders.clear();
    for (const auto& o : cfg["embedder"]["ngram_orders"]) {
        check(o.is_number_integer() && o.get<long long>() >= 1, "embedder.ngram_orders", "must hold positive integers");
        s.embedder.ngram_orders.push_back(o.get<std::size_t>());
    }
    try {
        s.embedder.validate();
    } catch (const ArgumentError& e) {
        throw ArgumentError(std::string("config field 'embedder': ") + e.what());
    }

    s.n_concepts = get_size(cfg, "sae", "n_concepts", 1);
    s.train.l1_weight = get_real(cfg, "sae", "l1_weight");
    check(s.train.l1_weight >= 0.0, "sae.l1_weight", "must be >= 0");
    s.train.epochs = get_size(cfg, "sae", "epochs", 1);
    s.train.learning_rate = get_real(cfg, "sae", "learning_rate");
    check(s.train.learning_rate > 0.0, "sae.learning_rate", "must be > 0");
    s.train.batch_size = get_size(cfg, "sae", "batch_size", 1);
    s.train.snapshot_stride = get_size(cfg, "sae", "snapshot_stride", 1);
    s.train.seed = derive_seed(s.seed, "sae");

    s.kernel.n_steps = get_size(cfg, "kernel", "n_steps", 2);
    s.kernel.activation_threshold = get_real(cfg, "kernel", "threshold");
    check(s.kernel.activation_threshold >= 0.0, "kernel.threshold", "must be >= 0");
    s.path_mode = get_choice(cfg, "kernel", "path", {"interpolate", "recorded"});
    s.metric = get_choice(cfg, "kernel", "metric", {"d1", "d2"});
    s.threads = get_size(cfg, "kernel", "threads", 1);

    s.ambiguity_mask = get_choice(cfg, "ambiguity", "mask", {"triplet", "all"});

    s.entropy_threshold = get_real(cfg, "entropy", "threshold");
    check(s.entropy_threshold > 0.0 && s.entropy_threshold <= 2.0, "entropy.threshold", "must lie in (0, 2]");
    s.mass_mode = get_choice(cfg, "entropy", "mode", {"counts", "weighted"}) == "counts" ? MassMode::counts : MassMode::weighted;
    s.entropy_base = get_real(cfg, "entropy", "base");
    check(s.entropy_base > 1.0, "entropy.base", "must be > 1");

    for (const auto& r : cfg["retrieval"]["rho"]) {
        check(r.is_number() && r.get<double>() > 0.0 && r.get<double>() <= 1.0, "retrieval.rho", "values must lie in (0, 1]");
        s.rhos.push_back(r.get<double>());
    }
    check(!s.rhos.empty(), "retrieval.rho", "must not be empty");
    s.top_k = get_size(cfg, "retrieval", "top_k", 1);
    s.predict = cfg["retrieval"]["predict"].get<bool>();
    s.boost.rounds = get_size(cfg, "retrieval", "rounds", 1);
    s.boost.eta = get_real(cfg, "retrieval", "eta");
    check(s.boost.eta > 0.0, "retrieval.eta", "must be > 0");
    s.boost.max_targets = get_size(cfg, "retrieval", "max_targets", 1);
    s.boost.binary_features = cfg["retrieval"]["binary_features"].get<bool>();
    s.prob_threshold = get_real(cfg, "retrieval", "prob_threshold");
    check(s.prob_threshold >= 0.0 && s.prob_threshold < 1.0, "retrieval.prob_threshold", "must lie in [0, 1)");
    s.activation_threshold = get_real(cfg, "retrieval", "activation_threshold");
    check(s.activation_threshold >= 0.0, "retrieval.activation_threshold", "must be >= 0");
    s.similarity = get_choice(cfg, "retrieval", "similarity", {"jaccard", "overlap"}) == "jaccard" ? SetSimilarity::jaccard
                                                                                                   : SetSimilarity::overlap;
    for (const auto& [key, value] : cfg["synth"].items()) {
        check(value.is_number_integer() && value.get<long long>() >= 1, "synth." + key, "must be a positive integer");
    }
    s.synth = cfg["synth"];
    s.resolved = std::move(cfg);
    return s;
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

std::string out_path(const Settings& s, const std::string& explicit_path, const std::string& default_name) {
    if (!explicit_path.empty()) return explicit_path;
    return (std::filesystem::path(s.out_dir) / default_name).string();
}

json report(const Settings& s, const std::string& command, json inputs, json result) {
    return {{"tool", "conceptkernel"},
            {"version", kVersion},
            {"command", command},
            {"config", s.resolved},
            {"inputs", std::move(inputs)},
            {"result", std::move(result)}};
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t\r");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

SaeFile read_sae(const std::string& path) {
    if (path.empty()) throw UsageError("--sae is required");
    return read_sae_file(path);
}

PathStates path_for(const Settings& s, const SaeFile& file) {
    if (s.path_mode == "recorded") {
        if (!file.path) throw DataError("parameter file holds no recorded path; use kernel.path = interpolate");
        file.path->validate();
        return *file.path;
    }
    return interpolate(file.params, s.kernel.n_steps);
}

EmbeddingProvider toy_provider(const Settings& s) {
    const ToyEmbedderConfig cfg = s.embedder;
    return [cfg](const std::string& text) { return toy_embed(text, cfg); };
}

void require_file(const std::string& flag, const std::string& value) {
    if (value.empty()) throw UsageError(flag + " is required");
}

json kde_samples(const std::vector<double>& values, double lo, double hi, std::size_t points) {
    json out = json::array();
    if (values.size() < 2) return out;
    const Kde kde{values, silverman_bandwidth(values)};
    for (std::size_t k = 0; k < points; ++k) {
        const double x = points == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
        out.push_back({x, kde(x)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

struct Args {
    std::string input, out, report, sae, corpus, pairs, mask_from, examples, triplets, model, samples, weights;
    std::string docs, index, train, test, predictors, questions, question_text, kind;
    std::optional<std::size_t> dim;
    bool tokens = false;
    bool evaluate = false;
};

int cmd_ingest(const Settings& s, const Args& a) {
    require_file("--input", a.input);
    const auto corpus = ingest(a.input, a.dim);
    const auto path = out_path(s, a.out, "corpus.jsonl");
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    persist(corpus, path);
    io::write_json(out_path(s, a.report, "ingest_report.json"),
                   report(s, "ingest", {{"input", a.input}, {"out", path}},
                          {{"records", corpus.size()}, {"dim", corpus.dim()}}));
    return 0;
}

int cmd_embed(const Settings& s, const Args& a) {
    require_file("--input", a.input);
    ActivationCorpus corpus(s.embedder.dim);
    io::for_each_jsonl(a.input, [&](const json& j, std::size_t) {
        corpus.add(embed_record(io::require_string(j, "id"), io::require_string(j, "text"), s.embedder, a.tokens));
    });
    if (corpus.empty()) throw DataError("empty corpus");
    const auto path = out_path(s, a.out, "corpus.jsonl");
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    persist(corpus, path);
    io::write_json(out_path(s, a.report, "embed_report.json"),
                   report(s, "embed", {{"input", a.input}, {"out", path}, {"tokens", a.tokens}},
                          {{"records", corpus.size()}, {"dim", corpus.dim()}}));
    return 0;
}

int cmd_sae_train(const Settings& s, const Args& a) {
    require_file("--corpus", a.corpus);
    const auto corpus = io::read_corpus(a.corpus);
    const auto result = train(corpus, s.n_concepts, s.train);
    const auto path = out_path(s, a.out, "sae.bin");
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    write_sae_file(path, result.params, &result.path);
    io::write_json(out_path(s, a.report, "sae_train_report.json"),
                   report(s, "sae-train", {{"corpus", a.corpus}, {"out", path}},
                          {{"n_concepts", result.params.n_concepts()},
                           {"dim", result.params.dim()},
                           {"snapshots", result.path.n_steps()},
                           {"loss_history", result.loss_history},
                           {"reconstruction_history", result.reconstruction_history}}));
    return 0;
}

int cmd_sae_import(const Settings& s, const Args& a) {
    require_file("--weights", a.weights);
    const auto file = read_sae_file(a.weights, a.dim);
    const auto path = out_path(s, a.out, "sae.bin");
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    write_sae_file(path, file.params, file.path ? &*file.path : nullptr);
    io::write_json(out_path(s, a.report, "sae_import_report.json"),
                   report(s, "sae-import", {{"weights", a.weights}, {"out", path}},
                          {{"n_concepts", file.params.n_concepts()},
                           {"dim", file.params.dim()},
                           {"snapshots", file.path ? file.path->n_steps() : 0}}));
    return 0;
}

ConceptMask mask_from_ids(const ActivationCorpus& corpus, const SaeParams& params, const std::string& ids, double threshold) {
    if (ids.empty()) return ConceptMask::all(params.n_concepts());
    std::vector<const SentenceRecord*> examples;
    for (const auto& id : split_list(ids)) examples.push_back(&corpus.at(id));
    if (examples.empty()) throw UsageError("--mask-from names no records");
    return build_mask(examples, params, threshold);
}

int cmd_kernel(const Settings& s, const Args& a) {
    const auto file = read_sae(a.sae);
    require_file("--corpus", a.corpus);
    const auto corpus = io::read_corpus(a.corpus, file.params.dim());
    const auto states = path_for(s, file);
    const auto mask = mask_from_ids(corpus, file.params, a.mask_from, s.kernel.activation_threshold);

    std::vector<std::pair<std::string, std::string>> pairs;
    if (!a.pairs.empty()) {
        std::ifstream in(a.pairs);
        if (!in) throw DataError("cannot open '" + a.pairs + "'");
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (detail::is_blank(line)) continue;
            const auto ids = split_list(line);
            if (ids.size() != 2) throw DataError(a.pairs + " line " + std::to_string(line_no) + ": expected 'id,id'");
            (void)corpus.at(ids[0]);
            (void)corpus.at(ids[1]);
            pairs.emplace_back(ids[0], ids[1]);
        }
    } else {
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            for (std::size_t j = i + 1; j < corpus.size(); ++j) pairs.emplace_back(corpus[i].id, corpus[j].id);
        }
    }

    std::string csv = "id_a,id_b,kernel,d1,d2\n";
    std::size_t undefined_d1 = 0;
    double distance_sum = 0.0;
    std::size_t distance_count = 0;
    for (const auto& [x, y] : pairs) {
        const auto& hx = corpus.at(x).vector;
        const auto& hy = corpus.at(y).vector;
        const double kxx = path_kernel(hx, hx, states, mask);
        const double kyy = path_kernel(hy, hy, states, mask);
        const double kxy = path_kernel(hx, hy, states, mask);
        const double d2 = distance_d2_from_kernel(kxx, kyy, kxy);
        std::string d1_text;
        std::optional<double> d1;
        try {
            d1 = distance_d1_from_kernel(kxx, kyy, kxy);
            d1_text = fmt(*d1);
        } catch (const NumericError&) {
            ++undefined_d1;
        }
        const auto chosen = s.metric == "d1" ? d1 : std::optional<double>(d2);
        if (chosen) {
            distance_sum += *chosen;
            ++distance_count;
        }
        csv += x + "," + y + "," + fmt(kxy) + "," + d1_text + "," + fmt(d2) + "\n";
    }
    const auto path = out_path(s, a.out, "kernel.csv");
    io::write_file(path, csv);
    io::write_json(out_path(s, a.report, "kernel_report.json"),
                   report(s, "kernel",
                          {{"sae", a.sae}, {"corpus", a.corpus}, {"pairs", a.pairs}, {"mask_from", a.mask_from}, {"out", path}},
                          {{"pairs", pairs.size()},
                           {"path_states", states.n_steps()},
                           {"mask", io::to_json(mask.valid)},
                           {"undefined_d1", undefined_d1},
                           {"metric", s.metric},
                           {"mean_distance", distance_count ? json(distance_sum / static_cast<double>(distance_count)) : json(nullptr)}}));
    return 0;
}

int cmd_mask(const Settings& s, const Args& a) {
    const auto file = read_sae(a.sae);
    require_file("--corpus", a.corpus);
    const auto corpus = io::read_corpus(a.corpus, file.params.dim());
    std::vector<const SentenceRecord*> examples;
    if (a.examples.empty()) {
        for (const auto& r : corpus) examples.push_back(&r);
    } else {
        for (const auto& id : split_list(a.examples)) examples.push_back(&corpus.at(id));
    }
    const double theta = s.kernel.activation_threshold;
    json per = json::array();
    for (const auto* ex : examples) {
        const auto one = build_mask(*ex, file.params, theta);
        per.push_back({{"id", ex->id},
                       {"sentence_active", io::to_json(active_concepts(encode(file.params, ex->vector), theta))},
                       {"mask", io::to_json(one.valid)}});
    }
    const auto mask = build_mask(examples, file.params, theta);
    io::write_json(out_path(s, a.out, "mask.json"),
                   report(s, "mask", {{"sae", a.sae}, {"corpus", a.corpus}, {"examples", a.examples}},
                          {{"n_concepts", mask.n_concepts}, {"valid", io::to_json(mask.valid)}, {"per_example", per}}));
    return 0;
}

struct TripletRun {
    std::vector<Triplet> triplets;
    std::vector<TripletStats> stats;
    std::size_t mask_fallbacks = 0;
};

TripletRun triplet_stats_for(const Settings& s, const Args& a) {
    const auto file = read_sae(a.sae);
    require_file("--corpus", a.corpus);
    require_file("--triplets", a.triplets);
    const auto corpus = io::read_corpus(a.corpus, file.params.dim());
    const auto states = path_for(s, file);
    TripletRun run;
    run.triplets = io::read_triplets(a.triplets);
    for (const auto& t : run.triplets) {
        t.validate(corpus);
        const auto& q = corpus.at(t.q);
        const auto& i1 = corpus.at(t.i1);
        const auto& i2 = corpus.at(t.i2);
        ConceptMask mask = ConceptMask::all(file.params.n_concepts());
        if (s.ambiguity_mask == "triplet") {
            auto tm = triplet_mask(q, i1, i2, file.params, states, s.kernel.activation_threshold);
            run.mask_fallbacks += tm.fallback;
            mask = std::move(tm.mask);
        }
        try {
            run.stats.push_back(triplet_stats(q.vector, i1.vector, i2.vector, states, mask));
        } catch (const NumericError& e) {
            throw NumericError("triplet (" + t.q + ", " + t.i1 + ", " + t.i2 + "): " + e.what());
        }
    }
    return run;
}

json histogram_json(const ThresholdModel& m, const std::vector<std::size_t>& amb, const std::vector<std::size_t>& una) {
    return {{"bin_edges", m.bin_edges}, {"ambiguous", amb}, {"unambiguous", una}};
}

int cmd_ambiguity_calibrate(const Settings& s, const Args& a) {
    const auto run = triplet_stats_for(s, a);
    std::vector<LabeledValue> labeled;
    std::vector<double> amb, una;
    for (std::size_t i = 0; i < run.triplets.size(); ++i) {
        const auto& t = run.triplets[i];
        if (!t.label) throw DataError("calibration triplet (" + t.q + ", " + t.i1 + ", " + t.i2 + ") has no label");
        labeled.push_back({run.stats[i].mean_d1, *t.label});
        (*t.label == Label::ambiguous ? amb : una).push_back(run.stats[i].mean_d1);
    }
    const auto model = calibrate(labeled);
    const auto path = out_path(s, a.out, "model.json");
    json result = io::to_json(model);
    result["mask_fallbacks"] = run.mask_fallbacks;
    result["kde"] = {{"ambiguous", kde_samples(amb, model.bin_edges.front(), model.bin_edges.back(), 200)},
                     {"unambiguous", kde_samples(una, model.bin_edges.front(), model.bin_edges.back(), 200)}};
    io::write_json(path, report(s, "ambiguity-calibrate", {{"sae", a.sae}, {"corpus", a.corpus}, {"triplets", a.triplets}},
                                std::move(result)));
    return 0;
}

int cmd_ambiguity_classify(const Settings& s, const Args& a) {
    require_file("--model", a.model);
    const auto model_json = io::read_json(a.model);
    const auto model = io::threshold_model_from_json(model_json.contains("result") ? model_json["result"] : model_json);
    const auto run = triplet_stats_for(s, a);
    json rows = json::array();
    std::vector<Prediction> preds;
    std::vector<double> amb, una;
    bool all_labeled = true;
    for (std::size_t i = 0; i < run.triplets.size(); ++i) {
        const auto& t = run.triplets[i];
        const auto predicted = classify(run.stats[i], model);
        json row = io::to_json(t);
        row["stats"] = io::to_json(run.stats[i]);
        row["predicted"] = to_string(predicted);
        rows.push_back(std::move(row));
        const Label group = t.label ? *t.label : predicted;
        (group == Label::ambiguous ? amb : una).push_back(run.stats[i].mean_d1);
        if (t.label) {
            preds.push_back({run.stats[i].mean_d1, predicted, *t.label});
        } else {
            all_labeled = false;
        }
    }
    json result{{"threshold", model.threshold}, {"mask_fallbacks", run.mask_fallbacks}, {"triplets", rows}};
    std::vector<std::size_t> amb_counts(kHistogramBins, 0), una_counts(kHistogramBins, 0);
    for (double v : amb) ++amb_counts[model.bin_of(v)];
    for (double v : una) ++una_counts[model.bin_of(v)];
    result["histogram"] = histogram_json(model, amb_counts, una_counts);
    result["histogram_grouping"] = all_labeled ? "label" : "label_or_prediction";
    result["kde"] = {{"ambiguous", kde_samples(amb, model.bin_edges.front(), model.bin_edges.back(), 200)},
                     {"unambiguous", kde_samples(una, model.bin_edges.front(), model.bin_edges.back(), 200)}};
    if (!preds.empty()) {
        const auto ev = evaluate(preds, model);
        result["accuracy"] = ev.accuracy;
        result["ambiguous_accuracy"] = ev.ambiguous_accuracy;
        result["unambiguous_accuracy"] = ev.unambiguous_accuracy;
        result["overlap_fraction"] = ev.overlap_fraction;
        result["labeled"] = preds.size();
    } else {
        result["accuracy"] = nullptr;
        result["overlap_fraction"] = nullptr;
        result["labeled"] = 0;
    }
    io::write_json(out_path(s, a.report, "report.json"),
                   report(s, "ambiguity-classify",
                          {{"model", a.model}, {"sae", a.sae}, {"corpus", a.corpus}, {"triplets", a.triplets}},
                          std::move(result)));
    return 0;
}

int cmd_entropy(const Settings& s, const Args& a) {
    require_file("--samples", a.samples);
    const auto samples = io::read_samples(a.samples);
    const auto r = semantic_entropy(samples, s.entropy_threshold, s.mass_mode, s.entropy_base);
    io::write_json(out_path(s, a.out, "entropy.json"),
                   report(s, "entropy", {{"samples", a.samples}},
                          {{"entropy", r.entropy},
                           {"clusters", r.clustering.k},
                           {"probabilities", r.probabilities},
                           {"labels", r.clustering.labels},
                           {"samples", samples.texts.size()}}));
    return 0;
}

int cmd_retrieval_index(const Settings& s, const Args& a) {
    const auto file = read_sae(a.sae);
    require_file("--docs", a.docs);
    auto docs = io::read_api_docs(a.docs);
    const auto corpus = index_corpus(std::move(docs), file.params, toy_provider(s), s.activation_threshold);
    const auto path = out_path(s, a.out, "index.jsonl");
    io::write_index(path, corpus);
    json sizes = json::array();
    for (const auto& d : corpus.docs) sizes.push_back({{"id", d.id}, {"concepts", d.concepts.size()}});
    io::write_json(out_path(s, a.report, "index_report.json"),
                   report(s, "retrieval-index", {{"sae", a.sae}, {"docs", a.docs}, {"out", path}},
                          {{"docs", corpus.docs.size()}, {"concept_counts", sizes}}));
    return 0;
}

int cmd_retrieval_train(const Settings& s, const Args& a) {
    const auto file = read_sae(a.sae);
    require_file("--index", a.index);
    require_file("--train", a.train);
    const auto corpus = io::read_index(a.index);
    const auto train_set = io::read_questions(a.train, toy_provider(s));
    const auto set = train_predictors(train_set, corpus, file.params, s.boost);
    io::write_json(out_path(s, a.out, "predictors.json"),
                   report(s, "retrieval-train", {{"sae", a.sae}, {"index", a.index}, {"train", a.train}}, io::to_json(set)));
    return 0;
}

PredictorSet load_predictors(const Settings& s, const std::string& path) {
    if (!s.predict) return {};
    if (path.empty()) throw UsageError("--predictors is required unless prediction is disabled (--no-predict)");
    const auto j = io::read_json(path);
    return io::predictor_set_from_json(j.contains("result") ? j["result"] : j);
}

int cmd_retrieval_rank(const Settings& s, const Args& a) {
    const auto file = read_sae(a.sae);
    require_file("--index", a.index);
    const auto corpus = io::read_index(a.index);
    const auto predictors = load_predictors(s, a.predictors);
    std::vector<RetrievalExample> questions;
    if (!a.question_text.empty()) {
        questions.push_back({a.question_text, toy_embed(a.question_text, s.embedder), "", ""});
    } else {
        require_file("--questions (or --question-text)", a.questions);
        questions = io::read_questions(a.questions, toy_provider(s));
    }
    const RankConfig cfg{s.rhos.front(), s.top_k, s.predict, s.prob_threshold, s.similarity};
    json rows = json::array();
    for (const auto& q : questions) {
        const auto outcome = rank(q.question, corpus, file.params, predictors, cfg);
        json ranking = json::array();
        for (const auto& r : outcome.ranking) ranking.push_back({{"id", r.id}, {"score", r.score}});
        rows.push_back({{"question_text", q.question_text},
                        {"question_concepts", io::to_json(outcome.question_concepts)},
                        {"predicted", io::to_json(outcome.predicted)},
                        {"ranking", ranking}});
    }
    io::write_json(out_path(s, a.out, "ranking.json"),
                   report(s, "retrieval-rank",
                          {{"sae", a.sae}, {"index", a.index}, {"predictors", a.predictors}, {"questions", a.questions},
                           {"question_text", a.question_text}},
                          {{"rho", cfg.rho}, {"top_k", cfg.top_k}, {"questions", rows}}));
    return 0;
}

int cmd_retrieval_eval(const Settings& s, const Args& a) {
    const auto file = read_sae(a.sae);
    require_file("--index", a.index);
    require_file("--test", a.test);
    const auto corpus = io::read_index(a.index);
    const auto predictors = load_predictors(s, a.predictors);
    const auto test_set = io::read_questions(a.test, toy_provider(s));
    const auto rep = evaluate_retrieval(test_set, corpus, file.params, predictors, s.rhos, s.prob_threshold, s.similarity);
    json rows = json::array();
    std::string csv = "rho,api_top1,domain_top1,api_top1_no_prediction,domain_top1_no_prediction\n";
    for (const auto& r : rep.rows) {
        rows.push_back({{"rho", r.rho},
                        {"api_top1", r.api_top1},
                        {"domain_top1", r.domain_top1},
                        {"api_top1_no_prediction", r.api_top1_no_prediction},
                        {"domain_top1_no_prediction", r.domain_top1_no_prediction}});
        csv += fmt(r.rho) + "," + fmt(r.api_top1) + "," + fmt(r.domain_top1) + "," + fmt(r.api_top1_no_prediction) + "," +
               fmt(r.domain_top1_no_prediction) + "\n";
    }
    io::write_json(out_path(s, a.out, "eval.json"),
                   report(s, "retrieval-eval",
                          {{"sae", a.sae}, {"index", a.index}, {"predictors", a.predictors}, {"test", a.test}},
                          {{"test_size", rep.test_size}, {"prediction_enabled", s.predict}, {"rows", rows}}));
    io::write_file(out_path(s, a.report, "eval.csv"), csv);
    return 0;
}

std::size_t synth_size(const Settings& s, const char* key) { return s.synth.at(key).get<std::size_t>(); }

int cmd_synth_bench(const Settings& s, const Args& a) {
    const std::string kind = a.kind.empty() ? "all" : a.kind;
    if (kind != "all" && kind != "ambiguity" && kind != "entropy" && kind != "retrieval") {
        throw UsageError("--kind must be one of all|ambiguity|entropy|retrieval");
    }
    const std::filesystem::path root(s.out_dir);
    json result = json::object();

    if (kind == "all" || kind == "ambiguity") {
        synth::AmbiguityBenchConfig bc;
        bc.seed = derive_seed(s.seed, "synth-ambiguity");
        bc.n_ambiguous = synth_size(s, "n_ambiguous");
        bc.n_unambiguous = synth_size(s, "n_unambiguous");
        bc.frame_words = synth_size(s, "frame_words");
        bc.vocabulary = synth_size(s, "vocabulary");
        bc.bigram_pool = synth_size(s, "bigram_pool");
        bc.detail_pool = synth_size(s, "detail_pool");
        bc.embedder = s.embedder;
        const auto bench = synth::make_ambiguity_bench(bc);
        const auto dir = root / "ambiguity";
        std::filesystem::create_directories(dir);
        persist(bench.corpus, (dir / "corpus.jsonl").string());
        std::vector<json> rows;
        for (const auto& t : bench.triplets) rows.push_back(io::to_json(t));
        io::write_jsonl((dir / "triplets.jsonl").string(), rows);
        json part{{"records", bench.corpus.size()}, {"triplets", bench.triplets.size()}};
        if (a.evaluate) {
            synth::AmbiguityRunConfig rc;
            rc.n_concepts = s.n_concepts;
            rc.train = s.train;
            rc.n_steps = s.kernel.n_steps;
            rc.mask_threshold = s.kernel.activation_threshold;
            const auto run = synth::run_ambiguity_bench(bench, rc);
            part["threshold"] = run.model.threshold;
            part["accuracy"] = run.report.accuracy;
            part["overlap_fraction"] = run.report.overlap_fraction;
            part["mask_fallbacks"] = run.mask_fallbacks;
        }
        result["ambiguity"] = std::move(part);
    }

    if (kind == "all" || kind == "entropy") {
        synth::EntropySuiteConfig ec;
        ec.seed = derive_seed(s.seed, "synth-entropy");
        ec.questions = synth_size(s, "entropy_questions");
        ec.samples = synth_size(s, "entropy_samples");
        ec.threshold = s.entropy_threshold;
        const auto suite = synth::make_entropy_suite(ec);
        const auto dir = root / "entropy";
        std::filesystem::create_directories(dir);
        json questions = json::array();
        for (const auto& q : suite.questions) {
            json conditions = json::object();
            for (auto kind2 : {synth::ClampKind::none, synth::ClampKind::random, synth::ClampKind::targeted}) {
                const auto samples = synth::entropy_samples(suite, q, kind2, ec);
                const std::string name = q.id + "_" + synth::to_string(kind2) + ".jsonl";
                io::write_jsonl((dir / name).string(), io::samples_to_jsonl(samples));
                conditions[synth::to_string(kind2)] = {
                    {"samples", name},
                    {"reading_probabilities",
                     synth::reading_probabilities(q, synth::condition_activations(suite, q, kind2, ec.clamp_value))}};
            }
            questions.push_back({{"id", q.id},
                                 {"missing_concept", q.missing},
                                 {"random_concept", q.random_concept},
                                 {"conditions", conditions}});
        }
        io::write_json((dir / "suite.json").string(), {{"questions", questions}});
        json part{{"questions", suite.questions.size()}, {"samples_per_condition", ec.samples}};
        if (a.evaluate) {
            const auto r = synth::run_entropy_suite(suite, ec);
            part["mean_entropy"] = {{"none", r.means[0]}, {"random", r.means[1]}, {"targeted", r.means[2]}};
        }
        result["entropy"] = std::move(part);
    }

    if (kind == "all" || kind == "retrieval") {
        synth::RetrievalBenchConfig rc;
        rc.seed = derive_seed(s.seed, "synth-retrieval");
        rc.domains = synth_size(s, "retrieval_domains");
        rc.ops = synth_size(s, "retrieval_ops");
        rc.train_per_doc = synth_size(s, "retrieval_train_per_doc");
        rc.test_questions = synth_size(s, "retrieval_test");
        const auto bench = synth::make_retrieval_bench(rc);
        const auto dir = root / "retrieval";
        std::filesystem::create_directories(dir);
        write_sae_file((dir / "sae.bin").string(), bench.sae);
        std::vector<json> docs, train_rows, test_rows;
        for (const auto& d : bench.docs) docs.push_back(io::to_json(d, false));
        for (const auto& e : bench.train) train_rows.push_back(io::to_json(e, true));
        for (const auto& e : bench.test) test_rows.push_back(io::to_json(e, true));
        io::write_jsonl((dir / "docs.jsonl").string(), docs);
        io::write_jsonl((dir / "train.jsonl").string(), train_rows);
        io::write_jsonl((dir / "test.jsonl").string(), test_rows);
        json part{{"docs", bench.docs.size()}, {"train", bench.train.size()}, {"test", bench.test.size()},
                  {"n_concepts", rc.n_concepts()}};
        if (a.evaluate) {
            const EmbeddingProvider none = [](const std::string&) -> Vector {
                throw DataError("synthetic retrieval documents carry vectors");
            };
            const auto corpus = index_corpus(bench.docs, bench.sae, none, s.activation_threshold);
            const auto predictors = train_predictors(bench.train, corpus, bench.sae, s.boost);
            const auto rep =
                evaluate_retrieval(bench.test, corpus, bench.sae, predictors, s.rhos, s.prob_threshold, s.similarity);
            json rows = json::array();
            for (const auto& r : rep.rows) {
                rows.push_back({{"rho", r.rho}, {"api_top1", r.api_top1}, {"api_top1_no_prediction", r.api_top1_no_prediction}});
            }
            part["rows"] = rows;
        }
        result["retrieval"] = std::move(part);
    }

    io::write_json((root / "bench_report.json").string(),
                   report(s, "synth-bench", {{"kind", kind}, {"evaluate", a.evaluate}}, std::move(result)));
    return 0;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

void print_error(const std::string& kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
}

/// Folds the two-word spellings ("sae train") into the hyphenated names.
std::vector<std::string> normalize_args(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
        if ((args[i] == "sae" || args[i] == "ambiguity" || args[i] == "retrieval") && args[i + 1].rfind('-', 0) != 0) {
            args[i] += "-" + args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i) + 1);
            break;
        }
    }
    return args;
}

std::optional<std::string> find_subcommand(const std::vector<std::string>& args) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        const auto& t = args[i];
        if (t.rfind('-', 0) == 0) {
            if ((t == "--config" || t == "--seed" || t == "--out-dir") && t.find('=') == std::string::npos) ++i;
            continue;
        }
        return t;
    }
    return std::nullopt;
}

int run(int argc, char** argv) {
    const auto args = normalize_args(argc, argv);
    const auto sub = find_subcommand(args);
    if (sub && std::find(kSubcommands.begin(), kSubcommands.end(), *sub) == kSubcommands.end()) {
        print_error("usage", "unknown subcommand '" + *sub + "'");
        return 2;
    }

    CLI::App app{"Concept-level path kernels over sparse autoencoder features", "conceptkernel"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--seed", seed, "top-level seed");
    app.add_option("--out-dir", out_dir, "directory for default output paths");

    Args a;
    // flag overrides, applied on top of the config file
    std::optional<std::size_t> n_concepts, epochs, batch_size, n_steps, top_k, rounds, threads;
    std::optional<double> l1, lr, threshold, base, eta, prob_threshold;
    std::optional<std::string> metric, mode, rho, path_mode, mask_mode;
    bool no_predict = false;

    auto add = [&](const std::string& name, const std::string& help) { return app.add_subcommand(name, help); };
    auto* ingest_cmd = add("ingest", "validate an activation JSONL file and persist it");
    ingest_cmd->add_option("--input", a.input)->required();
    ingest_cmd->add_option("--dim", a.dim);
    ingest_cmd->add_option("--out", a.out);
    ingest_cmd->add_option("--report", a.report);

    auto* embed_cmd = add("embed", "embed {id, text} lines with the hashed n-gram embedder");
    embed_cmd->add_option("--input", a.input)->required();
    embed_cmd->add_flag("--tokens", a.tokens, "also store per-token vectors");
    embed_cmd->add_option("--out", a.out);
    embed_cmd->add_option("--report", a.report);

    auto* train_cmd = add("sae-train", "train a sparse autoencoder on a corpus");
    train_cmd->add_option("--corpus", a.corpus)->required();
    train_cmd->add_option("--n-concepts", n_concepts);
    train_cmd->add_option("--l1", l1);
    train_cmd->add_option("--epochs", epochs);
    train_cmd->add_option("--lr", lr);
    train_cmd->add_option("--batch-size", batch_size);
    train_cmd->add_option("--out", a.out);
    train_cmd->add_option("--report", a.report);

    auto* import_cmd = add("sae-import", "validate and re-export a parameter file");
    import_cmd->add_option("--weights", a.weights)->required();
    import_cmd->add_option("--dim", a.dim);
    import_cmd->add_option("--out", a.out);
    import_cmd->add_option("--report", a.report);

    auto* kernel_cmd = add("kernel", "path kernel and distances for pairs of records");
    kernel_cmd->add_option("--sae", a.sae)->required();
    kernel_cmd->add_option("--corpus", a.corpus)->required();
    kernel_cmd->add_option("--pairs", a.pairs, "file of 'id,id' lines (default: all pairs)");
    kernel_cmd->add_option("--mask-from", a.mask_from, "comma-separated example ids");
    kernel_cmd->add_option("--n-steps", n_steps);
    kernel_cmd->add_option("--threshold", threshold);
    kernel_cmd->add_option("--metric", metric);
    kernel_cmd->add_option("--path", path_mode, "interpolate|recorded");
    kernel_cmd->add_option("--out", a.out);
    kernel_cmd->add_option("--report", a.report);

    auto* mask_cmd = add("mask", "concept mask from example sentences");
    mask_cmd->add_option("--sae", a.sae)->required();
    mask_cmd->add_option("--corpus", a.corpus)->required();
    mask_cmd->add_option("--examples", a.examples, "comma-separated ids (default: all records)");
    mask_cmd->add_option("--threshold", threshold);
    mask_cmd->add_option("--out", a.out);

    for (auto* c : {add("ambiguity-calibrate", "fit the ambiguity threshold on labeled triplets"),
                    add("ambiguity-classify", "classify triplets with a fitted threshold")}) {
        c->add_option("--sae", a.sae)->required();
        c->add_option("--corpus", a.corpus)->required();
        c->add_option("--triplets", a.triplets)->required();
        c->add_option("--n-steps", n_steps);
        c->add_option("--threshold", threshold);
        c->add_option("--path", path_mode, "interpolate|recorded");
        c->add_option("--mask", mask_mode, "triplet|all");
        if (c->get_name() == "ambiguity-calibrate") {
            c->add_option("--out", a.out);
        } else {
            c->add_option("--model", a.model)->required();
            c->add_option("--report", a.report);
        }
    }

    auto* entropy_cmd = add("entropy", "semantic entropy of a sample file");
    entropy_cmd->add_option("--samples", a.samples)->required();
    entropy_cmd->add_option("--threshold", threshold);
    entropy_cmd->add_option("--mode", mode, "counts|weighted");
    entropy_cmd->add_option("--base", base);
    entropy_cmd->add_option("--out", a.out);

    auto* index_cmd = add("retrieval-index", "concept sets for API documents");
    index_cmd->add_option("--sae", a.sae)->required();
    index_cmd->add_option("--docs", a.docs)->required();
    index_cmd->add_option("--threshold", threshold);
    index_cmd->add_option("--out", a.out);
    index_cmd->add_option("--report", a.report);

    auto* rtrain_cmd = add("retrieval-train", "fit missing-concept predictors");
    rtrain_cmd->add_option("--sae", a.sae)->required();
    rtrain_cmd->add_option("--index", a.index)->required();
    rtrain_cmd->add_option("--train", a.train)->required();
    rtrain_cmd->add_option("--rounds", rounds);
    rtrain_cmd->add_option("--eta", eta);
    rtrain_cmd->add_option("--out", a.out);

    auto* rank_cmd = add("retrieval-rank", "rank API documents for questions");
    auto* eval_cmd = add("retrieval-eval", "top-1 accuracy over a labeled test set");
    for (auto* c : {rank_cmd, eval_cmd}) {
        c->add_option("--sae", a.sae)->required();
        c->add_option("--index", a.index)->required();
        c->add_option("--predictors", a.predictors);
        c->add_option("--rho", rho, "comma-separated fractions");
        c->add_flag("--no-predict", no_predict);
        c->add_option("--prob-threshold", prob_threshold);
        c->add_option("--out", a.out);
    }
    rank_cmd->add_option("--questions", a.questions);
    rank_cmd->add_option("--question-text", a.question_text);
    rank_cmd->add_option("--top-k", top_k);
    eval_cmd->add_option("--test", a.test)->required();
    eval_cmd->add_option("--report", a.report, "CSV table path");

    auto* synth_cmd = add("synth-bench", "write the synthetic benchmark datasets");
    synth_cmd->add_option("--kind", a.kind, "all|ambiguity|entropy|retrieval");
    synth_cmd->add_flag("--evaluate", a.evaluate, "also run the pipelines and record their metrics");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help, --version
        print_error("usage", e.what());
        return 2;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    json cfg = default_config();
    if (!config_path.empty()) merge_config(cfg, io::read_json(config_path), "");
    if (seed) cfg["seed"] = *seed;
    if (!out_dir.empty()) cfg["out_dir"] = out_dir;
    if (n_concepts) cfg["sae"]["n_concepts"] = *n_concepts;
    if (l1) cfg["sae"]["l1_weight"] = *l1;
    if (epochs) cfg["sae"]["epochs"] = *epochs;
    if (lr) cfg["sae"]["learning_rate"] = *lr;
    if (batch_size) cfg["sae"]["batch_size"] = *batch_size;
    if (n_steps) cfg["kernel"]["n_steps"] = *n_steps;
    if (path_mode) cfg["kernel"]["path"] = *path_mode;
    if (metric) cfg["kernel"]["metric"] = *metric;
    if (mask_mode) cfg["ambiguity"]["mask"] = *mask_mode;
    if (threshold) {
        if (command == "entropy") {
            cfg["entropy"]["threshold"] = *threshold;
        } else if (command == "retrieval-index") {
            cfg["retrieval"]["activation_threshold"] = *threshold;
        } else {
            cfg["kernel"]["threshold"] = *threshold;
        }
    }
    if (mode) cfg["entropy"]["mode"] = *mode;
    if (base) cfg["entropy"]["base"] = *base;
    if (rho) {
        json list = json::array();
        for (const auto& item : split_list(*rho)) {
            try {
                std::size_t used = 0;
                const double v = std::stod(item, &used);
                if (used != item.size()) throw std::invalid_argument(item);
                list.push_back(v);
            } catch (const std::logic_error&) {
                throw ArgumentError("config field 'retrieval.rho': cannot parse '" + item + "'");
            }
        }
        cfg["retrieval"]["rho"] = list;
    }
    if (top_k) cfg["retrieval"]["top_k"] = *top_k;
    if (no_predict) cfg["retrieval"]["predict"] = false;
    if (rounds) cfg["retrieval"]["rounds"] = *rounds;
    if (eta) cfg["retrieval"]["eta"] = *eta;
    if (prob_threshold) cfg["retrieval"]["prob_threshold"] = *prob_threshold;
    const Settings s = resolve(std::move(cfg));

    if (command == "ingest") return cmd_ingest(s, a);
    if (command == "embed") return cmd_embed(s, a);
    if (command == "sae-train") return cmd_sae_train(s, a);
    if (command == "sae-import") return cmd_sae_import(s, a);
    if (command == "kernel") return cmd_kernel(s, a);
    if (command == "mask") return cmd_mask(s, a);
    if (command == "ambiguity-calibrate") return cmd_ambiguity_calibrate(s, a);
    if (command == "ambiguity-classify") return cmd_ambiguity_classify(s, a);
    if (command == "entropy") return cmd_entropy(s, a);
    if (command == "retrieval-index") return cmd_retrieval_index(s, a);
    if (command == "retrieval-train") return cmd_retrieval_train(s, a);
    if (command == "retrieval-rank") return cmd_retrieval_rank(s, a);
    if (command == "retrieval-eval") return cmd_retrieval_eval(s, a);
    if (command == "synth-bench") return cmd_synth_bench(s, a);
    throw UsageError("unknown subcommand '" + command + "'");
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const UsageError& e) {
        print_error("usage", e.what());
        return 2;
    } catch (const ArgumentError& e) {
        print_error("config", e.what());
        return 1;
    } catch (const DataError& e) {
        print_error("data", e.what());
        return 1;
    } catch (const NumericError& e) {
        print_error("numeric", e.what());
        return 1;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return 1;
    }
}
