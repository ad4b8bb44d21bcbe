// SPDX-License-Identifier: Apache-2.0
#include "cfr/pipeline.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "cfr/error.hpp"
#include "cfr/io.hpp"
#include "cfr/log.hpp"
#include "cfr/reranker.hpp"
#include "cfr/text.hpp"

namespace cfr {

namespace fs = std::filesystem;
using nlohmann::json;

json default_config_json() {
    return json{
        {"paths",
         {{"claims", "claims.jsonl"},
          {"articles", "articles.jsonl"},
          {"chunks", ""},
          {"cache_dir", ""},
          {"output_dir", "out"}}},
        {"chunking", {{"span_tokens", 200}, {"stride", 100}}},
        {"retrieval", {{"k", 10}, {"l", 5}, {"bm25", {{"k1", 1.2}, {"b", 0.75}}}}},
        {"supervision", {{"lerc_positive", 0.7}, {"lerc_negative", 0.3}}},
        {"clients",
         {{"base_url", "mock"},
          {"embed_dim", 128},
          {"embed_batch", 32},
          {"parallelism", 8},
          {"retries", 3},
          {"timeout_ms", 30000}}},
        {"training",
         {{"learning_rate", 2e-5},
          {"batch_size", 32},
          {"epochs", 12},
          {"temperature", 1.0},
          {"seed", 0},
          {"optimizer", "adam"},
          {"in_batch_negatives", true}}},
        {"eval",
         {{"n_examples", 200},
          {"alpha", 0.05},
          {"resamples", 10000},
          {"seed", 0},
          {"metrics", {"equivalence", "relevance", "gold_at_10", "veracity", "mrr"}}}},
        {"synthetic", {{"train_sets", 200}, {"heldout_sets", 100}, {"seed", 7}}}};
}

namespace {

bool same_kind(const json& a, const json& b) {
    if (a.is_number() && b.is_number()) {
        return !(a.is_number_integer() && b.is_number_float());
    }
    return a.type() == b.type();
}

// Overlays src onto dst, rejecting keys dst does not have.
void merge_checked(json& dst, const json& src, const std::string& prefix) {
    if (!src.is_object()) throw ConfigError("config section '" + prefix + "' must be an object");
    for (const auto& [key, value] : src.items()) {
        const auto name = prefix.empty() ? key : prefix + "." + key;
        auto it = dst.find(key);
        if (it == dst.end()) throw ConfigError("unknown config key '" + name + "'");
        if (it->is_object()) {
            merge_checked(*it, value, name);
        } else {
            if (!same_kind(*it, value)) {
                throw ConfigError("config key '" + name + "' expects " + it->type_name() +
                                  ", got " + value.type_name());
            }
            *it = value;
        }
    }
}

fs::path resolve(const json& raw, const char* key, const fs::path& base) {
    const auto s = raw.at("paths").at(key).get<std::string>();
    if (s.empty()) return {};
    fs::path p(s);
    return p.is_absolute() ? p : base / p;
}

void require_file(const fs::path& p, const char* what) {
    if (p.empty()) throw ConfigError(std::string("no ") + what + " path configured");
    if (!fs::exists(p)) throw IoError(std::string(what) + " not found: " + p.string());
}

std::string read_text(const fs::path& p, const char* what) {
    require_file(p, what);
    return read_file(p);
}

}  // namespace

void apply_override(json& config, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
    }
    const std::string key(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    json* node = &config;
    std::string prefix;
    std::size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const auto part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        prefix += (prefix.empty() ? "" : ".") + part;
        auto it = node->find(part);
        if (it == node->end()) throw ConfigError("unknown config key '" + prefix + "'");
        if (dot == std::string::npos) {
            if (it->is_object()) throw ConfigError("config key '" + key + "' is a section");
            if (it->is_string() && !value.is_string()) value = text;
            if (!same_kind(*it, value)) {
                throw ConfigError("config key '" + key + "' expects " + it->type_name() + ", got " +
                                  value.type_name());
            }
            *it = value;
            return;
        }
        node = &*it;
        start = dot + 1;
    }
}

PipelineConfig config_from_json(const json& merged, const fs::path& base_dir) {
    PipelineConfig c;
    c.raw = merged;
    try {
        c.claims = resolve(merged, "claims", base_dir);
        c.articles = resolve(merged, "articles", base_dir);
        c.cache_dir = resolve(merged, "cache_dir", base_dir);
        c.output_dir = resolve(merged, "output_dir", base_dir);
        c.chunks = resolve(merged, "chunks", base_dir);
        if (c.output_dir.empty()) throw ConfigError("paths.output_dir must not be empty");
        if (c.chunks.empty()) c.chunks = c.output_dir / "chunks.jsonl";

        const auto& ch = merged.at("chunking");
        c.chunking.span_tokens = ch.at("span_tokens").get<int>();
        c.chunking.stride = ch.at("stride").get<int>();
        if (c.chunking.span_tokens < 1 || c.chunking.stride < 1 ||
            c.chunking.stride > c.chunking.span_tokens) {
            throw ConfigError("chunking needs 1 <= stride <= span_tokens");
        }

        const auto& r = merged.at("retrieval");
        c.generation.k = r.at("k").get<int>();
        c.generation.l = r.at("l").get<int>();
        c.generation.bm25.k1 = r.at("bm25").at("k1").get<double>();
        c.generation.bm25.b = r.at("bm25").at("b").get<double>();
        if (c.generation.k < 0 || c.generation.l < 0) throw ConfigError("k and l must be >= 0");
        const auto& sv = merged.at("supervision");
        c.generation.thresholds.positive = sv.at("lerc_positive").get<double>();
        c.generation.thresholds.negative = sv.at("lerc_negative").get<double>();

        const auto& cl = merged.at("clients");
        c.base_url = cl.at("base_url").get<std::string>();
        c.embed_dim = cl.at("embed_dim").get<std::size_t>();
        c.embed_batch = cl.at("embed_batch").get<std::size_t>();
        c.parallelism = cl.at("parallelism").get<int>();
        c.retries = cl.at("retries").get<int>();
        c.timeout_ms = cl.at("timeout_ms").get<int>();
        if (c.embed_dim < 1 || c.embed_batch < 1) throw ConfigError("embed sizes must be >= 1");
        if (c.parallelism < 1) throw ConfigError("clients.parallelism must be >= 1");
        if (c.retries < 1) throw ConfigError("clients.retries must be >= 1");
        c.generation.parallelism = c.parallelism;

        const auto& t = merged.at("training");
        c.training.learning_rate = t.at("learning_rate").get<double>();
        c.training.batch_size = t.at("batch_size").get<int>();
        c.training.epochs = t.at("epochs").get<int>();
        c.training.temperature = t.at("temperature").get<double>();
        c.training.seed = t.at("seed").get<std::uint64_t>();
        c.training.optimizer = parse_optimizer(t.at("optimizer").get<std::string>());
        c.training.in_batch_negatives = t.at("in_batch_negatives").get<bool>();
        c.training.validate();

        const auto& e = merged.at("eval");
        c.eval.n_examples = e.at("n_examples").get<std::size_t>();
        c.eval.alpha = e.at("alpha").get<double>();
        c.eval.resamples = e.at("resamples").get<int>();
        c.eval.seed = e.at("seed").get<std::uint64_t>();
        c.eval.parallelism = c.parallelism;
        c.eval.metrics.clear();
        for (const auto& m : e.at("metrics")) c.eval.metrics.push_back(parse_metric(m.get<std::string>()));
        if (c.eval.metrics.empty()) throw ConfigError("eval.metrics must not be empty");
        if (!(c.eval.alpha > 0.0 && c.eval.alpha < 1.0)) throw ConfigError("eval.alpha must be in (0, 1)");
        if (c.eval.resamples < 1) throw ConfigError("eval.resamples must be >= 1");

        const auto& s = merged.at("synthetic");
        c.separable.train_sets = s.at("train_sets").get<std::size_t>();
        c.separable.heldout_sets = s.at("heldout_sets").get<std::size_t>();
        c.separable.seed = s.at("seed").get<std::uint64_t>();
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("invalid config: ") + ex.what());
    } catch (const InvalidArgument& ex) {
        throw ConfigError(ex.what());
    }
    return c;
}

std::string PipelineConfig::digest() const {
    json j = raw;
    j.erase("paths");
    return sha256_hex(j.dump());
}

PipelineConfig load_config(const std::optional<fs::path>& file,
                           const std::vector<std::string>& overrides) {
    json merged = default_config_json();
    if (file) {
        const auto text = read_text(*file, "config file");
        json parsed = json::parse(text, nullptr, false);
        if (parsed.is_discarded()) throw ConfigError("config file is not valid JSON: " + file->string());
        merge_checked(merged, parsed, "");
        const auto base = fs::absolute(*file).parent_path();
        // Anchor the file's paths at its directory before overrides, which are
        // anchored at the working directory.
        for (auto& [key, value] : merged["paths"].items()) {
            const auto s = value.get<std::string>();
            if (!s.empty() && fs::path(s).is_relative()) value = (base / s).lexically_normal().string();
        }
    }
    for (const auto& o : overrides) apply_override(merged, o);
    return config_from_json(merged, fs::current_path());
}

std::unique_ptr<Clients> make_clients(const PipelineConfig& config) {
    auto c = std::make_unique<Clients>();
    if (config.base_url == "mock") {
        c->embedder = std::make_unique<HashEmbedder>(config.embed_dim);
        c->judge = std::make_unique<OverlapJudge>();
    } else {
        auto opts = HttpOptions::from_env();
        if (!config.base_url.empty()) opts.base_url = config.base_url;
        opts.max_attempts = config.retries;
        opts.parallelism = config.parallelism;
        opts.timeout = std::chrono::milliseconds(config.timeout_ms);
        if (!config.cache_dir.empty()) opts.cache = std::make_shared<ResponseCache>(config.cache_dir);
        c->transport = std::make_shared<HttpTransport>(opts);
        c->embedder = std::make_unique<HttpEmbeddingClient>(c->transport, config.embed_batch);
        c->judge = std::make_unique<HttpJudgeClient>(c->transport);
    }
    c->store = std::make_unique<EmbeddingStore>(*c->embedder, config.embed_batch);
    return c;
}

Adapter load_adapter(const std::optional<fs::path>& checkpoint, std::size_t dim) {
    if (!checkpoint) return Adapter::identity(dim);
    require_file(*checkpoint, "checkpoint");
    auto ckpt = load_checkpoint(*checkpoint);
    if (ckpt.adapter.dim() != dim) {
        throw CheckpointError("checkpoint dimension " + std::to_string(ckpt.adapter.dim()) +
                              " does not match embedding dimension " + std::to_string(dim));
    }
    return std::move(ckpt.adapter);
}

namespace {

Dataset load_inputs(const PipelineConfig& config) {
    require_file(config.claims, "claims file");
    require_file(config.articles, "articles file");
    return load_dataset(config.claims, config.articles);
}

std::vector<DocumentSet> load_chunks(const PipelineConfig& config) {
    if (!fs::exists(config.chunks)) {
        throw IoError("chunk file not found: " + config.chunks.string() + " (run 'chunk' first)");
    }
    std::ifstream in(config.chunks);
    return read_document_sets(in);
}

fs::path out_path(const PipelineConfig& config, const std::string& name) {
    return config.output_dir / name;
}

std::size_t embedding_dim(const PipelineConfig& config, Clients& clients) {
    if (config.base_url == "mock") return config.embed_dim;
    if (clients.store->dim() == 0) clients.store->prefetch({"dimension probe"});
    return clients.store->dim();
}

}  // namespace

fs::path cmd_chunk(const PipelineConfig& config) {
    const auto dataset = load_inputs(config);
    const auto sets = build_document_sets(dataset, config.chunking);
    std::ostringstream out;
    write_document_sets(out, sets, config.digest());
    write_file_atomic(config.chunks, out.str());
    std::size_t spans = 0;
    for (const auto& s : sets) spans += s.spans.size();
    log_info("chunk: " + std::to_string(sets.size()) + " document sets, " + std::to_string(spans) +
             " spans");
    return config.chunks;
}

GenDataOutputs cmd_gen_data(const PipelineConfig& config, Strategy strategy, Clients& clients) {
    const auto dataset = load_inputs(config);
    const auto docsets = load_chunks(config);
    const auto result =
        generate_training_set(dataset, docsets, strategy, *clients.judge, config.generation);
    const auto tag = std::string(to_string(strategy));
    GenDataOutputs paths{out_path(config, "train_" + tag + ".jsonl"),
                         out_path(config, "stats_" + tag + ".json")};
    std::ostringstream data;
    write_examples(data, result.examples, config.digest());
    write_file_atomic(paths.data, data.str());

    json stats{{"strategy", tag},
               {"generated", result.generated},
               {"filtered_out", result.filtered_out},
               {"n_examples", result.examples.size()},
               {"n_tuples", explode_all(result.examples).size()},
               {"config_digest", config.digest()}};
    if (!result.examples.empty()) {
        const auto s = compute_stats(result.examples);
        stats["mean_pos"] = s.mean_pos;
        stats["mean_neg"] = s.mean_neg;
    } else {
        stats["mean_pos"] = nullptr;
        stats["mean_neg"] = nullptr;
    }
    write_file_atomic(paths.stats, stats.dump(2) + "\n");
    return paths;
}

std::string train_report_json(const TrainReport& report, const std::string& config_digest) {
    json j{{"epoch_mean_loss", report.epoch_mean_loss},
           {"checkpoint_digest", report.checkpoint_digest},
           {"tuple_count", report.tuple_count},
           {"wall_time_seconds", report.wall_time_seconds},
           {"config_digest", config_digest}};
    return j.dump(2) + "\n";
}

TrainOutputs cmd_train(const PipelineConfig& config, const fs::path& data, bool synthetic,
                       Clients& clients) {
    require_file(data, "training data");
    std::ifstream in(data);
    std::vector<TrainTuple> tuples;
    if (synthetic) {
        tuples = synthetic_tuples(read_synthetic_sets(in), true);
    } else {
        tuples = explode_all(read_examples(in));
    }
    if (tuples.empty()) throw InvalidArgument("training data holds no tuples: " + data.string());
    auto result = train(tuples, config.training, *clients.store);
    const Checkpoint ckpt{result.adapter, config.digest()};
    result.report.checkpoint_digest = sha256_hex(encode_checkpoint(ckpt));
    TrainOutputs paths{out_path(config, "adapter.ckpt"), out_path(config, "train_report.json")};
    save_checkpoint(paths.checkpoint, ckpt);
    write_file_atomic(paths.report, train_report_json(result.report, config.digest()));
    return paths;
}

fs::path cmd_rank(const PipelineConfig& config, const std::optional<fs::path>& checkpoint,
                  Clients& clients) {
    const auto dataset = load_inputs(config);
    const auto docsets = load_chunks(config);
    const auto adapter = load_adapter(checkpoint, embedding_dim(config, clients));
    std::map<std::pair<std::string, int>, const DocumentSet*> by_key;
    for (const auto& d : docsets) by_key[{d.claim_id, d.q_index}] = &d;

    std::vector<std::pair<Query, const DocumentSet*>> jobs;
    std::vector<std::string> texts;
    for (const auto& c : dataset.claims) {
        for (const auto& q : c.subquestions) {
            auto it = by_key.find({c.claim_id, q.q_index});
            if (it == by_key.end() || it->second->spans.empty()) continue;
            jobs.emplace_back(make_query(c, q), it->second);
            texts.push_back(jobs.back().first.text);
            for (const auto& s : it->second->spans) texts.push_back(s.text);
        }
    }
    std::sort(jobs.begin(), jobs.end(), [](const auto& a, const auto& b) {
        return std::tie(a.first.claim_id, a.first.q_index) < std::tie(b.first.claim_id, b.first.q_index);
    });
    clients.store->prefetch(texts);
    std::ostringstream out;
    for (const auto& [query, docset] : jobs) {
        const auto ranked = rank(query, *docset, adapter, *clients.store);
        json entries = json::array();
        for (const auto& e : ranked.entries) entries.push_back({{"doc_id", e.doc_id}, {"score", e.score}});
        out << json{{"claim_id", ranked.claim_id},
                    {"q_index", ranked.q_index},
                    {"entries", std::move(entries)},
                    {"config_digest", config.digest()}}
                   .dump()
            << '\n';
    }
    const auto path = out_path(config, "rankings.jsonl");
    write_file_atomic(path, out.str());
    return path;
}

EvalOutputs cmd_eval(const PipelineConfig& config, const std::optional<fs::path>& checkpoint,
                     const std::optional<fs::path>& baseline, Clients& clients) {
    const auto dataset = load_inputs(config);
    const auto docsets = load_chunks(config);
    const auto adapter = load_adapter(checkpoint, embedding_dim(config, clients));
    std::optional<EvalReport> base;
    if (baseline) base = parse_eval_report(read_text(*baseline, "baseline report"));
    const auto report = run_eval(dataset, docsets, adapter, *clients.store, *clients.judge,
                                 config.eval, config.digest(), base ? &*base : nullptr);
    EvalOutputs paths{out_path(config, "eval_report.json"), out_path(config, "eval_items.csv")};
    write_file_atomic(paths.report, eval_report_json(report));
    std::ostringstream csv;
    write_eval_csv(csv, report);
    csv << "# config_digest=" << config.digest() << '\n';
    write_file_atomic(paths.csv, csv.str());
    return paths;
}

std::vector<fs::path> cmd_synth(const PipelineConfig& config, bool separable, Clients& clients) {
    std::vector<fs::path> written;
    auto write = [&](const std::vector<SyntheticSet>& sets, const std::string& name) {
        std::ostringstream out;
        write_synthetic_sets(out, sets, config.digest());
        const auto path = out_path(config, name);
        write_file_atomic(path, out.str());
        written.push_back(path);
    };
    if (separable) {
        const auto task = make_separable_task(config.separable);
        write(task.train, "separable_train.jsonl");
        write(task.heldout, "separable_heldout.jsonl");
        return written;
    }
    const auto dataset = load_inputs(config);
    std::vector<SyntheticSet> sets;
    std::size_t rejected = 0;
    for (const auto& c : dataset.claims) {
        for (const auto& q : c.subquestions) {
            try {
                sets.push_back(build_synthetic_set(c.text, q.text, *clients.judge));
            } catch (const SchemaError& e) {
                ++rejected;
                log_warn("synth: rejected set for (" + c.claim_id + ", " +
                         std::to_string(q.q_index) + "): " + e.what());
            }
        }
    }
    if (rejected > 0) log_warn("synth: " + std::to_string(rejected) + " sets failed validation");
    write(sets, "synthetic.jsonl");
    return written;
}

fs::path cmd_synth_eval(const PipelineConfig& config, const std::optional<fs::path>& checkpoint,
                        const fs::path& sets_path, Clients& clients) {
    std::istringstream in(read_text(sets_path, "synthetic sets"));
    const auto sets = read_synthetic_sets(in);
    const auto dim = embedding_dim(config, clients);
    const auto adapter = load_adapter(checkpoint, dim);
    auto report = synthetic_report(eval_synthetic(sets, adapter, *clients.store), config.digest());
    if (checkpoint) {
        const auto base = synthetic_report(
            eval_synthetic(sets, Adapter::identity(dim), *clients.store), config.digest());
        attach_significance(report, base, config.eval);
    }
    const auto path = out_path(config, "synthetic_report.json");
    write_file_atomic(path, eval_report_json(report));
    return path;
}

}  // namespace cfr
