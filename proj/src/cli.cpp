// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include <ostream>

#include "cfr/error.hpp"
#include "cfr/log.hpp"
#include "cfr/pipeline.hpp"

namespace cfr {

namespace {

std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return "config error";
    if (dynamic_cast<const IoError*>(&e)) return "io error";
    if (dynamic_cast<const ParseError*>(&e)) return "parse error";
    if (dynamic_cast<const SchemaError*>(&e)) return "schema error";
    if (dynamic_cast<const TransportError*>(&e)) return "transport error";
    if (dynamic_cast<const ProtocolError*>(&e)) return "protocol error";
    if (dynamic_cast<const NumericalError*>(&e)) return "numerical error";
    if (dynamic_cast<const CheckpointError*>(&e)) return "checkpoint error";
    if (dynamic_cast<const DegenerateInput*>(&e)) return "degenerate input";
    if (dynamic_cast<const InvalidArgument*>(&e)) return "invalid argument";
    if (dynamic_cast<const Error*>(&e)) return "error";
    return "internal error";
}

LogLevel parse_level(const std::string& s) {
    if (s == "debug") return LogLevel::debug;
    if (s == "info") return LogLevel::info;
    if (s == "warn") return LogLevel::warn;
    if (s == "error") return LogLevel::error;
    return LogLevel::off;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Contrastive fact-checking reranker pipeline", "cfr"};
    app.require_subcommand(1);

    std::optional<std::string> config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::string level = "warn";
    app.add_option("-c,--config", config_path, "Pipeline config JSON");
    app.add_option("--set", overrides, "Override a config key (dotted.key=value)")->take_all();
    app.add_option("--seed", seed, "Sets training.seed and eval.seed");
    app.add_option("--log-level", level, "debug, info, warn, error or off")
        ->check(CLI::IsMember({"debug", "info", "warn", "error", "off"}));

    auto* chunk = app.add_subcommand("chunk", "Chunk articles into document sets");

    auto* gen = app.add_subcommand("gen-data", "Build a contrastive training set");
    std::string strategy_flag;
    gen->add_option("--strategy", strategy_flag, "gold, distill, distill-gold, lerc or cfr")
        ->required()
        ->check(CLI::IsMember({"gold", "distill", "distill-gold", "lerc", "cfr"}));

    auto* trn = app.add_subcommand("train", "Train the adapter");
    std::string data_path;
    bool synthetic_data = false;
    trn->add_option("--data", data_path, "Training-set file (or synthetic sets with --synthetic)")
        ->required();
    trn->add_flag("--synthetic", synthetic_data, "Read --data as synthetic sets");

    std::optional<std::string> checkpoint;
    auto* rnk = app.add_subcommand("rank", "Rank every document set");
    rnk->add_option("--checkpoint", checkpoint, "Adapter checkpoint (identity when absent)");

    auto* evl = app.add_subcommand("eval", "Compute the evaluation metrics");
    std::optional<std::string> baseline;
    evl->add_option("--checkpoint", checkpoint, "Adapter checkpoint (identity when absent)");
    evl->add_option("--baseline", baseline, "Baseline EvalReport for significance testing");

    auto* syn = app.add_subcommand("synth", "Generate synthetic benchmark sets");
    bool separable = false;
    syn->add_flag("--separable", separable, "Write the separable training task instead");

    auto* sev = app.add_subcommand("synth-eval", "MRR over synthetic sets");
    std::string sets_path;
    sev->add_option("--checkpoint", checkpoint, "Adapter checkpoint (identity when absent)");
    sev->add_option("--sets", sets_path, "Synthetic-set file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    }

    try {
        set_log_level(parse_level(level));
        if (seed) {
            overrides.push_back("training.seed=" + std::to_string(*seed));
            overrides.push_back("eval.seed=" + std::to_string(*seed));
        }
        std::optional<std::filesystem::path> cfg_file;
        if (config_path) cfg_file = *config_path;
        const auto config = load_config(cfg_file, overrides);
        auto ckpt = checkpoint ? std::optional<std::filesystem::path>(*checkpoint) : std::nullopt;

        if (chunk->parsed()) {
            out << cmd_chunk(config).string() << "\n";
            return 0;
        }
        auto clients = make_clients(config);
        if (gen->parsed()) {
            const auto p = cmd_gen_data(config, parse_strategy_flag(strategy_flag), *clients);
            out << p.data.string() << "\n" << p.stats.string() << "\n";
        } else if (trn->parsed()) {
            const auto p = cmd_train(config, data_path, synthetic_data, *clients);
            out << p.checkpoint.string() << "\n" << p.report.string() << "\n";
        } else if (rnk->parsed()) {
            out << cmd_rank(config, ckpt, *clients).string() << "\n";
        } else if (evl->parsed()) {
            std::optional<std::filesystem::path> base;
            if (baseline) base = *baseline;
            const auto p = cmd_eval(config, ckpt, base, *clients);
            out << p.report.string() << "\n" << p.csv.string() << "\n";
        } else if (syn->parsed()) {
            for (const auto& p : cmd_synth(config, separable, *clients)) out << p.string() << "\n";
        } else if (sev->parsed()) {
            out << cmd_synth_eval(config, ckpt, sets_path, *clients).string() << "\n";
        }
        return 0;
    } catch (const std::exception& e) {
        err << error_kind(e) << ": " << e.what() << "\n";
        return 1;
    }
}

}  // namespace cfr
