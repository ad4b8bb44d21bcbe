// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cfr/bm25.hpp"
#include "cfr/clients.hpp"
#include "cfr/corpus.hpp"
#include "cfr/evaluation.hpp"
#include "cfr/http_clients.hpp"
#include "cfr/supervision.hpp"
#include "cfr/trainer.hpp"

namespace cfr {

/// Every setting with its default value. Config files and --set overrides may
/// only name keys present here.
nlohmann::json default_config_json();

/// Applies "dotted.key=value". The value is parsed as JSON when it parses,
/// otherwise taken as a string. Throws ConfigError on an unknown key or a
/// type change.
void apply_override(nlohmann::json& config, std::string_view assignment);

struct PipelineConfig {
    nlohmann::json raw;  // defaults merged with the file and overrides

    std::filesystem::path claims;
    std::filesystem::path articles;
    std::filesystem::path chunks;
    std::filesystem::path cache_dir;  // empty: no response cache
    std::filesystem::path output_dir;

    ChunkConfig chunking;
    GenerationConfig generation;

    std::string base_url;  // "mock" selects the offline clients
    std::size_t embed_dim = 128;
    std::size_t embed_batch = 32;
    int parallelism = 8;
    int retries = 3;
    int timeout_ms = 30000;

    TrainConfig training;
    EvalConfig eval;
    SeparableTaskConfig separable;

    /// SHA-256 of the canonical JSON of every setting except the "paths"
    /// section. Relocating files leaves it unchanged.
    std::string digest() const;
};

/// Merges defaults, the optional file and the overrides, then validates.
/// Relative paths from the file resolve against its directory; relative paths
/// from overrides resolve against the working directory.
PipelineConfig load_config(const std::optional<std::filesystem::path>& file,
                           const std::vector<std::string>& overrides = {});

PipelineConfig config_from_json(const nlohmann::json& merged,
                                const std::filesystem::path& base_dir);

/// Embedding and judge clients selected by the config, plus the session
/// embedding store.
struct Clients {
    std::shared_ptr<HttpTransport> transport;
    std::unique_ptr<EmbeddingClient> embedder;
    std::unique_ptr<JudgeClient> judge;
    std::unique_ptr<EmbeddingStore> store;
};

std::unique_ptr<Clients> make_clients(const PipelineConfig& config);

// Commands. Each writes into config.output_dir and returns the written paths.

std::filesystem::path cmd_chunk(const PipelineConfig& config);

struct GenDataOutputs {
    std::filesystem::path data;
    std::filesystem::path stats;
};
GenDataOutputs cmd_gen_data(const PipelineConfig& config, Strategy strategy, Clients& clients);

struct TrainOutputs {
    std::filesystem::path checkpoint;
    std::filesystem::path report;
};
/// data is a training-set file, or a synthetic-set file when synthetic is set.
TrainOutputs cmd_train(const PipelineConfig& config, const std::filesystem::path& data,
                       bool synthetic, Clients& clients);

std::filesystem::path cmd_rank(const PipelineConfig& config,
                               const std::optional<std::filesystem::path>& checkpoint,
                               Clients& clients);

struct EvalOutputs {
    std::filesystem::path report;
    std::filesystem::path csv;
};
EvalOutputs cmd_eval(const PipelineConfig& config,
                     const std::optional<std::filesystem::path>& checkpoint,
                     const std::optional<std::filesystem::path>& baseline, Clients& clients);

/// Generates one synthetic set per subquestion of the dataset, or the
/// separable task (train and held-out files) when separable is set.
std::vector<std::filesystem::path> cmd_synth(const PipelineConfig& config, bool separable,
                                             Clients& clients);

/// MRR over the sets. With a checkpoint the identity adapter is evaluated too
/// and serves as the significance baseline.
std::filesystem::path cmd_synth_eval(const PipelineConfig& config,
                                     const std::optional<std::filesystem::path>& checkpoint,
                                     const std::filesystem::path& sets, Clients& clients);

/// Loads the adapter from a checkpoint, or the identity of the embedding
/// dimension when none is given.
Adapter load_adapter(const std::optional<std::filesystem::path>& checkpoint, std::size_t dim);

std::string train_report_json(const TrainReport& report, const std::string& config_digest);

/// Command-line entry point. Returns the process exit code: 0 on success, 1 on
/// a runtime error, 2 on a usage error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cfr
