// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cfr/clients.hpp"
#include "cfr/corpus.hpp"

namespace cfr {

/// Trainable square map applied to frozen embeddings on both the query and
/// the document side. Weights are row-major.
class Adapter {
public:
    Adapter() = default;
    Adapter(std::size_t dim, std::vector<double> weights, bool identity_init = false);

    static Adapter identity(std::size_t dim);

    std::size_t dim() const { return dim_; }
    bool identity_init() const { return identity_init_; }
    std::span<const double> weights() const { return weights_; }
    std::span<double> weights() { return weights_; }
    double at(std::size_t row, std::size_t col) const { return weights_[row * dim_ + col]; }

    std::vector<double> apply(std::span<const double> v) const;
    void apply_into(std::span<const double> v, std::span<double> out) const;

    bool operator==(const Adapter&) const = default;

private:
    std::size_t dim_ = 0;
    std::vector<double> weights_;
    bool identity_init_ = false;
};

/// u.v / (|u| |v|). Throws DegenerateInput when either vector is zero.
double cosine(std::span<const double> u, std::span<const double> v);

struct RankedEntry {
    std::string doc_id;
    double score = 0.0;

    bool operator==(const RankedEntry&) const = default;
};

/// Non-increasing scores; ties ordered by ascending doc_id.
struct RankedList {
    std::string claim_id;
    int q_index = 0;
    std::vector<RankedEntry> entries;

    bool operator==(const RankedList&) const = default;
};

/// Orders scored entries by descending score then ascending doc_id.
void sort_ranked(std::vector<RankedEntry>& entries);

/// Scores (doc_id, text) pairs against the query text with the adapter applied
/// to both sides.
std::vector<RankedEntry> rank_texts(const std::string& query_text,
                                    const std::vector<std::pair<std::string, std::string>>& docs,
                                    const Adapter& adapter, EmbeddingStore& store);

RankedList rank(const Query& query, const DocumentSet& docset, const Adapter& adapter,
                EmbeddingStore& store);

const std::string& top1(const RankedList& ranked);

// ---------------------------------------------------------------------------
// Checkpoint file, little-endian:
//
//   offset  size      field
//   0       8         magic "CFRADAPT"
//   8       4  u32    format_version (= kCheckpointVersion)
//   12      4  u32    embed_dim e
//   16      1  u8     identity_init
//   17      4  u32    digest length n
//   21      n         training_config_digest (ASCII)
//   21+n    8*e*e     weights, IEEE-754 binary64, row-major
//   ...     8  u64    FNV-1a 64 of the weight bytes

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    Adapter adapter;
    std::string training_config_digest;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);

/// Written atomically (temporary file, then rename).
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cfr
