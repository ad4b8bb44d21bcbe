// SPDX-License-Identifier: Apache-2.0
#include "cfr/reranker.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <set>

#include "cfr/error.hpp"
#include "cfr/io.hpp"
#include "cfr/kernels.hpp"
#include "cfr/text.hpp"

namespace cfr {

Adapter::Adapter(std::size_t dim, std::vector<double> weights, bool identity_init)
    : dim_(dim), weights_(std::move(weights)), identity_init_(identity_init) {
    if (weights_.size() != dim_ * dim_) throw InvalidArgument("adapter weights must be dim x dim");
    for (double w : weights_) {
        if (!std::isfinite(w)) throw InvalidArgument("adapter weights must be finite");
    }
}

Adapter Adapter::identity(std::size_t dim) {
    std::vector<double> w(dim * dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) w[i * dim + i] = 1.0;
    return Adapter(dim, std::move(w), true);
}

void Adapter::apply_into(std::span<const double> v, std::span<double> out) const {
    if (v.size() != dim_ || out.size() != dim_) {
        throw InvalidArgument("adapter dim " + std::to_string(dim_) + " does not match vector dim " +
                              std::to_string(v.size()));
    }
    kernels::gemv(weights_, dim_, v, out);
}

std::vector<double> Adapter::apply(std::span<const double> v) const {
    std::vector<double> out(dim_);
    apply_into(v, out);
    return out;
}

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw InvalidArgument("cosine: dimension mismatch");
    const double uu = kernels::dot(u, u);
    const double vv = kernels::dot(v, v);
    if (!(uu > 0.0) || !(vv > 0.0)) throw DegenerateInput("cosine of a zero vector is undefined");
    const double c = kernels::dot(u, v) / (std::sqrt(uu) * std::sqrt(vv));
    return std::clamp(c, -1.0, 1.0);
}

void sort_ranked(std::vector<RankedEntry>& entries) {
    std::sort(entries.begin(), entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
}

std::vector<RankedEntry> rank_texts(const std::string& query_text,
                                    const std::vector<std::pair<std::string, std::string>>& docs,
                                    const Adapter& adapter, EmbeddingStore& store) {
    std::vector<std::string> texts;
    texts.reserve(docs.size() + 1);
    texts.push_back(query_text);
    for (const auto& d : docs) texts.push_back(d.second);
    store.prefetch(texts);

    const auto q = adapter.apply(store.get(query_text));
    std::vector<double> h(adapter.dim());
    std::vector<RankedEntry> out;
    out.reserve(docs.size());
    for (const auto& [id, text] : docs) {
        adapter.apply_into(store.get(text), h);
        out.push_back(RankedEntry{id, cosine(q, h)});
    }
    sort_ranked(out);
    return out;
}

RankedList rank(const Query& query, const DocumentSet& docset, const Adapter& adapter,
                EmbeddingStore& store) {
    if (docset.spans.empty()) throw InvalidArgument("cannot rank an empty document set");
    std::vector<std::pair<std::string, std::string>> docs;
    docs.reserve(docset.spans.size());
    std::set<std::string_view> seen;
    for (const auto& s : docset.spans) {
        if (!seen.insert(s.doc_id).second) throw InvalidArgument("duplicate doc_id '" + s.doc_id + "'");
        docs.emplace_back(s.doc_id, s.text);
    }
    return RankedList{query.claim_id, query.q_index, rank_texts(query.text, docs, adapter, store)};
}

const std::string& top1(const RankedList& ranked) {
    if (ranked.entries.empty()) throw InvalidArgument("top1 of an empty ranking");
    return ranked.entries.front().doc_id;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[8] = {'C', 'F', 'R', 'A', 'D', 'A', 'P', 'T'};

template <typename T>
void put_le(std::string& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
    }
}

template <typename T>
T get_le(std::string_view bytes, std::size_t& pos) {
    if (pos + sizeof(T) > bytes.size()) throw CheckpointError("checkpoint truncated");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    }
    pos += sizeof(T);
    return static_cast<T>(v);
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
    const auto& a = ckpt.adapter;
    std::string out(kMagic, sizeof kMagic);
    put_le<std::uint32_t>(out, kCheckpointVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.dim()));
    put_le<std::uint8_t>(out, a.identity_init() ? 1 : 0);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.training_config_digest.size()));
    out += ckpt.training_config_digest;
    const auto payload_start = out.size();
    for (double w : a.weights()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(w));
    const auto sum = fnv1a64(std::string_view(out).substr(payload_start));
    put_le<std::uint64_t>(out, sum);
    return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
    if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
        throw CheckpointError("not an adapter checkpoint (bad magic)");
    }
    std::size_t pos = sizeof kMagic;
    const auto version = get_le<std::uint32_t>(bytes, pos);
    if (version != kCheckpointVersion) {
        throw CheckpointError("unsupported checkpoint format_version " + std::to_string(version) +
                              " (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    const auto dim = get_le<std::uint32_t>(bytes, pos);
    const bool identity_init = get_le<std::uint8_t>(bytes, pos) != 0;
    const auto digest_len = get_le<std::uint32_t>(bytes, pos);
    if (pos + digest_len > bytes.size()) throw CheckpointError("checkpoint truncated");
    Checkpoint ckpt;
    ckpt.training_config_digest = std::string(bytes.substr(pos, digest_len));
    pos += digest_len;
    const std::size_t n = static_cast<std::size_t>(dim) * dim;
    if (pos + 8 * n + 8 > bytes.size()) throw CheckpointError("checkpoint truncated");
    const auto payload = bytes.substr(pos, 8 * n);
    std::vector<double> w(n);
    for (auto& x : w) x = std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos));
    const auto sum = get_le<std::uint64_t>(bytes, pos);
    if (sum != fnv1a64(payload)) throw CheckpointError("checkpoint checksum mismatch");
    if (pos != bytes.size()) throw CheckpointError("trailing bytes after checkpoint");
    try {
        ckpt.adapter = Adapter(dim, std::move(w), identity_init);
    } catch (const InvalidArgument& e) {
        throw CheckpointError(e.what());
    }
    return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    write_file_atomic(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return decode_checkpoint(read_file(path));
}

}  // namespace cfr
