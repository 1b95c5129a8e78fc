#pragma once
// Dataset model: artists, per-modality embedding tables, coverage, the
// ground-truth similarity graph, and popularity counts. Everything is keyed
// by sorted maps so iteration order is deterministic; datasets are immutable
// after load and safe for concurrent reads.

#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mmfuse/errors.hpp"

namespace mmfuse {

using ArtistId = std::string;
using ModalityId = std::string;

inline void validate_artist_id(const ArtistId& id) {
    if (id.empty()) throw ParseError("empty artist id");
    for (char c : id)
        if (c == '\t' || c == '\n' || c == '\r')
            throw ParseError("artist id contains tab/newline: '" + id + "'");
}

inline void validate_modality_id(const ModalityId& m) {
    if (m.empty()) throw ParseError("empty modality name");
    for (char c : m)
        if (std::isupper(static_cast<unsigned char>(c)) || c == '\t' || c == '\n')
            throw ParseError("modality name must be lowercase: '" + m + "'");
}

struct EmbeddingTable {
    ModalityId modality;
    std::size_t dim = 0;
    std::map<ArtistId, std::vector<double>> rows;

    bool has(const ArtistId& a) const { return rows.count(a) > 0; }

    const std::vector<double>& row(const ArtistId& a) const {
        auto it = rows.find(a);
        if (it == rows.end()) throw UnknownArtist("no '" + modality + "' row for '" + a + "'");
        return it->second;
    }

    void insert(const ArtistId& a, std::vector<double> v) {
        validate_artist_id(a);
        if (v.size() != dim)
            throw ParseError("row for '" + a + "' has " + std::to_string(v.size()) +
                             " values, expected " + std::to_string(dim));
        for (double x : v)
            if (!std::isfinite(x)) throw ParseError("non-finite value in row for '" + a + "'");
        if (!rows.emplace(a, std::move(v)).second)
            throw ParseError("duplicate artist id '" + a + "'");
    }
};

// Unordered artist pairs, stored with the lexicographically smaller id first.
struct SimilarityGraph {
    std::set<std::pair<ArtistId, ArtistId>> edges;

    void add_edge(const ArtistId& a, const ArtistId& b) {
        if (a == b) throw ParseError("self-loop edge '" + a + "'");
        edges.insert(a < b ? std::make_pair(a, b) : std::make_pair(b, a));
    }

    bool connected(const ArtistId& a, const ArtistId& b) const {
        return edges.count(a < b ? std::make_pair(a, b) : std::make_pair(b, a)) > 0;
    }

    std::set<ArtistId> neighbors(const ArtistId& a) const {
        std::set<ArtistId> out;
        for (const auto& [x, y] : edges) {
            if (x == a) out.insert(y);
            if (y == a) out.insert(x);
        }
        return out;
    }
};

struct PopularityTable {
    std::map<ArtistId, long long> counts;

    bool has(const ArtistId& a) const { return counts.count(a) > 0; }
    bool empty() const { return counts.empty(); }
};

using CoverageMask = std::map<ArtistId, std::set<ModalityId>>;

struct MultimodalDataset {
    std::set<ArtistId> catalog;
    std::map<ModalityId, EmbeddingTable> tables;
    CoverageMask mask;
    SimilarityGraph graph;
    PopularityTable popularity;

    std::vector<ModalityId> modalities() const {
        std::vector<ModalityId> out;
        for (const auto& [m, t] : tables) out.push_back(m);
        return out;
    }

    const std::set<ModalityId>& coverage(const ArtistId& a) const {
        auto it = mask.find(a);
        if (it == mask.end()) throw UnknownArtist("artist '" + a + "' not in dataset");
        return it->second;
    }

    bool has_modality(const ArtistId& a, const ModalityId& m) const {
        auto it = tables.find(m);
        return it != tables.end() && it->second.has(a);
    }

    // Recomputes catalog and mask from the tables and checks the dataset
    // invariants. Call after assembling or mutating tables.
    void finalize() {
        if (tables.size() < 2)
            throw ConfigError("dataset needs at least 2 modalities, has " +
                              std::to_string(tables.size()));
        catalog.clear();
        mask.clear();
        for (const auto& [m, table] : tables) {
            validate_modality_id(m);
            for (const auto& [a, row] : table.rows) {
                catalog.insert(a);
                mask[a].insert(m);
            }
        }
        for (const auto& [a, b] : graph.edges) {
            if (!catalog.count(a)) throw UnknownArtist("graph endpoint '" + a + "' not in catalog");
            if (!catalog.count(b)) throw UnknownArtist("graph endpoint '" + b + "' not in catalog");
        }
        for (const auto& [a, c] : popularity.counts) {
            if (c < 0) throw ParseError("negative listen count for '" + a + "'");
        }
    }
};

// Artists whose coverage spans every modality of the dataset.
inline std::set<ArtistId> full_coverage_subset(const MultimodalDataset& ds) {
    std::set<ArtistId> out;
    std::size_t total = ds.tables.size();
    for (const auto& [a, mods] : ds.mask)
        if (mods.size() == total) out.insert(a);
    return out;
}

// POP(artist) = ln(listen_count + 1).
inline double popularity(const MultimodalDataset& ds, const ArtistId& a) {
    auto it = ds.popularity.counts.find(a);
    if (it == ds.popularity.counts.end())
        throw MissingPopularity("no popularity count for '" + a + "'");
    return std::log1p(static_cast<double>(it->second));
}

}  // namespace mmfuse
