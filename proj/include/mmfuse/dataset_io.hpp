#pragma once
// On-disk formats.
//
// Embedding TSV:  first line `#modality=<name>\tdim=<d>`, then one
//                 `artist_id\tv0\t...\tv{d-1}` per artist.
// Graph TSV:      one `artist_a\tartist_b` per line, `#` lines ignored.
// Popularity TSV: `artist_id\tcount`.
//
// Canonical saves sort artists and print floats as shortest round-trip
// decimals, so save(load(f)) of a canonical file is byte-identical.

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "mmfuse/dataset.hpp"
#include "mmfuse/errors.hpp"

namespace mmfuse {

inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view tok, const std::string& context) {
    double v = 0.0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        throw ParseError("bad numeric token '" + std::string(tok) + "' in " + context);
    if (!std::isfinite(v))
        throw ParseError("non-finite value '" + std::string(tok) + "' in " + context);
    return v;
}

inline std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find('\t', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

namespace detail {

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return in;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    return out;
}

// Strips a trailing \r so files with CRLF endings load the same way.
inline bool next_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

}  // namespace detail

inline EmbeddingTable load_embeddings(const std::string& path) {
    std::ifstream in = detail::open_input(path);
    std::string line;
    if (!detail::next_line(in, line)) throw ParseError("empty embedding file '" + path + "'");
    auto header = split_tabs(line);
    if (header.size() != 2 || header[0].substr(0, 10) != "#modality=" ||
        header[1].substr(0, 4) != "dim=")
        throw ParseError("bad embedding header in '" + path + "': " + line);
    EmbeddingTable table;
    table.modality = std::string(header[0].substr(10));
    validate_modality_id(table.modality);
    std::size_t dim = 0;
    auto dim_tok = header[1].substr(4);
    auto res = std::from_chars(dim_tok.data(), dim_tok.data() + dim_tok.size(), dim);
    if (res.ec != std::errc() || res.ptr != dim_tok.data() + dim_tok.size() || dim == 0)
        throw ParseError("bad dim in embedding header of '" + path + "'");
    table.dim = dim;
    std::size_t lineno = 1;
    while (detail::next_line(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto toks = split_tabs(line);
        if (toks.size() != dim + 1)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(dim + 1) + " columns, got " +
                             std::to_string(toks.size()));
        std::vector<double> v(dim);
        for (std::size_t j = 0; j < dim; ++j)
            v[j] = parse_double(toks[j + 1], path + ":" + std::to_string(lineno));
        table.insert(std::string(toks[0]), std::move(v));
    }
    return table;
}

inline EmbeddingTable load_embeddings(const std::string& path, const ModalityId& modality) {
    EmbeddingTable table = load_embeddings(path);
    if (table.modality != modality)
        throw ParseError("'" + path + "' declares modality '" + table.modality + "', expected '" +
                         modality + "'");
    return table;
}

inline void save_embeddings(const EmbeddingTable& table, const std::string& path) {
    std::ofstream out = detail::open_output(path);
    out << "#modality=" << table.modality << "\tdim=" << table.dim << "\n";
    for (const auto& [a, v] : table.rows) {
        out << a;
        for (double x : v) out << '\t' << format_double(x);
        out << '\n';
    }
    if (!out) throw IoError("write failure on '" + path + "'");
}

// Strict mode (the default) rejects edges whose endpoints are not in the
// catalog; lenient mode drops them.
inline SimilarityGraph load_graph(const std::string& path, const std::set<ArtistId>& catalog,
                                  bool strict = true) {
    std::ifstream in = detail::open_input(path);
    SimilarityGraph graph;
    std::string line;
    std::size_t lineno = 0;
    while (detail::next_line(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto toks = split_tabs(line);
        if (toks.size() != 2)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected 2 columns");
        ArtistId a(toks[0]), b(toks[1]);
        validate_artist_id(a);
        validate_artist_id(b);
        if (a == b)
            throw ParseError(path + ":" + std::to_string(lineno) + ": self-loop '" + a + "'");
        bool known = catalog.count(a) && catalog.count(b);
        if (!known) {
            if (strict)
                throw UnknownArtist(path + ":" + std::to_string(lineno) + ": unknown artist in '" +
                                    a + "\t" + b + "'");
            continue;
        }
        graph.add_edge(a, b);
    }
    return graph;
}

inline void save_graph(const SimilarityGraph& graph, const std::string& path) {
    std::ofstream out = detail::open_output(path);
    for (const auto& [a, b] : graph.edges) out << a << '\t' << b << '\n';
    if (!out) throw IoError("write failure on '" + path + "'");
}

inline PopularityTable load_popularity(const std::string& path) {
    std::ifstream in = detail::open_input(path);
    PopularityTable pop;
    std::string line;
    std::size_t lineno = 0;
    while (detail::next_line(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto toks = split_tabs(line);
        if (toks.size() != 2)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected 2 columns");
        ArtistId a(toks[0]);
        validate_artist_id(a);
        long long count = 0;
        auto res = std::from_chars(toks[1].data(), toks[1].data() + toks[1].size(), count);
        if (res.ec != std::errc() || res.ptr != toks[1].data() + toks[1].size() || count < 0)
            throw ParseError(path + ":" + std::to_string(lineno) + ": bad count '" +
                             std::string(toks[1]) + "'");
        if (!pop.counts.emplace(a, count).second)
            throw ParseError(path + ":" + std::to_string(lineno) + ": duplicate artist '" + a +
                             "'");
    }
    return pop;
}

inline void save_popularity(const PopularityTable& pop, const std::string& path) {
    std::ofstream out = detail::open_output(path);
    for (const auto& [a, c] : pop.counts) out << a << '\t' << c << '\n';
    if (!out) throw IoError("write failure on '" + path + "'");
}

// Dataset directory layout: `<modality>.embeddings.tsv` per modality,
// `graph.tsv`, and optionally `popularity.tsv`.
inline MultimodalDataset load_dataset(const std::string& dir, bool strict_graph = true) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw IoError("dataset directory '" + dir + "' does not exist");
    MultimodalDataset ds;
    std::vector<fs::path> emb_files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::string name = entry.path().filename().string();
        if (name.size() > 15 && name.substr(name.size() - 15) == ".embeddings.tsv")
            emb_files.push_back(entry.path());
    }
    std::sort(emb_files.begin(), emb_files.end());
    for (const auto& p : emb_files) {
        EmbeddingTable t = load_embeddings(p.string());
        std::string stem = p.filename().string();
        stem = stem.substr(0, stem.size() - 15);
        if (t.modality != stem)
            throw ParseError("'" + p.string() + "' declares modality '" + t.modality + "'");
        ds.tables.emplace(t.modality, std::move(t));
    }
    if (ds.tables.size() < 2)
        throw ConfigError("dataset directory '" + dir + "' has fewer than 2 embedding tables");
    ds.finalize();
    fs::path graph_path = fs::path(dir) / "graph.tsv";
    if (fs::exists(graph_path)) ds.graph = load_graph(graph_path.string(), ds.catalog, strict_graph);
    fs::path pop_path = fs::path(dir) / "popularity.tsv";
    if (fs::exists(pop_path)) ds.popularity = load_popularity(pop_path.string());
    ds.finalize();
    return ds;
}

inline void save_dataset(const MultimodalDataset& ds, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create dataset directory '" + dir + "'");
    for (const auto& [m, table] : ds.tables)
        save_embeddings(table, (fs::path(dir) / (m + ".embeddings.tsv")).string());
    save_graph(ds.graph, (fs::path(dir) / "graph.tsv").string());
    if (!ds.popularity.empty())
        save_popularity(ds.popularity, (fs::path(dir) / "popularity.tsv").string());
}

}  // namespace mmfuse
