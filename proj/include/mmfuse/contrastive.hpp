#pragma once
// Pairwise InfoNCE over modality pairs, the multi-encoder training loop,
// inference-time fusion, and the expected-contrastive-loss diagnostic.
//
// The pairwise loss for an ordered pair (a, b) over a batch of M artists is
//
//   L = sum_i -log( X(za_i, zb_i) / sum_{k=1..2M, k!=i} X(za_i, zeta_k) )
//
// with X(u, v) = exp(cos(u, v) / tau) and zeta_k = za_k for k <= M, else
// zb_{k-M}. The total loss sums one such term per unordered modality pair,
// anchored at the lexicographically smaller modality; a symmetrize flag adds
// the reversed term.

#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmfuse/adam.hpp"
#include "mmfuse/dataset.hpp"
#include "mmfuse/dataset_io.hpp"
#include "mmfuse/encoder.hpp"
#include "mmfuse/errors.hpp"
#include "mmfuse/graph.hpp"

namespace mmfuse {

enum class FusionMode { normalized, raw_average };

inline std::string to_string(FusionMode m) {
    return m == FusionMode::normalized ? "normalized" : "raw_average";
}

inline FusionMode fusion_mode_from_string(const std::string& s) {
    if (s == "normalized") return FusionMode::normalized;
    if (s == "raw_average") return FusionMode::raw_average;
    throw ConfigError("unknown fusion mode '" + s + "'");
}

struct ContrastiveModel {
    std::map<ModalityId, Encoder> encoders;
    double temperature = 0.1;
    FusionMode fusion = FusionMode::normalized;

    std::size_t output_dim() const {
        if (encoders.empty()) throw ConfigError("model has no encoders");
        return encoders.begin()->second.config.output_dim;
    }

    void validate() const {
        if (encoders.size() < 2) throw ConfigError("model needs at least 2 encoders");
        if (temperature <= 0.0) throw ConfigError("temperature must be positive");
        std::size_t d = output_dim();
        for (const auto& [m, enc] : encoders)
            if (enc.config.output_dim != d)
                throw ConfigError("encoder '" + m + "' output_dim differs");
    }
};

struct TrainConfig {
    std::size_t batch_size = 128;
    std::size_t epochs = 100;
    double lr = 1e-4;
    double temperature = 0.1;
    std::uint64_t seed = 0;
    std::vector<std::pair<ModalityId, ModalityId>> pairs;  // empty = all unordered pairs
    bool symmetrize = false;
    FusionMode fusion = FusionMode::normalized;

    void validate() const {
        if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
        if (epochs < 1) throw ConfigError("epochs must be at least 1");
        if (temperature <= 0.0) throw ConfigError("temperature must be positive");
        if (lr <= 0.0) throw ConfigError("learning rate must be positive");
    }
};

// All unordered pairs with the lexicographically smaller modality first.
inline std::vector<std::pair<ModalityId, ModalityId>> default_pairs(
    const std::vector<ModalityId>& modalities) {
    std::vector<ModalityId> mods = modalities;
    std::sort(mods.begin(), mods.end());
    std::vector<std::pair<ModalityId, ModalityId>> out;
    for (std::size_t i = 0; i < mods.size(); ++i)
        for (std::size_t j = i + 1; j < mods.size(); ++j) out.emplace_back(mods[i], mods[j]);
    return out;
}

inline Graph::NodeId pairwise_infonce(Graph& g, Graph::NodeId za, Graph::NodeId zb, double tau) {
    const Tensor& A = g.value(za);
    const Tensor& B = g.value(zb);
    if (A.rank() != 2 || !A.same_shape(B))
        throw ShapeMismatch("pairwise_infonce " + shape_str(A.shape) + " vs " +
                            shape_str(B.shape));
    if (tau <= 0.0) throw ConfigError("temperature must be positive");
    std::size_t m = A.rows();
    Graph::NodeId s_aa = cosine_matrix(g, za, za);
    Graph::NodeId s_ab = cosine_matrix(g, za, zb);
    // Columns k = 1..M are the anchor modality, columns M+1..2M the other;
    // the k = i anchor self-similarity is masked out, the positive stays in.
    Graph::NodeId scores = g.scale(g.hcat(s_aa, s_ab), 1.0 / tau);
    std::vector<std::uint8_t> mask(m * 2 * m, 1);
    for (std::size_t i = 0; i < m; ++i) mask[i * 2 * m + i] = 0;
    Graph::NodeId denom = g.masked_row_logsumexp(scores, std::move(mask));
    Graph::NodeId pos = g.scale(g.diag_part(s_ab), 1.0 / tau);
    return g.reduce_sum(g.sub(denom, pos));
}

// Value-level convenience over a throwaway tape.
inline double pairwise_infonce(const Tensor& za, const Tensor& zb, double tau) {
    Graph g;
    return g.scalar_value(pairwise_infonce(g, g.constant(za), g.constant(zb), tau));
}

inline Graph::NodeId total_loss(Graph& g, const std::map<ModalityId, Graph::NodeId>& outputs,
                                double tau,
                                const std::vector<std::pair<ModalityId, ModalityId>>& pairs,
                                bool symmetrize = false) {
    if (outputs.size() < 2) throw ConfigError("total_loss needs at least 2 modalities");
    std::vector<std::pair<ModalityId, ModalityId>> use = pairs;
    if (use.empty()) {
        std::vector<ModalityId> mods;
        for (const auto& [m, id] : outputs) mods.push_back(m);
        use = default_pairs(mods);
    }
    Graph::NodeId acc = -1;
    for (const auto& [a, b] : use) {
        auto ia = outputs.find(a);
        auto ib = outputs.find(b);
        if (ia == outputs.end() || ib == outputs.end())
            throw ConfigError("loss pair (" + a + ", " + b + ") references unknown modality");
        Graph::NodeId term = pairwise_infonce(g, ia->second, ib->second, tau);
        acc = acc < 0 ? term : g.add(acc, term);
        if (symmetrize) acc = g.add(acc, pairwise_infonce(g, ib->second, ia->second, tau));
    }
    return acc;
}

struct EpochLoss {
    std::size_t epoch;
    double mean_loss;
};

struct TrainResult {
    ContrastiveModel model;
    std::vector<EpochLoss> curve;
};

inline void save_loss_log(const std::vector<EpochLoss>& curve, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    for (const auto& e : curve) {
        nlohmann::json j{{"epoch", e.epoch}, {"mean_loss", e.mean_loss}};
        out << j.dump() << '\n';
    }
}

// Trains one encoder per modality on the full-coverage pool. Each epoch the
// pool is reshuffled, split into batches of batch_size, and the trailing
// partial batch is dropped. Fully deterministic for a fixed seed.
inline TrainResult train(const MultimodalDataset& ds,
                         const std::map<ModalityId, EncoderConfig>& encoder_configs,
                         const TrainConfig& config) {
    config.validate();
    if (encoder_configs.size() < 2) throw ConfigError("training needs at least 2 modalities");
    for (const auto& [m, cfg] : encoder_configs) {
        auto it = ds.tables.find(m);
        if (it == ds.tables.end()) throw ConfigError("no embedding table for modality '" + m + "'");
        if (cfg.input_dim != it->second.dim)
            throw ConfigError("encoder '" + m + "' input_dim " + std::to_string(cfg.input_dim) +
                              " does not match table dim " + std::to_string(it->second.dim));
    }

    std::set<ArtistId> pool_set = full_coverage_subset(ds);
    std::vector<ArtistId> pool;
    for (const auto& [m, cfg] : encoder_configs) (void)m;
    for (const auto& a : pool_set) {
        bool ok = true;
        for (const auto& [m, cfg] : encoder_configs)
            if (!ds.has_modality(a, m)) ok = false;
        if (ok) pool.push_back(a);
    }
    if (pool.empty()) throw IncompleteCoverage("no artist covers all training modalities");

    std::mt19937_64 rng(config.seed);

    TrainResult result;
    result.model.temperature = config.temperature;
    result.model.fusion = config.fusion;
    for (const auto& [m, cfg] : encoder_configs) {
        std::uint64_t enc_seed = rng();
        result.model.encoders.emplace(m, build_encoder(cfg, enc_seed));
    }
    result.model.validate();

    std::map<ModalityId, AdamState> opt;
    for (const auto& [m, enc] : result.model.encoders) {
        AdamState s;
        s.lr = config.lr;
        opt.emplace(m, std::move(s));
    }

    std::size_t batch = config.batch_size;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(pool.begin(), pool.end(), rng);
        std::size_t n_batches = pool.size() / batch;
        double loss_sum = 0.0;
        for (std::size_t b = 0; b < n_batches; ++b) {
            Graph g;
            std::map<ModalityId, std::map<std::string, Graph::NodeId>> param_nodes;
            for (const auto& [m, enc] : result.model.encoders)
                for (const auto& [name, t] : enc.params) param_nodes[m].emplace(name, g.param(t));

            std::map<ModalityId, Graph::NodeId> outputs;
            for (const auto& [m, enc] : result.model.encoders) {
                const EmbeddingTable& table = ds.tables.at(m);
                Tensor X = Tensor::zeros({batch, table.dim});
                for (std::size_t i = 0; i < batch; ++i) {
                    const ArtistId& a = pool[b * batch + i];
                    if (!table.has(a))
                        throw IncompleteCoverage("batch artist '" + a + "' lacks modality '" + m +
                                                 "'");
                    const auto& row = table.row(a);
                    std::copy(row.begin(), row.end(), X.data.begin() + i * table.dim);
                }
                outputs.emplace(m, enc.forward_graph(g, param_nodes.at(m), g.constant(X)));
            }

            Graph::NodeId loss =
                total_loss(g, outputs, config.temperature, config.pairs, config.symmetrize);
            double lval = g.scalar_value(loss);
            if (!std::isfinite(lval))
                throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) +
                                     " batch " + std::to_string(b));
            loss_sum += lval;
            g.backward(loss);

            for (auto& [m, enc] : result.model.encoders) {
                GradSet grads;
                for (const auto& [name, node] : param_nodes.at(m)) {
                    const Tensor& grad = g.grad(node);
                    if (!grad.all_finite())
                        throw NumericalError("non-finite gradient for '" + m + "." + name +
                                             "' at epoch " + std::to_string(epoch) + " batch " +
                                             std::to_string(b));
                    grads.emplace(name, grad);
                }
                adam_step(enc.params, grads, opt.at(m));
            }
        }
        if (n_batches == 0)
            throw IncompleteCoverage("training pool of " + std::to_string(pool.size()) +
                                     " artists yields no full batch of " + std::to_string(batch));
        result.curve.push_back({epoch, loss_sum / static_cast<double>(n_batches)});
    }
    return result;
}

// ---- inference ------------------------------------------------------------

struct FusedEmbedding {
    std::vector<double> values;
    std::set<ModalityId> contributors;
};

using FusedTable = std::map<ArtistId, FusedEmbedding>;

// Shared-space embeddings per modality, for every artist that has the
// modality: the raw encoder outputs, before any fusion.
using SharedSpaceEmbeddings = std::map<ModalityId, std::map<ArtistId, std::vector<double>>>;

namespace detail {

inline void l2_normalize_inplace(std::vector<double>& v) {
    double n = l2_norm(v.data(), v.size());
    if (n == 0.0) return;
    for (double& x : v) x /= n;
}

}  // namespace detail

// Batch-encodes every covered artist of every modality the model knows.
// Rows are processed in sorted-artist order, in bounded chunks; results are
// bit-identical to single-row forwards.
inline SharedSpaceEmbeddings encode_all(const ContrastiveModel& model, const MultimodalDataset& ds,
                                        std::size_t chunk = 512) {
    SharedSpaceEmbeddings out;
    for (const auto& [m, enc] : model.encoders) {
        auto table_it = ds.tables.find(m);
        if (table_it == ds.tables.end()) continue;
        const EmbeddingTable& table = table_it->second;
        std::vector<const ArtistId*> ids;
        ids.reserve(table.rows.size());
        for (const auto& [a, row] : table.rows) ids.push_back(&a);
        std::map<ArtistId, std::vector<double>>& dst = out[m];
        std::size_t d = enc.config.output_dim;
        for (std::size_t start = 0; start < ids.size(); start += chunk) {
            std::size_t n = std::min(chunk, ids.size() - start);
            Tensor X = Tensor::zeros({n, table.dim});
            for (std::size_t i = 0; i < n; ++i) {
                const auto& row = table.rows.at(*ids[start + i]);
                std::copy(row.begin(), row.end(), X.data.begin() + i * table.dim);
            }
            Tensor Z = enc.forward(X);
            for (std::size_t i = 0; i < n; ++i)
                dst.emplace(*ids[start + i],
                            std::vector<double>(Z.data.begin() + i * d, Z.data.begin() + (i + 1) * d));
        }
    }
    return out;
}

// Fuses one artist: encode each available modality, normalize each output
// (unless raw_average), and take the arithmetic mean.
inline FusedEmbedding fuse(const ContrastiveModel& model, const MultimodalDataset& ds,
                           const ArtistId& artist) {
    FusedEmbedding out;
    std::size_t d = model.output_dim();
    out.values.assign(d, 0.0);
    for (const auto& [m, enc] : model.encoders) {
        auto table_it = ds.tables.find(m);
        if (table_it == ds.tables.end() || !table_it->second.has(artist)) continue;
        const auto& row = table_it->second.row(artist);
        Tensor Z = enc.forward(Tensor({1, row.size()}, row));
        std::vector<double> z(Z.data.begin(), Z.data.end());
        if (model.fusion == FusionMode::normalized) detail::l2_normalize_inplace(z);
        for (std::size_t j = 0; j < d; ++j) out.values[j] += z[j];
        out.contributors.insert(m);
    }
    if (out.contributors.empty())
        throw NoModalityAvailable("artist '" + artist + "' has no modality known to the model");
    double inv = 1.0 / static_cast<double>(out.contributors.size());
    for (double& x : out.values) x *= inv;
    return out;
}

// Bulk fusion from pre-encoded shared-space embeddings; identical to calling
// fuse() per artist.
inline FusedTable fuse_all(const ContrastiveModel& model, const MultimodalDataset& ds) {
    SharedSpaceEmbeddings shared = encode_all(model, ds);
    FusedTable out;
    std::size_t d = model.output_dim();
    for (const auto& a : ds.catalog) {
        FusedEmbedding fe;
        fe.values.assign(d, 0.0);
        for (const auto& [m, rows] : shared) {
            auto it = rows.find(a);
            if (it == rows.end()) continue;
            std::vector<double> z = it->second;
            if (model.fusion == FusionMode::normalized) detail::l2_normalize_inplace(z);
            for (std::size_t j = 0; j < d; ++j) fe.values[j] += z[j];
            fe.contributors.insert(m);
        }
        if (fe.contributors.empty()) continue;
        double inv = 1.0 / static_cast<double>(fe.contributors.size());
        for (double& x : fe.values) x *= inv;
        out.emplace(a, std::move(fe));
    }
    return out;
}

// ---- expected contrastive loss ---------------------------------------------
//
// ECL(i, u, v) = d_ii^uv - mean_{j != i}[ d_ij^uv ] with d the cosine
// distance between artist i in modality u and artist j in modality v, the
// mean running over all other artists that have modality v. ECL(i) averages
// over the ordered modality pairs (u, v != u) available for i.

inline double ecl(const SharedSpaceEmbeddings& shared, const ArtistId& artist) {
    std::vector<ModalityId> mods;
    for (const auto& [m, rows] : shared)
        if (rows.count(artist)) mods.push_back(m);
    if (mods.size() < 2)
        throw InsufficientModalities("ECL needs at least 2 modalities for '" + artist + "'");
    double total = 0.0;
    std::size_t n_pairs = 0;
    for (const ModalityId& u : mods) {
        const auto& ui = shared.at(u).at(artist);
        for (const ModalityId& v : mods) {
            if (u == v) continue;
            const auto& v_rows = shared.at(v);
            double d_ii = cosine_distance(ui, v_rows.at(artist));
            double sum = 0.0;
            std::size_t count = 0;
            for (const auto& [j, vj] : v_rows) {
                if (j == artist) continue;
                sum += cosine_distance(ui, vj);
                ++count;
            }
            if (count == 0)
                throw InsufficientData("no other artist has modality '" + v + "' for ECL");
            total += d_ii - sum / static_cast<double>(count);
            ++n_pairs;
        }
    }
    return total / static_cast<double>(n_pairs);
}

// ---- checkpoint ------------------------------------------------------------

inline nlohmann::json model_to_json(const ContrastiveModel& model) {
    nlohmann::json j;
    j["format"] = "mmfuse.model.v1";
    j["temperature"] = model.temperature;
    j["fusion"] = to_string(model.fusion);
    j["output_dim"] = model.output_dim();
    nlohmann::json encs = nlohmann::json::object();
    for (const auto& [m, enc] : model.encoders) {
        nlohmann::json e;
        e["config"] = enc.config;
        nlohmann::json params = nlohmann::json::object();
        for (const auto& [name, t] : enc.params)
            params[name] = nlohmann::json{{"shape", t.shape}, {"values", t.data}};
        e["params"] = std::move(params);
        encs[m] = std::move(e);
    }
    j["encoders"] = std::move(encs);
    return j;
}

inline ContrastiveModel model_from_json(const nlohmann::json& j) {
    ContrastiveModel model;
    model.temperature = j.at("temperature").get<double>();
    model.fusion = fusion_mode_from_string(j.value("fusion", "normalized"));
    for (const auto& [m, e] : j.at("encoders").items()) {
        Encoder enc;
        enc.config = e.at("config").get<EncoderConfig>();
        for (const auto& [name, p] : e.at("params").items()) {
            Shape shape = p.at("shape").get<Shape>();
            std::vector<double> values = p.at("values").get<std::vector<double>>();
            enc.params.emplace(name, Tensor(std::move(shape), std::move(values)));
        }
        // One forward on a zero row validates parameter names and shapes.
        enc.forward(Tensor::zeros({1, enc.config.input_dim}));
        model.encoders.emplace(m, std::move(enc));
    }
    model.validate();
    return model;
}

inline void save_model(const ContrastiveModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << model_to_json(model).dump(2) << '\n';
    if (!out) throw IoError("write failure on '" + path + "'");
}

inline ContrastiveModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("bad model checkpoint '" + path + "': " + e.what());
    }
    try {
        return model_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("bad model checkpoint '" + path + "': " + e.what());
    }
}

}  // namespace mmfuse
