#pragma once
// Per-modality encoders into the shared space.
//
// mlp:       linear -> ReLU per hidden layer, then linear to output_dim.
// attention: the input vector is zero-padded to a multiple of token_size and
//            split into tokens; each token is linearly projected to
//            model_width; one multi-head self-attention block (scaled dot
//            product over tokens, heads concatenated through an output
//            projection, residual add); mean-pool over tokens; final linear.
//
// Presets follow the reference setup: cf = one hidden layer of 256,
// audio = hidden layers 512 and 256, tag = 4 attention heads at width 256.

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmfuse/adam.hpp"
#include "mmfuse/errors.hpp"
#include "mmfuse/graph.hpp"

namespace mmfuse {

constexpr std::size_t kSharedSpaceDim = 200;

struct EncoderConfig {
    enum class Kind { mlp, attention };
    Kind kind = Kind::mlp;
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden_dims;  // mlp
    std::size_t model_width = 256;         // attention
    std::size_t num_heads = 4;
    std::size_t token_size = 32;
    std::size_t output_dim = kSharedSpaceDim;

    void validate() const {
        if (input_dim == 0) throw ConfigError("encoder input_dim must be positive");
        if (output_dim == 0) throw ConfigError("encoder output_dim must be positive");
        if (kind == Kind::mlp) {
            for (std::size_t h : hidden_dims)
                if (h == 0) throw ConfigError("encoder hidden dim must be positive");
        } else {
            if (model_width == 0 || num_heads == 0 || token_size == 0)
                throw ConfigError("attention dims must be positive");
            if (model_width % num_heads != 0)
                throw ConfigError("model_width " + std::to_string(model_width) +
                                  " not divisible by num_heads " + std::to_string(num_heads));
        }
    }

    std::size_t num_tokens() const { return (input_dim + token_size - 1) / token_size; }

    std::size_t param_count() const {
        std::size_t n = 0;
        if (kind == Kind::mlp) {
            std::size_t prev = input_dim;
            for (std::size_t h : hidden_dims) {
                n += prev * h + h;
                prev = h;
            }
            n += prev * output_dim + output_dim;
        } else {
            n += token_size * model_width + model_width;
            n += 4 * (model_width * model_width + model_width);
            n += model_width * output_dim + output_dim;
        }
        return n;
    }
};

inline void to_json(nlohmann::json& j, const EncoderConfig& c) {
    j = nlohmann::json{{"kind", c.kind == EncoderConfig::Kind::mlp ? "mlp" : "attention"},
                       {"input_dim", c.input_dim},
                       {"output_dim", c.output_dim}};
    if (c.kind == EncoderConfig::Kind::mlp) {
        j["hidden_dims"] = c.hidden_dims;
    } else {
        j["model_width"] = c.model_width;
        j["num_heads"] = c.num_heads;
        j["token_size"] = c.token_size;
    }
}

inline void from_json(const nlohmann::json& j, EncoderConfig& c) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "mlp")
        c.kind = EncoderConfig::Kind::mlp;
    else if (kind == "attention")
        c.kind = EncoderConfig::Kind::attention;
    else
        throw ConfigError("unknown encoder kind '" + kind + "'");
    c.input_dim = j.at("input_dim").get<std::size_t>();
    c.output_dim = j.value("output_dim", kSharedSpaceDim);
    c.hidden_dims = j.value("hidden_dims", std::vector<std::size_t>{});
    c.model_width = j.value("model_width", std::size_t{256});
    c.num_heads = j.value("num_heads", std::size_t{4});
    c.token_size = j.value("token_size", std::size_t{32});
    c.validate();
}

namespace detail {

inline Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, Shape shape,
                             std::mt19937_64& rng) {
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data) v = dist(rng);
    return t;
}

}  // namespace detail

struct Encoder {
    EncoderConfig config;
    ParamSet params;

    // Builds the forward pass on an existing tape. `param_nodes` must hold
    // one node per parameter name; pass leaves for training or constants for
    // inference.
    Graph::NodeId forward_graph(Graph& g, const std::map<std::string, Graph::NodeId>& param_nodes,
                                Graph::NodeId input) const {
        const Tensor& X = g.value(input);
        if (X.rank() != 2 || X.cols() != config.input_dim)
            throw ShapeMismatch("encoder expects batch x " + std::to_string(config.input_dim) +
                                ", got " + shape_str(X.shape));
        auto p = [&](const std::string& name) {
            auto it = param_nodes.find(name);
            if (it == param_nodes.end()) throw ConfigError("missing parameter node '" + name + "'");
            return it->second;
        };
        if (config.kind == EncoderConfig::Kind::mlp) {
            Graph::NodeId h = input;
            for (std::size_t i = 0; i < config.hidden_dims.size(); ++i) {
                std::string tag = "layer" + std::to_string(i);
                h = g.relu(g.bias_add(g.matmul(h, p(tag + ".w")), p(tag + ".b")));
            }
            return g.bias_add(g.matmul(h, p("out.w")), p("out.b"));
        }
        std::size_t m = X.rows();
        std::size_t t = config.num_tokens();
        std::size_t w = config.model_width;
        std::size_t heads = config.num_heads;
        std::size_t hd = w / heads;
        Graph::NodeId padded = g.pad_cols(input, t * config.token_size);
        Graph::NodeId tokens = g.reshape(padded, {m * t, config.token_size});
        Graph::NodeId proj = g.bias_add(g.matmul(tokens, p("tok.w")), p("tok.b"));
        auto heads_3d = [&](Graph::NodeId flat) {
            Graph::NodeId four = g.reshape(flat, {m, t, heads, hd});
            return g.reshape(g.transpose_0213(four), {m * heads, t, hd});
        };
        Graph::NodeId q = heads_3d(g.bias_add(g.matmul(proj, p("attn.wq")), p("attn.bq")));
        Graph::NodeId k = heads_3d(g.bias_add(g.matmul(proj, p("attn.wk")), p("attn.bk")));
        Graph::NodeId v = heads_3d(g.bias_add(g.matmul(proj, p("attn.wv")), p("attn.bv")));
        Graph::NodeId scores = g.scale(g.bmm_nt(q, k), 1.0 / std::sqrt(static_cast<double>(hd)));
        Graph::NodeId weights =
            g.reshape(g.softmax_rows(g.reshape(scores, {m * heads * t, t})), {m * heads, t, t});
        Graph::NodeId mixed = g.bmm(weights, v);
        Graph::NodeId merged =
            g.reshape(g.transpose_0213(g.reshape(mixed, {m, heads, t, hd})), {m * t, w});
        Graph::NodeId attn_out = g.bias_add(g.matmul(merged, p("attn.wo")), p("attn.bo"));
        Graph::NodeId resid = g.add(proj, attn_out);
        Graph::NodeId pooled = g.mean_rows(g.reshape(resid, {m, t, w}));
        return g.bias_add(g.matmul(pooled, p("out.w")), p("out.b"));
    }

    // Pure inference forward. Deterministic; batch rows are independent.
    Tensor forward(const Tensor& batch) const {
        Graph g;
        std::map<std::string, Graph::NodeId> nodes;
        for (const auto& [name, t] : params) nodes.emplace(name, g.constant(t));
        Graph::NodeId out = forward_graph(g, nodes, g.constant(batch));
        return g.value(out);
    }
};

inline Encoder build_mlp_encoder(std::size_t input_dim, std::vector<std::size_t> hidden_dims,
                                 std::size_t output_dim, std::uint64_t seed) {
    EncoderConfig cfg;
    cfg.kind = EncoderConfig::Kind::mlp;
    cfg.input_dim = input_dim;
    cfg.hidden_dims = std::move(hidden_dims);
    cfg.output_dim = output_dim;
    cfg.validate();
    Encoder enc{cfg, {}};
    std::mt19937_64 rng(seed);
    std::size_t prev = input_dim;
    for (std::size_t i = 0; i < cfg.hidden_dims.size(); ++i) {
        std::size_t h = cfg.hidden_dims[i];
        std::string tag = "layer" + std::to_string(i);
        enc.params.emplace(tag + ".w", detail::glorot_uniform(prev, h, {prev, h}, rng));
        enc.params.emplace(tag + ".b", Tensor::zeros({h}));
        prev = h;
    }
    enc.params.emplace("out.w", detail::glorot_uniform(prev, output_dim, {prev, output_dim}, rng));
    enc.params.emplace("out.b", Tensor::zeros({output_dim}));
    return enc;
}

inline Encoder build_attention_encoder(std::size_t input_dim, std::size_t model_width,
                                       std::size_t num_heads, std::size_t token_size,
                                       std::size_t output_dim, std::uint64_t seed) {
    EncoderConfig cfg;
    cfg.kind = EncoderConfig::Kind::attention;
    cfg.input_dim = input_dim;
    cfg.model_width = model_width;
    cfg.num_heads = num_heads;
    cfg.token_size = token_size;
    cfg.output_dim = output_dim;
    cfg.validate();
    Encoder enc{cfg, {}};
    std::mt19937_64 rng(seed);
    std::size_t w = model_width;
    enc.params.emplace("tok.w", detail::glorot_uniform(token_size, w, {token_size, w}, rng));
    enc.params.emplace("tok.b", Tensor::zeros({w}));
    for (const char* name : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"})
        enc.params.emplace(name, detail::glorot_uniform(w, w, {w, w}, rng));
    for (const char* name : {"attn.bq", "attn.bk", "attn.bv", "attn.bo"})
        enc.params.emplace(name, Tensor::zeros({w}));
    enc.params.emplace("out.w", detail::glorot_uniform(w, output_dim, {w, output_dim}, rng));
    enc.params.emplace("out.b", Tensor::zeros({output_dim}));
    return enc;
}

inline Encoder build_encoder(const EncoderConfig& cfg, std::uint64_t seed) {
    if (cfg.kind == EncoderConfig::Kind::mlp)
        return build_mlp_encoder(cfg.input_dim, cfg.hidden_dims, cfg.output_dim, seed);
    return build_attention_encoder(cfg.input_dim, cfg.model_width, cfg.num_heads, cfg.token_size,
                                   cfg.output_dim, seed);
}

// Named presets for the three reference modalities. input_dim comes from the
// dataset; everything else can be overridden in the training config.
inline EncoderConfig encoder_preset(const std::string& name, std::size_t input_dim,
                                    std::size_t output_dim = kSharedSpaceDim) {
    EncoderConfig cfg;
    cfg.input_dim = input_dim;
    cfg.output_dim = output_dim;
    if (name == "cf") {
        cfg.kind = EncoderConfig::Kind::mlp;
        cfg.hidden_dims = {256};
    } else if (name == "audio") {
        cfg.kind = EncoderConfig::Kind::mlp;
        cfg.hidden_dims = {512, 256};
    } else if (name == "tag") {
        cfg.kind = EncoderConfig::Kind::attention;
        cfg.model_width = 256;
        cfg.num_heads = 4;
        cfg.token_size = 32;
    } else {
        throw ConfigError("unknown encoder preset '" + name + "'");
    }
    cfg.validate();
    return cfg;
}

}  // namespace mmfuse
