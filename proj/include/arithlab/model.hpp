#pragma once

#include <cmath>
#include <type_traits>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "arithlab/kernels.hpp"
#include "arithlab/rng.hpp"
#include "arithlab/tensor.hpp"
#include "arithlab/vocab.hpp"

namespace arithlab {

enum class PosStrategy { Learned, NoPos, RandomTag };

std::string pos_strategy_name(PosStrategy p);
PosStrategy pos_strategy_from_name(const std::string& s);

struct ModelConfig {
    int n_layer = 2;
    int n_head = 4;
    int n_embed = 128;
    int n_ctx = 64;
    int n_hash = 0;
    PosStrategy pos = PosStrategy::Learned;
    int vocab_size = 0;
    int mlp_ratio = 4;

    int head_width() const { return n_embed / n_head; }
    int hash_chunk() const { return n_head ? n_hash / n_head : 0; }
    int decode_width() const { return n_embed - n_hash; }
    int mlp_width() const { return mlp_ratio * n_embed; }

    // Throws std::invalid_argument listing the violated invariant.
    void validate() const;
};

// Per-position Gaussian tags occupying the reserved tail slice of every
// head's embedding dims. Regenerated whenever the epoch stamp changes.
template <typename T>
struct TagTableT {
    int epoch = -1;
    uint64_t seed = 0;
    int n_ctx = 0;
    int n_hash = 0;
    std::vector<T> rows;  // n_ctx * n_hash, standard normal

    const T* row(int t) const { return rows.data() + static_cast<size_t>(t) * n_hash; }
};

using TagTable = TagTableT<float>;

// Fresh n_ctx x n_hash standard-normal table, deterministic in (seed, epoch).
// Throws std::logic_error unless cfg.pos == RandomTag.
template <typename T>
TagTableT<T> make_tag_table_t(const ModelConfig& cfg, int epoch, uint64_t seed) {
    if (cfg.pos != PosStrategy::RandomTag)
        throw std::logic_error("make_tag_table: positional strategy is not RandomTag");
    cfg.validate();
    TagTableT<T> tag;
    tag.epoch = epoch;
    tag.seed = seed;
    tag.n_ctx = cfg.n_ctx;
    tag.n_hash = cfg.n_hash;
    tag.rows.resize(static_cast<size_t>(cfg.n_ctx) * cfg.n_hash);
    Rng rng(derive_seed(seed, {0x7A6u, static_cast<uint64_t>(epoch)}));
    for (T& v : tag.rows) v = static_cast<T>(rng.gauss());
    return tag;
}

inline TagTable make_tag_table(const ModelConfig& cfg, int epoch, uint64_t seed) {
    return make_tag_table_t<float>(cfg, epoch, seed);
}

// Weights ~ N(0, 0.02^2), biases zero, normalization gains one; deterministic
// in `seed`. The position table exists only under Learned; the unembedding is
// vocab_size x decode_width().
template <typename T>
ParameterSet<T> init_parameters_t(const ModelConfig& cfg, uint64_t seed);

ParameterSet<float> init_parameters(const ModelConfig& cfg, uint64_t seed);

// Activation buffers for one forward/backward pass; reusable across batches.
template <typename T>
struct Activations {
    int B = 0, Tlen = 0;

    std::vector<T> emb;
    struct Layer {
        std::vector<T> ln1_out, ln1_mean, ln1_rstd;
        std::vector<T> qkv;
        std::vector<T> att_probs;
        std::vector<T> att_out;
        std::vector<T> res1;
        std::vector<T> ln2_out, ln2_mean, ln2_rstd;
        std::vector<T> fc_out;
        std::vector<T> gelu_out;
        std::vector<T> res2;
    };
    std::vector<Layer> layers;
    std::vector<T> lnf_out, lnf_mean, lnf_rstd;
    std::vector<T> decode_in;
    std::vector<T> logits;  // holds probabilities after loss_and_grad

    void resize(const ModelConfig& cfg, int batch, int seq);
};

// Token embedding plus positional treatment. Learned adds the position row;
// NoPos leaves the token embedding; RandomTag overwrites the last
// n_hash/n_head dims of each head slice with the tag chunks for the position.
// tokens is row-major [B, Tlen]. Output: acts.emb.
template <typename T>
void embed_input(const ParameterSet<T>& params, const ModelConfig& cfg, const int32_t* tokens, int B,
                 int Tlen, const TagTableT<std::type_identity_t<T>>* tag, Activations<T>& acts);

// Pre-norm causal transformer. Fills acts.logits ([B*Tlen, vocab_size]).
// Throws std::runtime_error naming the layer on non-finite activations and
// std::invalid_argument when Tlen > n_ctx or a RandomTag model lacks a tag.
template <typename T>
void forward(const ParameterSet<T>& params, const ModelConfig& cfg, const int32_t* tokens, int B,
             int Tlen, const TagTableT<std::type_identity_t<T>>* tag, Activations<T>& acts);

// Mean cross-entropy (natural log) over positions where mask != 0.
// Throws std::invalid_argument on an empty mask.
template <typename T>
T loss_from_logits(const std::vector<T>& logits, const int32_t* targets, const uint8_t* mask, int rows,
                   int vocab_size);

// Loss + full parameter gradients. Replaces acts.logits with probabilities.
template <typename T>
T loss_and_backward(const ParameterSet<T>& params, const ModelConfig& cfg, const int32_t* tokens,
                    const int32_t* targets, const uint8_t* mask, int B, int Tlen,
                    const TagTableT<std::type_identity_t<T>>* tag, Activations<T>& acts, ParameterSet<T>& grads);

// Greedy decoding, ties broken toward the lowest token id; stops at EOS or
// max_new. Returns the full sequence (prompt + completion). Throws on
// context overflow.
template <typename T>
std::vector<int32_t> generate_t(const ParameterSet<T>& params, const ModelConfig& cfg,
                                const std::vector<int32_t>& prompt, int max_new,
                                const TagTableT<std::type_identity_t<T>>* tag);

std::vector<int32_t> generate(const ParameterSet<float>& params, const ModelConfig& cfg,
                              const std::vector<int32_t>& prompt, int max_new, const TagTable* tag);

// Checkpoint directory: config.json (model config + metadata), manifest.json
// (ordered tensor names and shapes), tensors.bin (raw little-endian row-major
// float32), optional optimizer.bin. Loading reproduces evaluation logits
// bit-exactly in single-threaded mode.
struct CheckpointMeta {
    int epoch = 0;
    uint64_t init_seed = 0;
    uint64_t train_seed = 0;
    uint64_t tag_seed = 0;
    bool has_optimizer_state = false;
};

void save_checkpoint(const std::string& dir, const ModelConfig& cfg, const ParameterSet<float>& params,
                     const CheckpointMeta& meta, const ParameterSet<float>* opt_m = nullptr,
                     const ParameterSet<float>* opt_v = nullptr);

struct Checkpoint {
    ModelConfig cfg;
    ParameterSet<float> params;
    CheckpointMeta meta;
    ParameterSet<float> opt_m, opt_v;  // populated when meta.has_optimizer_state
};

Checkpoint load_checkpoint(const std::string& dir);

}  // namespace arithlab
