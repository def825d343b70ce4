#include "arithlab/model.hpp"

#include <omp.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <type_traits>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

namespace fs = std::filesystem;
using nlohmann::json;

namespace arithlab {

std::string pos_strategy_name(PosStrategy p) {
    switch (p) {
        case PosStrategy::Learned: return "learned";
        case PosStrategy::NoPos: return "nopos";
        case PosStrategy::RandomTag: return "randomtag";
    }
    return "learned";
}

PosStrategy pos_strategy_from_name(const std::string& s) {
    if (s == "learned") return PosStrategy::Learned;
    if (s == "nopos") return PosStrategy::NoPos;
    if (s == "randomtag") return PosStrategy::RandomTag;
    throw std::invalid_argument("unknown positional strategy '" + s + "'");
}

void ModelConfig::validate() const {
    const auto fail = [](const std::string& what) {
        throw std::invalid_argument("model config: " + what);
    };
    if (n_layer < 1) fail("n_layer must be >= 1");
    if (n_head < 1) fail("n_head must be >= 1");
    if (n_embed < 1) fail("n_embed must be >= 1");
    if (n_ctx < 1) fail("n_ctx must be >= 1");
    if (vocab_size < 1) fail("vocab_size must be >= 1");
    if (mlp_ratio < 1) fail("mlp_ratio must be >= 1");
    if (n_embed % n_head != 0) fail("n_embed must be divisible by n_head");
    if (pos == PosStrategy::RandomTag) {
        if (n_hash <= 0) fail("RandomTag requires n_hash > 0");
    } else if (n_hash != 0) {
        fail("n_hash must be 0 unless pos_strategy is RandomTag");
    }
    if (n_hash < 0) fail("n_hash must be >= 0");
    if (n_hash >= n_embed) fail("n_hash must be < n_embed");
    if (n_hash % n_head != 0) fail("n_hash must be divisible by n_head");
    if ((n_embed - n_hash) % n_head != 0) fail("n_embed - n_hash must be divisible by n_head");
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

template <typename T>
ParameterSet<T> init_parameters_t(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    const int C = cfg.n_embed, V = cfg.vocab_size, MC = cfg.mlp_width();

    ParameterSet<T> p;
    p.add("wte", {V, C});
    if (cfg.pos == PosStrategy::Learned) p.add("wpe", {cfg.n_ctx, C});
    for (int l = 0; l < cfg.n_layer; ++l) {
        const std::string h = "h" + std::to_string(l) + ".";
        p.add(h + "ln1.g", {C});
        p.add(h + "ln1.b", {C});
        p.add(h + "attn.qkv.w", {3 * C, C});
        p.add(h + "attn.qkv.b", {3 * C});
        p.add(h + "attn.proj.w", {C, C});
        p.add(h + "attn.proj.b", {C});
        p.add(h + "ln2.g", {C});
        p.add(h + "ln2.b", {C});
        p.add(h + "mlp.fc.w", {MC, C});
        p.add(h + "mlp.fc.b", {MC});
        p.add(h + "mlp.proj.w", {C, MC});
        p.add(h + "mlp.proj.b", {C});
    }
    p.add("lnf.g", {C});
    p.add("lnf.b", {C});
    p.add("unembed.w", {V, cfg.decode_width()});

    Rng rng(derive_seed(seed, {0x1417u}));
    for (auto& t : p.tensors) {
        const bool is_gain = t.name.size() >= 2 && t.name.compare(t.name.size() - 2, 2, ".g") == 0;
        const bool is_bias = t.name.size() >= 2 && t.name.compare(t.name.size() - 2, 2, ".b") == 0;
        if (is_gain) {
            std::fill(t.data.begin(), t.data.end(), T(1));
        } else if (is_bias) {
            // zero already
        } else {
            for (T& v : t.data) v = static_cast<T>(0.02 * rng.gauss());
        }
    }
    return p;
}

ParameterSet<float> init_parameters(const ModelConfig& cfg, uint64_t seed) {
    return init_parameters_t<float>(cfg, seed);
}

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

namespace {

template <typename T>
void resize_buf(std::vector<T>& v, size_t n) {
    v.resize(n);
}

}  // namespace

template <typename T>
void Activations<T>::resize(const ModelConfig& cfg, int batch, int seq) {
    B = batch;
    Tlen = seq;
    const size_t BT = static_cast<size_t>(B) * Tlen;
    const int C = cfg.n_embed, MC = cfg.mlp_width(), H = cfg.n_head, V = cfg.vocab_size;
    resize_buf(emb, BT * C);
    layers.resize(static_cast<size_t>(cfg.n_layer));
    for (auto& l : layers) {
        resize_buf(l.ln1_out, BT * C);
        resize_buf(l.ln1_mean, BT);
        resize_buf(l.ln1_rstd, BT);
        resize_buf(l.qkv, BT * 3 * C);
        resize_buf(l.att_probs, static_cast<size_t>(B) * H * Tlen * Tlen);
        resize_buf(l.att_out, BT * C);
        resize_buf(l.res1, BT * C);
        resize_buf(l.ln2_out, BT * C);
        resize_buf(l.ln2_mean, BT);
        resize_buf(l.ln2_rstd, BT);
        resize_buf(l.fc_out, BT * MC);
        resize_buf(l.gelu_out, BT * MC);
        resize_buf(l.res2, BT * C);
    }
    resize_buf(lnf_out, BT * C);
    resize_buf(lnf_mean, BT);
    resize_buf(lnf_rstd, BT);
    if (cfg.pos == PosStrategy::RandomTag) resize_buf(decode_in, BT * static_cast<size_t>(cfg.decode_width()));
    resize_buf(logits, BT * static_cast<size_t>(V));
}

template struct Activations<float>;
template struct Activations<double>;

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

template <typename T>
void embed_input(const ParameterSet<T>& params, const ModelConfig& cfg, const int32_t* tokens, int B,
                 int Tlen, const TagTableT<std::type_identity_t<T>>* tag, Activations<T>& acts) {
    if (Tlen > cfg.n_ctx)
        throw std::invalid_argument("embed_input: sequence length " + std::to_string(Tlen) +
                                    " exceeds n_ctx " + std::to_string(cfg.n_ctx));
    if (cfg.pos == PosStrategy::RandomTag) {
        if (!tag) throw std::invalid_argument("embed_input: RandomTag model requires a tag table");
        if (tag->n_hash != cfg.n_hash || tag->n_ctx < Tlen)
            throw std::invalid_argument("embed_input: tag table shape mismatch");
    }
    acts.resize(cfg, B, Tlen);

    const int C = cfg.n_embed;
    const T* wte = params.at("wte").data.data();
    const T* wpe = cfg.pos == PosStrategy::Learned ? params.at("wpe").data.data() : nullptr;
    const int hw = cfg.head_width();
    const int hc = cfg.hash_chunk();

    for (int b = 0; b < B; ++b) {
        for (int t = 0; t < Tlen; ++t) {
            const int32_t tok = tokens[static_cast<size_t>(b) * Tlen + t];
            if (tok < 0 || tok >= cfg.vocab_size)
                throw std::invalid_argument("embed_input: token id out of range");
            T* row = acts.emb.data() + (static_cast<size_t>(b) * Tlen + t) * C;
            const T* te = wte + static_cast<size_t>(tok) * C;
            std::memcpy(row, te, sizeof(T) * static_cast<size_t>(C));
            if (wpe) {
                const T* pe = wpe + static_cast<size_t>(t) * C;
                for (int c = 0; c < C; ++c) row[c] += pe[c];
            } else if (cfg.pos == PosStrategy::RandomTag && hc > 0) {
                const T* tag_row = tag->row(t);
                for (int h = 0; h < cfg.n_head; ++h) {
                    T* slot = row + h * hw + (hw - hc);
                    const T* chunk = tag_row + h * hc;
                    for (int j = 0; j < hc; ++j) slot[j] = chunk[j];
                }
            }
        }
    }
}

namespace {

template <typename T>
void attention_forward(const T* qkv, T* probs, T* out, int B, int Tlen, int C, int H) {
    const int hw = C / H;
    const T alpha = T(1) / std::sqrt(static_cast<T>(hw));
    const size_t row3 = static_cast<size_t>(3) * C;
    const int nt = kernels::threads();
#pragma omp parallel for collapse(2) schedule(static) num_threads(nt) if (nt > 1)
    for (int b = 0; b < B; ++b) {
        for (int h = 0; h < H; ++h) {
            for (int tq = 0; tq < Tlen; ++tq) {
                const T* q = qkv + (static_cast<size_t>(b) * Tlen + tq) * row3 + static_cast<size_t>(h) * hw;
                T* prow = probs + ((static_cast<size_t>(b) * H + h) * Tlen + tq) * Tlen;
                T mx = -std::numeric_limits<T>::infinity();
                for (int tk = 0; tk <= tq; ++tk) {
                    const T* k = qkv + (static_cast<size_t>(b) * Tlen + tk) * row3 + C +
                                 static_cast<size_t>(h) * hw;
                    T acc = T(0);
                    for (int j = 0; j < hw; ++j) acc += q[j] * k[j];
                    acc *= alpha;
                    prow[tk] = acc;
                    mx = acc > mx ? acc : mx;
                }
                T sum = T(0);
                for (int tk = 0; tk <= tq; ++tk) {
                    prow[tk] = std::exp(prow[tk] - mx);
                    sum += prow[tk];
                }
                const T inv = T(1) / sum;
                for (int tk = 0; tk <= tq; ++tk) prow[tk] *= inv;
                for (int tk = tq + 1; tk < Tlen; ++tk) prow[tk] = T(0);

                T* o = out + (static_cast<size_t>(b) * Tlen + tq) * C + static_cast<size_t>(h) * hw;
                for (int j = 0; j < hw; ++j) o[j] = T(0);
                for (int tk = 0; tk <= tq; ++tk) {
                    const T p = prow[tk];
                    const T* v = qkv + (static_cast<size_t>(b) * Tlen + tk) * row3 + 2 * C +
                                 static_cast<size_t>(h) * hw;
                    for (int j = 0; j < hw; ++j) o[j] += p * v[j];
                }
            }
        }
    }
}

template <typename T>
void attention_backward(const T* qkv, const T* probs, const T* dout, T* dqkv, int B, int Tlen, int C,
                        int H) {
    const int hw = C / H;
    const T alpha = T(1) / std::sqrt(static_cast<T>(hw));
    const size_t row3 = static_cast<size_t>(3) * C;
    const int nt = kernels::threads();
#pragma omp parallel for collapse(2) schedule(static) num_threads(nt) if (nt > 1)
    for (int b = 0; b < B; ++b) {
        for (int h = 0; h < H; ++h) {
            std::vector<T> dp(static_cast<size_t>(Tlen));
            for (int tq = 0; tq < Tlen; ++tq) {
                const T* prow = probs + ((static_cast<size_t>(b) * H + h) * Tlen + tq) * Tlen;
                const T* dO = dout + (static_cast<size_t>(b) * Tlen + tq) * C + static_cast<size_t>(h) * hw;
                for (int tk = 0; tk <= tq; ++tk) {
                    const T* v = qkv + (static_cast<size_t>(b) * Tlen + tk) * row3 + 2 * C +
                                 static_cast<size_t>(h) * hw;
                    T* dv = dqkv + (static_cast<size_t>(b) * Tlen + tk) * row3 + 2 * C +
                            static_cast<size_t>(h) * hw;
                    const T p = prow[tk];
                    T acc = T(0);
                    for (int j = 0; j < hw; ++j) {
                        dv[j] += p * dO[j];
                        acc += dO[j] * v[j];
                    }
                    dp[static_cast<size_t>(tk)] = acc;
                }
                T dot = T(0);
                for (int tk = 0; tk <= tq; ++tk) dot += dp[static_cast<size_t>(tk)] * prow[tk];
                const T* q = qkv + (static_cast<size_t>(b) * Tlen + tq) * row3 + static_cast<size_t>(h) * hw;
                T* dq = dqkv + (static_cast<size_t>(b) * Tlen + tq) * row3 + static_cast<size_t>(h) * hw;
                for (int tk = 0; tk <= tq; ++tk) {
                    const T ds = alpha * prow[tk] * (dp[static_cast<size_t>(tk)] - dot);
                    const T* k = qkv + (static_cast<size_t>(b) * Tlen + tk) * row3 + C +
                                 static_cast<size_t>(h) * hw;
                    T* dk = dqkv + (static_cast<size_t>(b) * Tlen + tk) * row3 + C +
                            static_cast<size_t>(h) * hw;
                    for (int j = 0; j < hw; ++j) {
                        dq[j] += ds * k[j];
                        dk[j] += ds * q[j];
                    }
                }
            }
        }
    }
}

template <typename T>
void check_finite(const std::vector<T>& v, const std::string& where) {
    for (const T x : v) {
        if (!std::isfinite(x)) throw std::runtime_error("non-finite activation in " + where);
    }
}

}  // namespace

template <typename T>
void forward(const ParameterSet<T>& params, const ModelConfig& cfg, const int32_t* tokens, int B,
             int Tlen, const TagTableT<std::type_identity_t<T>>* tag, Activations<T>& acts) {
    embed_input(params, cfg, tokens, B, Tlen, tag, acts);

    const int C = cfg.n_embed, MC = cfg.mlp_width(), H = cfg.n_head;
    const int BT = B * Tlen;
    const T eps = T(1e-5);

    const T* x = acts.emb.data();
    for (int l = 0; l < cfg.n_layer; ++l) {
        auto& L = acts.layers[static_cast<size_t>(l)];
        const std::string h = "h" + std::to_string(l) + ".";
        kernels::layernorm_fwd(x, params.at(h + "ln1.g").data.data(), params.at(h + "ln1.b").data.data(),
                               L.ln1_out.data(), L.ln1_mean.data(), L.ln1_rstd.data(), BT, C, eps);
        kernels::matmul_xwt(L.ln1_out.data(), params.at(h + "attn.qkv.w").data.data(),
                            params.at(h + "attn.qkv.b").data.data(), L.qkv.data(), BT, C, 3 * C);
        attention_forward(L.qkv.data(), L.att_probs.data(), L.att_out.data(), B, Tlen, C, H);
        // res1 = x + proj(att_out)
        kernels::matmul_xwt(L.att_out.data(), params.at(h + "attn.proj.w").data.data(),
                            params.at(h + "attn.proj.b").data.data(), L.res1.data(), BT, C, C);
        kernels::add_inplace(L.res1.data(), x, static_cast<size_t>(BT) * C);
        kernels::layernorm_fwd(L.res1.data(), params.at(h + "ln2.g").data.data(),
                               params.at(h + "ln2.b").data.data(), L.ln2_out.data(), L.ln2_mean.data(),
                               L.ln2_rstd.data(), BT, C, eps);
        kernels::matmul_xwt(L.ln2_out.data(), params.at(h + "mlp.fc.w").data.data(),
                            params.at(h + "mlp.fc.b").data.data(), L.fc_out.data(), BT, C, MC);
        kernels::gelu_fwd(L.fc_out.data(), L.gelu_out.data(), static_cast<size_t>(BT) * MC);
        kernels::matmul_xwt(L.gelu_out.data(), params.at(h + "mlp.proj.w").data.data(),
                            params.at(h + "mlp.proj.b").data.data(), L.res2.data(), BT, MC, C);
        kernels::add_inplace(L.res2.data(), L.res1.data(), static_cast<size_t>(BT) * C);
        check_finite(L.res2, "layer " + std::to_string(l));
        x = L.res2.data();
    }
    kernels::layernorm_fwd(x, params.at("lnf.g").data.data(), params.at("lnf.b").data.data(),
                           acts.lnf_out.data(), acts.lnf_mean.data(), acts.lnf_rstd.data(), BT, C, eps);

    const int dout = cfg.decode_width();
    const T* decode_ptr = acts.lnf_out.data();
    if (cfg.pos == PosStrategy::RandomTag) {
        const int hw = cfg.head_width(), hc = cfg.hash_chunk(), keep = hw - hc;
        for (int r = 0; r < BT; ++r) {
            const T* src = acts.lnf_out.data() + static_cast<size_t>(r) * C;
            T* dst = acts.decode_in.data() + static_cast<size_t>(r) * dout;
            for (int h = 0; h < H; ++h)
                for (int j = 0; j < keep; ++j) dst[h * keep + j] = src[h * hw + j];
        }
        decode_ptr = acts.decode_in.data();
    }
    kernels::matmul_xwt(decode_ptr, params.at("unembed.w").data.data(), static_cast<const T*>(nullptr),
                        acts.logits.data(), BT, dout, cfg.vocab_size);
}

// ---------------------------------------------------------------------------
// Loss + backward
// ---------------------------------------------------------------------------

template <typename T>
T loss_from_logits(const std::vector<T>& logits, const int32_t* targets, const uint8_t* mask, int rows,
                   int vocab_size) {
    int m = 0;
    double acc = 0.0;
    std::vector<T> row(static_cast<size_t>(vocab_size));
    for (int r = 0; r < rows; ++r) {
        if (!mask[r]) continue;
        ++m;
        std::copy_n(logits.data() + static_cast<size_t>(r) * vocab_size, vocab_size, row.data());
        kernels::serial::softmax_rows(row.data(), 1, vocab_size);
        acc -= std::log(static_cast<double>(row[static_cast<size_t>(targets[r])]));
    }
    if (m == 0) throw std::invalid_argument("loss: empty mask");
    return static_cast<T>(acc / m);
}

namespace {

// Per-pass gradient scratch, kept out of Activations so the forward-only path
// stays lean.
template <typename T>
struct BackwardScratch {
    std::vector<T> dlogits, ddecode, dstream, dtmp_c, dmlp, dmlp2, dqkv, datt_out;

    void resize(const ModelConfig& cfg, int BT) {
        const size_t bt = static_cast<size_t>(BT);
        dlogits.resize(bt * cfg.vocab_size);
        ddecode.resize(bt * cfg.decode_width());
        dstream.resize(bt * cfg.n_embed);
        dtmp_c.resize(bt * cfg.n_embed);
        dmlp.resize(bt * cfg.mlp_width());
        dmlp2.resize(bt * cfg.mlp_width());
        dqkv.resize(bt * 3 * cfg.n_embed);
        datt_out.resize(bt * cfg.n_embed);
    }
};

template <typename T>
BackwardScratch<T>& backward_scratch() {
    static thread_local BackwardScratch<T> scratch;
    return scratch;
}

}  // namespace

template <typename T>
T loss_and_backward(const ParameterSet<T>& params, const ModelConfig& cfg, const int32_t* tokens,
                    const int32_t* targets, const uint8_t* mask, int B, int Tlen,
                    const TagTableT<std::type_identity_t<T>>* tag, Activations<T>& acts, ParameterSet<T>& grads) {
    forward(params, cfg, tokens, B, Tlen, tag, acts);

    const int C = cfg.n_embed, MC = cfg.mlp_width(), H = cfg.n_head, V = cfg.vocab_size;
    const int BT = B * Tlen;
    const int dout = cfg.decode_width();
    BackwardScratch<T>& ws = backward_scratch<T>();
    ws.resize(cfg, BT);

    // softmax + cross entropy; acts.logits becomes the probabilities
    kernels::softmax_rows(acts.logits.data(), BT, V);
    int m = 0;
    for (int r = 0; r < BT; ++r)
        if (mask[r]) ++m;
    if (m == 0) throw std::invalid_argument("loss: empty mask");
    double acc = 0.0;
    for (int r = 0; r < BT; ++r) {
        if (!mask[r]) continue;
        acc -= std::log(static_cast<double>(acts.logits[static_cast<size_t>(r) * V + targets[r]]));
    }
    const T loss = static_cast<T>(acc / m);

    const T inv_m = T(1) / static_cast<T>(m);
    for (int r = 0; r < BT; ++r) {
        T* drow = ws.dlogits.data() + static_cast<size_t>(r) * V;
        const T* prow = acts.logits.data() + static_cast<size_t>(r) * V;
        if (!mask[r]) {
            std::fill(drow, drow + V, T(0));
            continue;
        }
        for (int c = 0; c < V; ++c) drow[c] = prow[c] * inv_m;
        drow[targets[r]] -= inv_m;
    }

    // unembedding
    const T* decode_ptr = cfg.pos == PosStrategy::RandomTag ? acts.decode_in.data() : acts.lnf_out.data();
    kernels::matmul_xw(ws.dlogits.data(), params.at("unembed.w").data.data(), ws.ddecode.data(), BT, V,
                       dout);
    kernels::matmul_dw(ws.dlogits.data(), decode_ptr, grads.at("unembed.w").data.data(), static_cast<T*>(nullptr), BT, V,
                       dout);

    // expand decode gradient back to full width
    const T* dlnf = ws.ddecode.data();
    if (cfg.pos == PosStrategy::RandomTag) {
        const int hw = cfg.head_width(), hc = cfg.hash_chunk(), keep = hw - hc;
        std::fill(ws.dtmp_c.begin(), ws.dtmp_c.end(), T(0));
        for (int r = 0; r < BT; ++r) {
            const T* src = ws.ddecode.data() + static_cast<size_t>(r) * dout;
            T* dst = ws.dtmp_c.data() + static_cast<size_t>(r) * C;
            for (int h = 0; h < H; ++h)
                for (int j = 0; j < keep; ++j) dst[h * hw + j] = src[h * keep + j];
        }
        dlnf = ws.dtmp_c.data();
    }

    const T* x_last = cfg.n_layer ? acts.layers.back().res2.data() : acts.emb.data();
    std::fill(ws.dstream.begin(), ws.dstream.end(), T(0));
    kernels::layernorm_bwd_input(dlnf, x_last, params.at("lnf.g").data.data(), acts.lnf_mean.data(),
                                 acts.lnf_rstd.data(), ws.dstream.data(), BT, C);
    kernels::layernorm_bwd_params(dlnf, x_last, acts.lnf_mean.data(), acts.lnf_rstd.data(),
                                  grads.at("lnf.g").data.data(), grads.at("lnf.b").data.data(), BT, C);

    for (int l = cfg.n_layer - 1; l >= 0; --l) {
        auto& L = acts.layers[static_cast<size_t>(l)];
        const std::string h = "h" + std::to_string(l) + ".";
        const T* x_in = l == 0 ? acts.emb.data() : acts.layers[static_cast<size_t>(l - 1)].res2.data();

        // MLP branch; dstream holds d(res2)
        kernels::matmul_xw(ws.dstream.data(), params.at(h + "mlp.proj.w").data.data(), ws.dmlp.data(), BT,
                           C, MC);
        kernels::matmul_dw(ws.dstream.data(), L.gelu_out.data(), grads.at(h + "mlp.proj.w").data.data(),
                           grads.at(h + "mlp.proj.b").data.data(), BT, C, MC);
        kernels::gelu_bwd(L.fc_out.data(), ws.dmlp.data(), ws.dmlp2.data(), static_cast<size_t>(BT) * MC);
        kernels::matmul_xw(ws.dmlp2.data(), params.at(h + "mlp.fc.w").data.data(), ws.dtmp_c.data(), BT,
                           MC, C);
        kernels::matmul_dw(ws.dmlp2.data(), L.ln2_out.data(), grads.at(h + "mlp.fc.w").data.data(),
                           grads.at(h + "mlp.fc.b").data.data(), BT, MC, C);
        kernels::layernorm_bwd_input(ws.dtmp_c.data(), L.res1.data(), params.at(h + "ln2.g").data.data(),
                                     L.ln2_mean.data(), L.ln2_rstd.data(), ws.dstream.data(), BT, C);
        kernels::layernorm_bwd_params(ws.dtmp_c.data(), L.res1.data(), L.ln2_mean.data(),
                                      L.ln2_rstd.data(), grads.at(h + "ln2.g").data.data(),
                                      grads.at(h + "ln2.b").data.data(), BT, C);

        // Attention branch; dstream now holds d(res1)
        kernels::matmul_xw(ws.dstream.data(), params.at(h + "attn.proj.w").data.data(),
                           ws.datt_out.data(), BT, C, C);
        kernels::matmul_dw(ws.dstream.data(), L.att_out.data(), grads.at(h + "attn.proj.w").data.data(),
                           grads.at(h + "attn.proj.b").data.data(), BT, C, C);
        std::fill(ws.dqkv.begin(), ws.dqkv.end(), T(0));
        attention_backward(L.qkv.data(), L.att_probs.data(), ws.datt_out.data(), ws.dqkv.data(), B, Tlen,
                           C, H);
        kernels::matmul_xw(ws.dqkv.data(), params.at(h + "attn.qkv.w").data.data(), ws.dtmp_c.data(), BT,
                           3 * C, C);
        kernels::matmul_dw(ws.dqkv.data(), L.ln1_out.data(), grads.at(h + "attn.qkv.w").data.data(),
                           grads.at(h + "attn.qkv.b").data.data(), BT, 3 * C, C);
        kernels::layernorm_bwd_input(ws.dtmp_c.data(), x_in, params.at(h + "ln1.g").data.data(),
                                     L.ln1_mean.data(), L.ln1_rstd.data(), ws.dstream.data(), BT, C);
        kernels::layernorm_bwd_params(ws.dtmp_c.data(), x_in, L.ln1_mean.data(), L.ln1_rstd.data(),
                                      grads.at(h + "ln1.g").data.data(), grads.at(h + "ln1.b").data.data(),
                                      BT, C);
    }

    // embedding backward; serial scatter keeps accumulation order fixed
    T* dwte = grads.at("wte").data.data();
    T* dwpe = cfg.pos == PosStrategy::Learned ? grads.at("wpe").data.data() : nullptr;
    const int hw = cfg.head_width(), hc = cfg.hash_chunk();
    for (int b = 0; b < B; ++b) {
        for (int t = 0; t < Tlen; ++t) {
            const int32_t tok = tokens[static_cast<size_t>(b) * Tlen + t];
            const T* drow = ws.dstream.data() + (static_cast<size_t>(b) * Tlen + t) * C;
            T* wrow = dwte + static_cast<size_t>(tok) * C;
            if (cfg.pos == PosStrategy::RandomTag && hc > 0) {
                for (int h2 = 0; h2 < H; ++h2) {
                    const int base = h2 * hw;
                    for (int j = 0; j < hw - hc; ++j) wrow[base + j] += drow[base + j];
                    // tag dims carry no token-embedding gradient: the overwrite
                    // severs the dependency
                }
            } else {
                for (int c = 0; c < C; ++c) wrow[c] += drow[c];
            }
            if (dwpe) {
                T* prow = dwpe + static_cast<size_t>(t) * C;
                for (int c = 0; c < C; ++c) prow[c] += drow[c];
            }
        }
    }

    for (const auto& t : grads.tensors) {
        for (const T g : t.data) {
            if (!std::isfinite(g)) throw std::runtime_error("non-finite gradient in " + t.name);
        }
    }
    return loss;
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

template <typename T>
std::vector<int32_t> generate_t(const ParameterSet<T>& params, const ModelConfig& cfg,
                                const std::vector<int32_t>& prompt, int max_new,
                                const TagTableT<std::type_identity_t<T>>* tag) {
    if (prompt.empty()) throw std::invalid_argument("generate: prompt must be non-empty");
    if (static_cast<int>(prompt.size()) + max_new > cfg.n_ctx)
        throw std::invalid_argument("generate: prompt length + max_new exceeds n_ctx");

    std::vector<int32_t> tokens = prompt;
    Activations<T> acts;
    for (int step = 0; step < max_new; ++step) {
        const int Tlen = static_cast<int>(tokens.size());
        forward(params, cfg, tokens.data(), 1, Tlen, tag, acts);
        const T* row = acts.logits.data() + static_cast<size_t>(Tlen - 1) * cfg.vocab_size;
        int32_t best = 0;
        for (int c = 1; c < cfg.vocab_size; ++c)
            if (row[c] > row[best]) best = c;  // strict > breaks ties toward the lowest id
        tokens.push_back(best);
        if (best == Vocabulary::kEos) break;
    }
    return tokens;
}

std::vector<int32_t> generate(const ParameterSet<float>& params, const ModelConfig& cfg,
                              const std::vector<int32_t>& prompt, int max_new, const TagTable* tag) {
    return generate_t<float>(params, cfg, prompt, max_new, tag);
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

json model_config_to_json(const ModelConfig& cfg) {
    return json{{"n_layer", cfg.n_layer},     {"n_head", cfg.n_head},   {"n_embed", cfg.n_embed},
                {"n_ctx", cfg.n_ctx},         {"n_hash", cfg.n_hash},   {"pos", pos_strategy_name(cfg.pos)},
                {"vocab_size", cfg.vocab_size}, {"mlp_ratio", cfg.mlp_ratio}};
}

ModelConfig model_config_from_json(const json& j) {
    ModelConfig cfg;
    cfg.n_layer = j.at("n_layer").get<int>();
    cfg.n_head = j.at("n_head").get<int>();
    cfg.n_embed = j.at("n_embed").get<int>();
    cfg.n_ctx = j.at("n_ctx").get<int>();
    cfg.n_hash = j.at("n_hash").get<int>();
    cfg.pos = pos_strategy_from_name(j.at("pos").get<std::string>());
    cfg.vocab_size = j.at("vocab_size").get<int>();
    cfg.mlp_ratio = j.at("mlp_ratio").get<int>();
    return cfg;
}

void write_tensor_blob(const fs::path& path, const ParameterSet<float>& a,
                       const ParameterSet<float>* b = nullptr) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot write " + path.string());
    for (const auto& t : a.tensors)
        f.write(reinterpret_cast<const char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (b) {
        for (const auto& t : b->tensors)
            f.write(reinterpret_cast<const char*>(t.data.data()),
                    static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    }
    if (!f) throw std::runtime_error("checkpoint: I/O failure on " + path.string());
}

void read_into(std::ifstream& f, ParameterSet<float>& p, const fs::path& path) {
    for (auto& t : p.tensors) {
        f.read(reinterpret_cast<char*>(t.data.data()),
               static_cast<std::streamsize>(t.data.size() * sizeof(float)));
        if (!f) throw std::runtime_error("checkpoint: short read from " + path.string());
    }
}

}  // namespace

void save_checkpoint(const std::string& dir, const ModelConfig& cfg, const ParameterSet<float>& params,
                     const CheckpointMeta& meta, const ParameterSet<float>* opt_m,
                     const ParameterSet<float>* opt_v) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    const fs::path root(dir);

    json config;
    config["model"] = model_config_to_json(cfg);
    config["meta"] = {{"epoch", meta.epoch},
                      {"init_seed", meta.init_seed},
                      {"train_seed", meta.train_seed},
                      {"tag_seed", meta.tag_seed},
                      {"has_optimizer_state", meta.has_optimizer_state && opt_m && opt_v}};
    {
        std::ofstream f(root / "config.json", std::ios::binary);
        if (!f) throw std::runtime_error("checkpoint: cannot write " + (root / "config.json").string());
        f << config.dump(2) << '\n';
    }
    {
        json manifest = json::array();
        for (const auto& t : params.tensors) manifest.push_back({{"name", t.name}, {"shape", t.shape}});
        std::ofstream f(root / "manifest.json", std::ios::binary);
        if (!f) throw std::runtime_error("checkpoint: cannot write " + (root / "manifest.json").string());
        f << manifest.dump(2) << '\n';
    }
    write_tensor_blob(root / "tensors.bin", params);
    if (meta.has_optimizer_state && opt_m && opt_v)
        write_tensor_blob(root / "optimizer.bin", *opt_m, opt_v);
}

Checkpoint load_checkpoint(const std::string& dir) {
    const fs::path root(dir);
    std::ifstream cf(root / "config.json", std::ios::binary);
    if (!cf) throw std::runtime_error("checkpoint: cannot read " + (root / "config.json").string());
    const json config = json::parse(cf);

    Checkpoint out;
    out.cfg = model_config_from_json(config.at("model"));
    out.cfg.validate();
    const json& meta = config.at("meta");
    out.meta.epoch = meta.at("epoch").get<int>();
    out.meta.init_seed = meta.at("init_seed").get<uint64_t>();
    out.meta.train_seed = meta.at("train_seed").get<uint64_t>();
    out.meta.tag_seed = meta.at("tag_seed").get<uint64_t>();
    out.meta.has_optimizer_state = meta.at("has_optimizer_state").get<bool>();

    out.params = init_parameters(out.cfg, 0);  // structure only; data overwritten below

    std::ifstream mf(root / "manifest.json", std::ios::binary);
    if (!mf) throw std::runtime_error("checkpoint: cannot read " + (root / "manifest.json").string());
    const json manifest = json::parse(mf);
    if (!manifest.is_array() || manifest.size() != out.params.tensors.size())
        throw std::runtime_error("checkpoint: manifest does not match the model config");
    for (size_t i = 0; i < out.params.tensors.size(); ++i) {
        const auto& t = out.params.tensors[i];
        if (manifest[i].at("name").get<std::string>() != t.name ||
            manifest[i].at("shape").get<std::vector<int>>() != t.shape)
            throw std::runtime_error("checkpoint: manifest mismatch at tensor '" + t.name + "'");
    }

    std::ifstream tf(root / "tensors.bin", std::ios::binary);
    if (!tf) throw std::runtime_error("checkpoint: cannot read " + (root / "tensors.bin").string());
    read_into(tf, out.params, root / "tensors.bin");
    tf.peek();
    if (!tf.eof()) throw std::runtime_error("checkpoint: trailing bytes in " + (root / "tensors.bin").string());

    if (out.meta.has_optimizer_state) {
        out.opt_m = out.params.zeros_like();
        out.opt_v = out.params.zeros_like();
        std::ifstream of(root / "optimizer.bin", std::ios::binary);
        if (!of) throw std::runtime_error("checkpoint: cannot read " + (root / "optimizer.bin").string());
        read_into(of, out.opt_m, root / "optimizer.bin");
        read_into(of, out.opt_v, root / "optimizer.bin");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Explicit instantiations
// ---------------------------------------------------------------------------

#define ARITHLAB_MODEL_INSTANTIATE(T)                                                                    \
    template ParameterSet<T> init_parameters_t<T>(const ModelConfig&, uint64_t);                         \
    template void embed_input<T>(const ParameterSet<T>&, const ModelConfig&, const int32_t*, int, int,   \
                                 const TagTableT<T>*, Activations<T>&);                                  \
    template void forward<T>(const ParameterSet<T>&, const ModelConfig&, const int32_t*, int, int,       \
                             const TagTableT<T>*, Activations<T>&);                                      \
    template T loss_from_logits<T>(const std::vector<T>&, const int32_t*, const uint8_t*, int, int);     \
    template T loss_and_backward<T>(const ParameterSet<T>&, const ModelConfig&, const int32_t*,          \
                                    const int32_t*, const uint8_t*, int, int, const TagTableT<T>*,       \
                                    Activations<T>&, ParameterSet<T>&);                                  \
    template std::vector<int32_t> generate_t<T>(const ParameterSet<T>&, const ModelConfig&,              \
                                                const std::vector<int32_t>&, int, const TagTableT<T>*);

ARITHLAB_MODEL_INSTANTIATE(float)
ARITHLAB_MODEL_INSTANTIATE(double)

#undef ARITHLAB_MODEL_INSTANTIATE

}  // namespace arithlab
