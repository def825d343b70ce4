#include "arithlab/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace arithlab {

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("train config: learning_rate must be > 0");
    if (weight_decay < 0.0) throw std::invalid_argument("train config: weight_decay must be >= 0");
    if (grad_clip && !(*grad_clip > 0.0)) throw std::invalid_argument("train config: grad_clip must be > 0");
}

TokenizedSample tokenize_sample(const Vocabulary& vocab, const Sample& s) {
    TokenizedSample out;
    const TokenSeq seq = vocab.encode(s.text);
    out.ids.reserve(seq.ids.size() + 2);
    out.ids.push_back(Vocabulary::kBos);
    out.ids.insert(out.ids.end(), seq.ids.begin(), seq.ids.end());
    out.ids.push_back(Vocabulary::kEos);
    out.prompt_len = s.prompt_len + 1;  // BOS
    return out;
}

std::vector<Batch> batchify(const std::vector<TokenizedSample>& samples, const std::vector<int>& order,
                            int batch_size, int n_ctx, LossScope scope) {
    std::vector<Batch> batches;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(batch_size)) {
        const size_t end = std::min(order.size(), start + static_cast<size_t>(batch_size));
        Batch batch;
        batch.B = static_cast<int>(end - start);
        int maxT = 0;
        for (size_t i = start; i < end; ++i) {
            const auto& s = samples[static_cast<size_t>(order[i])];
            const int rows = static_cast<int>(s.ids.size()) - 1;
            if (rows > n_ctx)
                throw std::runtime_error("batchify: sample " + std::to_string(order[i]) + " has " +
                                         std::to_string(rows) + " positions, n_ctx is " +
                                         std::to_string(n_ctx));
            maxT = std::max(maxT, rows);
        }
        batch.T = maxT;
        const size_t cells = static_cast<size_t>(batch.B) * maxT;
        batch.input.assign(cells, Vocabulary::kPad);
        batch.target.assign(cells, Vocabulary::kPad);
        batch.mask.assign(cells, 0);
        batch.sample_ids.reserve(static_cast<size_t>(batch.B));
        for (size_t i = start; i < end; ++i) {
            const int row = static_cast<int>(i - start);
            const auto& s = samples[static_cast<size_t>(order[i])];
            batch.sample_ids.push_back(order[i]);
            const int rows = static_cast<int>(s.ids.size()) - 1;
            for (int t = 0; t < rows; ++t) {
                const size_t at = static_cast<size_t>(row) * maxT + t;
                batch.input[at] = s.ids[static_cast<size_t>(t)];
                batch.target[at] = s.ids[static_cast<size_t>(t) + 1];
                const bool in_answer = t + 1 >= s.prompt_len;
                batch.mask[at] = scope == LossScope::FullSequence || in_answer ? 1 : 0;
            }
        }
        batches.push_back(std::move(batch));
    }
    return batches;
}

TrainState make_train_state(const ModelConfig& cfg, uint64_t init_seed) {
    TrainState st;
    st.params = init_parameters(cfg, init_seed);
    st.opt_m = st.params.zeros_like();
    st.opt_v = st.params.zeros_like();
    return st;
}

TrainState train_state_from_checkpoint(const Checkpoint& ck) {
    TrainState st;
    st.params = ck.params;
    if (ck.meta.has_optimizer_state) {
        st.opt_m = ck.opt_m;
        st.opt_v = ck.opt_v;
    } else {
        st.opt_m = st.params.zeros_like();
        st.opt_v = st.params.zeros_like();
    }
    st.epochs_done = ck.meta.epoch;
    st.step = 0;  // bias correction restarts; acceptable for resume-from-epoch semantics
    return st;
}

namespace {

double global_grad_norm(const ParameterSet<float>& grads) {
    double sq = 0.0;
    for (const auto& t : grads.tensors)
        for (const float g : t.data) sq += static_cast<double>(g) * g;
    return std::sqrt(sq);
}

}  // namespace

std::vector<EpochLog> train(const ModelConfig& cfg, TrainState& state, const std::vector<Sample>& corpus,
                            const Vocabulary& vocab, const TrainConfig& tc,
                            const EpochCallback& on_epoch_end) {
    cfg.validate();
    tc.validate();
    if (corpus.empty()) throw std::invalid_argument("train: empty corpus");

    std::vector<TokenizedSample> tokenized;
    tokenized.reserve(corpus.size());
    for (const Sample& s : corpus) tokenized.push_back(tokenize_sample(vocab, s));

    ParameterSet<float> grads = state.params.zeros_like();
    Activations<float> acts;
    std::vector<EpochLog> logs;

    std::vector<int> order(corpus.size());
    for (int epoch = state.epochs_done; epoch < tc.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng(derive_seed(tc.seed, {0x5139u, static_cast<uint64_t>(epoch)}));
        shuffle_rng.shuffle(order);

        TagTable tag;
        const TagTable* tag_ptr = nullptr;
        if (cfg.pos == PosStrategy::RandomTag) {
            tag = make_tag_table(cfg, epoch, tc.seed);
            if (tag.epoch != epoch) throw std::logic_error("train: tag table epoch stamp mismatch");
            tag_ptr = &tag;
        }

        const std::vector<Batch> batches = batchify(tokenized, order, tc.batch_size, cfg.n_ctx, tc.loss_scope);

        double loss_acc = 0.0;
        for (size_t bi = 0; bi < batches.size(); ++bi) {
            const Batch& batch = batches[bi];
            if (cfg.pos == PosStrategy::RandomTag && tc.tag_per_batch) {
                tag = make_tag_table(cfg, epoch, derive_seed(tc.seed, {0xBA7Cu, bi}));
                tag.epoch = epoch;
            }
            grads.fill_zero();
            float loss = 0.f;
            try {
                loss = loss_and_backward<float>(state.params, cfg, batch.input.data(), batch.target.data(),
                                                batch.mask.data(), batch.B, batch.T, tag_ptr, acts, grads);
            } catch (const std::runtime_error& e) {
                throw std::runtime_error("train: " + std::string(e.what()) + " at epoch " +
                                         std::to_string(epoch) + " step " + std::to_string(bi));
            }
            if (!std::isfinite(loss))
                throw std::runtime_error("train: loss diverged at epoch " + std::to_string(epoch) +
                                         " step " + std::to_string(bi));
            loss_acc += loss;

            float scale = 1.0f;
            if (tc.grad_clip) {
                const double norm = global_grad_norm(grads);
                if (norm > *tc.grad_clip) scale = static_cast<float>(*tc.grad_clip / norm);
            }
            ++state.step;
            for (size_t ti = 0; ti < state.params.tensors.size(); ++ti) {
                auto& p = state.params.tensors[ti];
                const auto& g = grads.tensors[ti];
                const float decay =
                    p.shape.size() >= 2 ? static_cast<float>(tc.learning_rate * tc.weight_decay) : 0.0f;
                kernels::adamw_update(p.data.data(), g.data.data(), state.opt_m.tensors[ti].data.data(),
                                      state.opt_v.tensors[ti].data.data(), p.size(),
                                      static_cast<float>(tc.learning_rate), static_cast<float>(tc.beta1),
                                      static_cast<float>(tc.beta2), static_cast<float>(tc.adam_eps), decay,
                                      scale, static_cast<int>(state.step));
            }
        }

        state.epochs_done = epoch + 1;
        const double mean_loss = loss_acc / static_cast<double>(batches.size());
        logs.push_back(EpochLog{epoch, mean_loss});

        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::fprintf(stderr, "epoch %d/%d  mean_loss %.6f  (%.1fs)\n", epoch + 1, tc.epochs, mean_loss,
                     secs);

        if (on_epoch_end && on_epoch_end(epoch, mean_loss, state)) break;
    }
    return logs;
}

void write_loss_csv(const std::string& path, const std::vector<EpochLog>& logs, uint64_t seed,
                    uint64_t cfg_hash) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_loss_csv: cannot write " + path);
    f << "epoch,mean_loss\n";
    char buf[64];
    for (const EpochLog& log : logs) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g\n", log.epoch, log.mean_loss);
        f << buf;
    }
    f << "# seed=" << seed << " config_hash=" << cfg_hash << "\n";
}

}  // namespace arithlab
