#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "arithlab/formats.hpp"
#include "arithlab/model.hpp"
#include "arithlab/vocab.hpp"

namespace arithlab {

enum class LossScope { FullSequence, AnswerOnly };

struct TrainConfig {
    int epochs = 1;
    int batch_size = 32;
    double learning_rate = 1e-3;
    double weight_decay = 0.01;
    std::optional<double> grad_clip = 1.0;  // global-norm clip
    LossScope loss_scope = LossScope::FullSequence;
    uint64_t seed = 0;
    int checkpoint_every = 0;  // 0: only the final checkpoint
    bool tag_per_batch = false;  // ablation: resample the tag table per batch

    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const;
};

// [BOS] sample [EOS]; prompt_len counts BOS plus the sample's prompt tokens.
struct TokenizedSample {
    std::vector<int32_t> ids;
    int prompt_len = 0;
};

TokenizedSample tokenize_sample(const Vocabulary& vocab, const Sample& s);

struct Batch {
    int B = 0, T = 0;
    std::vector<int32_t> input;   // B*T, PAD-padded
    std::vector<int32_t> target;  // B*T
    std::vector<uint8_t> mask;    // B*T; excludes PAD, and the prompt under AnswerOnly
    std::vector<int> sample_ids;
};

// Consecutive chunks of `order`; rows padded to the longest sample in the
// batch. Throws std::runtime_error naming the sample when one exceeds n_ctx.
std::vector<Batch> batchify(const std::vector<TokenizedSample>& samples, const std::vector<int>& order,
                            int batch_size, int n_ctx, LossScope scope);

struct TrainState {
    ParameterSet<float> params, opt_m, opt_v;
    int64_t step = 0;
    int epochs_done = 0;
};

TrainState make_train_state(const ModelConfig& cfg, uint64_t init_seed);
TrainState train_state_from_checkpoint(const Checkpoint& ck);

struct EpochLog {
    int epoch = 0;
    double mean_loss = 0.0;
};

// `on_epoch_end(epoch, mean_loss, state)` may request early stop by
// returning true.
using EpochCallback = std::function<bool(int, double, const TrainState&)>;

// AdamW over shuffled batches; the shuffle order is deterministic in
// (seed, epoch) and, under RandomTag, make_tag_table(seed, epoch) is called
// once per epoch. Aborts with epoch/step context when the loss turns
// non-finite. Progress goes to stderr, one line per epoch.
std::vector<EpochLog> train(const ModelConfig& cfg, TrainState& state, const std::vector<Sample>& corpus,
                            const Vocabulary& vocab, const TrainConfig& tc,
                            const EpochCallback& on_epoch_end = {});

// "epoch,mean_loss" rows plus a trailing provenance comment line.
void write_loss_csv(const std::string& path, const std::vector<EpochLog>& logs, uint64_t seed,
                    uint64_t cfg_hash);

}  // namespace arithlab
