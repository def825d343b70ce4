// Command-line front end: gen | train | eval | report.
//
// Exit codes: 0 success, 2 usage error, 1 runtime failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "arithlab/corpus.hpp"
#include "arithlab/dialogue.hpp"
#include "arithlab/eval.hpp"
#include "arithlab/kernels.hpp"
#include "arithlab/model.hpp"
#include "arithlab/report.hpp"
#include "arithlab/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace arithlab;

namespace {

std::string default_out(const std::string& leaf) {
    const char* root = std::getenv("ARITHLAB_OUT_ROOT");
    return (root && *root ? std::string(root) : std::string(".")) + "/" + leaf;
}

json load_config_file(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream f(path);
    if (!f) throw CLI::ValidationError("--config", "cannot read " + path);
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        throw CLI::ValidationError("--config", std::string("bad JSON: ") + e.what());
    }
}

// Flags override config-file values: only fall back to the file when the
// option was not given on the command line.
template <typename T>
void fallback(const CLI::Option* opt, const json& cfg, const char* key, T& value) {
    if (opt->count() == 0 && cfg.contains(key)) value = cfg.at(key).get<T>();
}

std::vector<int> parse_int_list(const std::string& text, const char* what) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stoi(item));
        } catch (...) {
            throw CLI::ValidationError(what, "bad integer '" + item + "'");
        }
    }
    if (out.empty()) throw CLI::ValidationError(what, "empty list");
    return out;
}

void parse_range(const std::string& text, int& lo, int& hi, const char* what) {
    const size_t colon = text.find(':');
    try {
        if (colon == std::string::npos) {
            lo = hi = std::stoi(text);
        } else {
            lo = std::stoi(text.substr(0, colon));
            hi = std::stoi(text.substr(colon + 1));
        }
    } catch (...) {
        throw CLI::ValidationError(what, "expected LO:HI, got '" + text + "'");
    }
    if (lo < 1 || hi < lo) throw CLI::ValidationError(what, "bad range '" + text + "'");
}

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

struct GenArgs {
    std::string config_path;
    std::string task = "mul";
    std::string format;  // mul: comma list of pad,rev
    int max_digits = 5;
    double one_digit_weight = 1.0;
    std::string augment = "none";
    int augment_every = 3;
    std::string variant = "basic";
    double space_p = 0.3;
    bool no_reverse_addends = false;
    std::string digits = "2:10";
    bool mix_random_space = false;
    int addition_count = 120000;
    int n = 1000;
    uint64_t seed = 0;
    std::string out;
    int threads = 0;
};

FormatSpec spec_from_gen_args(const GenArgs& a) {
    if (a.task == "mul") {
        MulFormat f;
        f.max_digits = a.max_digits;
        f.one_digit_weight = a.one_digit_weight;
        if (!a.format.empty()) {
            std::stringstream ss(a.format);
            std::string flag;
            while (std::getline(ss, flag, ',')) {
                if (flag == "pad") f.pad = true;
                else if (flag == "rev" || flag == "reverse") f.reverse = true;
                else if (flag == "basic" || flag.empty()) continue;
                else throw CLI::ValidationError("--format", "unknown multiplication flag '" + flag + "'");
            }
        }
        if (a.augment == "none") f.aug = MulAug::None;
        else if (a.augment == "nby1") f.aug = MulAug::NBy1;
        else if (a.augment == "firststep") f.aug = MulAug::FirstStep;
        else throw CLI::ValidationError("--augment", "unknown augmentation '" + a.augment + "'");
        f.aug_every = a.augment_every;
        return f;
    }
    if (a.task == "add") {
        AddFormat f;
        if (a.variant == "basic") f.variant = AddVariant::Basic;
        else if (a.variant == "random-space") f.variant = AddVariant::RandomSpace;
        else if (a.variant == "recursive") f.variant = AddVariant::Recursive;
        else throw CLI::ValidationError("--variant", "unknown addition variant '" + a.variant + "'");
        f.space_p = a.space_p;
        f.reverse_addends = !a.no_reverse_addends;
        parse_range(a.digits, f.d_lo, f.d_hi, "--digits");
        return f;
    }
    if (a.task == "rev") {
        RevFormat f;
        parse_range(a.digits, f.d_lo, f.d_hi, "--digits");
        return f;
    }
    if (a.task == "mix") {
        MixFormat f = default_mix_format(a.mix_random_space, a.addition_count);
        return f;
    }
    throw CLI::ValidationError("--task", "unknown task '" + a.task + "'");
}

int cmd_gen(const GenArgs& args_in, const CLI::App& sub) {
    GenArgs a = args_in;
    const json cfg = load_config_file(a.config_path);
    fallback(sub.get_option("--task"), cfg, "task", a.task);
    fallback(sub.get_option("--n"), cfg, "size", a.n);
    fallback(sub.get_option("--seed"), cfg, "seed", a.seed);
    fallback(sub.get_option("--max-digits"), cfg, "max_digits", a.max_digits);
    if (a.n < 1) throw CLI::ValidationError("--n", "size must be >= 1");

    FormatSpec spec;
    if (cfg.contains("spec") && sub.get_option("--task")->count() == 0)
        spec = spec_from_json(cfg.at("spec"));
    else
        spec = spec_from_gen_args(a);

    if (a.out.empty()) a.out = default_out("corpus");
    const auto samples = generate_corpus(spec, a.n, a.seed);
    const Vocabulary vocab = vocabulary_for(spec);
    write_corpus(a.out, spec, a.seed, samples, vocab);

    std::cout << "wrote " << samples.size() << " samples to " << a.out << "\n";
    std::cout << "per-cell counts (m1,m2 -> n):\n";
    for (const auto& [cell, n] : cell_counts(samples))
        std::cout << "  " << cell.first << "," << cell.second << " -> " << n << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string config_path;
    std::string corpus_dir;
    std::string out;
    bool resume = false;
    int n_layer = 2, n_head = 4, n_embed = 128, n_ctx = 64, n_hash = 0;
    std::string pos = "learned";
    int epochs = 1, batch = 32;
    double lr = 1e-3, wd = 0.01;
    std::string clip = "1.0";
    std::string loss_scope = "full";
    uint64_t seed = 0;
    int checkpoint_every = 0;
    int threads = 0;
};

std::vector<EpochLog> read_loss_csv(const std::string& path) {
    std::vector<EpochLog> logs;
    std::ifstream f(path);
    if (!f) return logs;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 'e') continue;
        const size_t comma = line.find(',');
        if (comma == std::string::npos) continue;
        logs.push_back(EpochLog{std::stoi(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
    }
    return logs;
}

int cmd_train(const TrainArgs& args_in, const CLI::App& sub) {
    TrainArgs a = args_in;
    const json cfg = load_config_file(a.config_path);
    const json model_cfg = cfg.value("model", json::object());
    const json train_cfg = cfg.value("train", json::object());
    fallback(sub.get_option("--corpus"), cfg, "corpus", a.corpus_dir);
    fallback(sub.get_option("--out"), cfg, "out", a.out);
    fallback(sub.get_option("--epochs"), train_cfg, "epochs", a.epochs);
    fallback(sub.get_option("--batch"), train_cfg, "batch_size", a.batch);
    fallback(sub.get_option("--lr"), train_cfg, "learning_rate", a.lr);
    fallback(sub.get_option("--wd"), train_cfg, "weight_decay", a.wd);
    fallback(sub.get_option("--seed"), train_cfg, "seed", a.seed);
    fallback(sub.get_option("--checkpoint-every"), train_cfg, "checkpoint_every", a.checkpoint_every);
    if (a.corpus_dir.empty()) throw CLI::ValidationError("--corpus", "a corpus directory is required");
    if (a.out.empty()) a.out = default_out("run");

    const LoadedCorpus corpus = load_corpus(a.corpus_dir);

    fallback(sub.get_option("--layers"), model_cfg, "n_layer", a.n_layer);
    fallback(sub.get_option("--heads"), model_cfg, "n_head", a.n_head);
    fallback(sub.get_option("--embed"), model_cfg, "n_embed", a.n_embed);
    fallback(sub.get_option("--ctx"), model_cfg, "n_ctx", a.n_ctx);
    fallback(sub.get_option("--hash"), model_cfg, "n_hash", a.n_hash);
    fallback(sub.get_option("--pos"), model_cfg, "pos", a.pos);
    ModelConfig mc;
    mc.n_layer = a.n_layer;
    mc.n_head = a.n_head;
    mc.n_embed = a.n_embed;
    mc.n_ctx = a.n_ctx;
    mc.n_hash = a.n_hash;
    mc.pos = pos_strategy_from_name(a.pos);
    mc.vocab_size = corpus.vocab.size();
    mc.validate();

    TrainConfig tc;
    tc.epochs = a.epochs;
    tc.batch_size = a.batch;
    tc.learning_rate = a.lr;
    tc.weight_decay = a.wd;
    if (a.clip == "none") tc.grad_clip.reset();
    else tc.grad_clip = std::stod(a.clip);
    if (a.loss_scope == "full") tc.loss_scope = LossScope::FullSequence;
    else if (a.loss_scope == "answer") tc.loss_scope = LossScope::AnswerOnly;
    else throw CLI::ValidationError("--loss-scope", "expected full|answer");
    tc.seed = a.seed;
    tc.checkpoint_every = a.checkpoint_every;

    const std::string final_dir = a.out + "/ckpt_final";
    TrainState state;
    std::vector<EpochLog> previous;
    if (a.resume && fs::exists(final_dir + "/config.json")) {
        const Checkpoint ck = load_checkpoint(final_dir);
        state = train_state_from_checkpoint(ck);
        previous = read_loss_csv(a.out + "/loss.csv");
        std::cerr << "resuming from epoch " << state.epochs_done << "\n";
    } else {
        state = make_train_state(mc, a.seed);
    }

    fs::create_directories(a.out);
    CheckpointMeta meta;
    meta.init_seed = a.seed;
    meta.train_seed = a.seed;
    meta.tag_seed = a.seed;
    meta.has_optimizer_state = true;

    const EpochCallback cb = [&](int epoch, double, const TrainState& st) {
        if (tc.checkpoint_every > 0 && (epoch + 1) % tc.checkpoint_every == 0 &&
            epoch + 1 < tc.epochs) {
            CheckpointMeta m = meta;
            m.epoch = epoch + 1;
            save_checkpoint(a.out + "/ckpt_epoch" + std::to_string(epoch + 1), mc, st.params, m,
                            &st.opt_m, &st.opt_v);
        }
        return false;
    };

    const std::vector<EpochLog> logs = train(mc, state, corpus.samples, corpus.vocab, tc, cb);

    meta.epoch = state.epochs_done;
    save_checkpoint(final_dir, mc, state.params, meta, &state.opt_m, &state.opt_v);
    corpus.vocab.save(final_dir + "/vocab.txt");

    std::vector<EpochLog> all = previous;
    all.insert(all.end(), logs.begin(), logs.end());
    write_loss_csv(a.out + "/loss.csv", all, a.seed, config_hash(spec_to_json(corpus.spec)));
    std::cout << "trained " << logs.size() << " epochs; checkpoint at " << final_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string config_path;
    std::string ckpt_dir;
    std::string corpus_dir;  // format-spec source
    std::string grid;        // "1:5,1:5"
    std::string lengths;     // "9,10,11"
    std::string dialogue;    // "2,3,4,5"
    bool repetitive = false;
    int samples = 100;
    uint64_t seed = 0;
    uint64_t tag_seed = 0;
    bool oracle = false;
    std::string out;
    int threads = 0;
};

int cmd_eval(const EvalArgs& args_in, const CLI::App& sub) {
    EvalArgs a = args_in;
    const json cfg = load_config_file(a.config_path);
    fallback(sub.get_option("--ckpt"), cfg, "ckpt", a.ckpt_dir);
    fallback(sub.get_option("--corpus"), cfg, "corpus", a.corpus_dir);
    fallback(sub.get_option("--samples"), cfg, "samples", a.samples);
    fallback(sub.get_option("--seed"), cfg, "seed", a.seed);
    if (a.out.empty()) a.out = default_out("eval.csv");

    const int modes = (!a.grid.empty()) + (!a.lengths.empty()) + (!a.dialogue.empty());
    if (modes != 1)
        throw CLI::ValidationError("--grid/--lengths/--dialogue", "exactly one eval mode is required");
    if (a.corpus_dir.empty() && a.dialogue.empty())
        throw CLI::ValidationError("--corpus", "grid/length evals take the format from a corpus dir");

    // The oracle stub needs no checkpoint; a model eval does.
    Checkpoint ck;
    Vocabulary vocab = Vocabulary::build({});
    TagTable tag;
    const TagTable* tag_ptr = nullptr;
    GenerateFn gen;
    if (a.oracle) {
        if (!a.corpus_dir.empty()) vocab = load_corpus(a.corpus_dir).vocab;
        else vocab = Vocabulary::build(builtin_dialogue_templates());
        gen = oracle_generator(vocab);
    } else {
        if (a.ckpt_dir.empty()) throw CLI::ValidationError("--ckpt", "a checkpoint is required");
        ck = load_checkpoint(a.ckpt_dir);
        vocab = Vocabulary::load(a.ckpt_dir + "/vocab.txt");
        if (ck.cfg.pos == PosStrategy::RandomTag) {
            tag = make_tag_table(ck.cfg, 0, a.tag_seed);
            tag_ptr = &tag;
        }
        gen = model_generator(ck.params, ck.cfg, tag_ptr);
    }

    FormatSpec spec = MixFormat{};
    uint64_t spec_hash = 0;
    if (!a.corpus_dir.empty()) {
        LoadedCorpus corpus = load_corpus(a.corpus_dir);
        spec = corpus.spec;
        spec_hash = config_hash(spec_to_json(spec));
        vocab = a.oracle ? corpus.vocab : vocab;
    }

    if (!a.grid.empty()) {
        const auto* mul = std::get_if<MulFormat>(&spec);
        if (!mul) throw CLI::ValidationError("--grid", "grid eval requires a multiplication corpus");
        const size_t comma = a.grid.find(',');
        if (comma == std::string::npos)
            throw CLI::ValidationError("--grid", "expected M1LO:M1HI,M2LO:M2HI");
        int m1_lo, m1_hi, m2_lo, m2_hi;
        parse_range(a.grid.substr(0, comma), m1_lo, m1_hi, "--grid");
        parse_range(a.grid.substr(comma + 1), m2_lo, m2_hi, "--grid");
        const AccuracyGrid grid =
            eval_grid(gen, vocab, *mul, m1_lo, m1_hi, m2_lo, m2_hi, a.samples, a.seed);
        write_grid_csv(a.out, grid, spec_hash);
        std::cout << "grid mean accuracy " << grid.mean() << " -> " << a.out << "\n";
        return 0;
    }
    if (!a.lengths.empty()) {
        const std::vector<int> digits = parse_int_list(a.lengths, "--lengths");
        const RevRegime regime = a.repetitive ? RevRegime::Repetitive : RevRegime::Regular;
        const LengthCurve curve = eval_lengths(gen, vocab, spec, digits, a.samples, a.seed, regime);
        write_curve_csv(a.out, curve, spec_hash);
        std::cout << "length curve -> " << a.out << "\n";
        return 0;
    }
    const std::vector<int> digits = parse_int_list(a.dialogue, "--dialogue");
    const LengthCurve curve = eval_dialogue(gen, vocab, digits, a.samples, a.seed);
    write_curve_csv(a.out, curve, spec_hash);
    std::cout << "dialogue curve -> " << a.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

int cmd_report(const std::string& grid_path, std::string out) {
    const GridFile grid = read_grid_csv(grid_path);
    if (out.empty()) out = default_out("grid.svg");
    write_heatmap_svg(out, grid,
                      grid.provenance.empty() ? "source=" + grid_path
                                              : grid.provenance + " source=" + grid_path);
    std::cout << "heatmap -> " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"transformer arithmetic laboratory"};
    app.require_subcommand(1);

    GenArgs gen;
    CLI::App* gen_cmd = app.add_subcommand("gen", "generate a corpus");
    gen_cmd->add_option("--config", gen.config_path, "JSON config file");
    gen_cmd->add_option("--task", gen.task, "mul|add|rev|mix");
    gen_cmd->add_option("--format", gen.format, "mul flags: pad,rev");
    gen_cmd->add_option("--max-digits", gen.max_digits, "mul: maximum factor digits");
    gen_cmd->add_option("--one-digit-weight", gen.one_digit_weight, "mul: weight for 1-digit factors");
    gen_cmd->add_option("--augment", gen.augment, "mul: none|nby1|firststep");
    gen_cmd->add_option("--augment-every", gen.augment_every, "mul: augmentation stride");
    gen_cmd->add_option("--variant", gen.variant, "add: basic|random-space|recursive");
    gen_cmd->add_option("--space-p", gen.space_p, "add: filler probability");
    gen_cmd->add_flag("--no-reverse-addends", gen.no_reverse_addends, "add: keep header order");
    gen_cmd->add_option("--digits", gen.digits, "add/rev: training digit range LO:HI");
    gen_cmd->add_flag("--mix-random-space", gen.mix_random_space, "mix: spaced arithmetic lines");
    gen_cmd->add_option("--addition-count", gen.addition_count, "mix: arithmetic sample count");
    gen_cmd->add_option("--n", gen.n, "corpus size");
    gen_cmd->add_option("--seed", gen.seed, "corpus seed");
    gen_cmd->add_option("--out", gen.out, "output directory");
    gen_cmd->add_option("--threads", gen.threads, "worker threads (1 = serial reference)");

    TrainArgs train_args;
    CLI::App* train_cmd = app.add_subcommand("train", "train a model on a corpus");
    train_cmd->add_option("--config", train_args.config_path, "JSON config file");
    train_cmd->add_option("--corpus", train_args.corpus_dir, "corpus directory from gen");
    train_cmd->add_option("--out", train_args.out, "run directory");
    train_cmd->add_flag("--resume", train_args.resume, "resume from the latest checkpoint");
    train_cmd->add_option("--layers", train_args.n_layer, "transformer layers");
    train_cmd->add_option("--heads", train_args.n_head, "attention heads");
    train_cmd->add_option("--embed", train_args.n_embed, "embedding width");
    train_cmd->add_option("--ctx", train_args.n_ctx, "context length");
    train_cmd->add_option("--pos", train_args.pos, "learned|nopos|randomtag");
    train_cmd->add_option("--hash", train_args.n_hash, "random-tag width (randomtag only)");
    train_cmd->add_option("--epochs", train_args.epochs, "training epochs");
    train_cmd->add_option("--batch", train_args.batch, "batch size");
    train_cmd->add_option("--lr", train_args.lr, "learning rate");
    train_cmd->add_option("--wd", train_args.wd, "weight decay");
    train_cmd->add_option("--clip", train_args.clip, "gradient clip norm or 'none'");
    train_cmd->add_option("--loss-scope", train_args.loss_scope, "full|answer");
    train_cmd->add_option("--seed", train_args.seed, "init/shuffle/tag seed");
    train_cmd->add_option("--checkpoint-every", train_args.checkpoint_every, "epochs between snapshots");
    train_cmd->add_option("--threads", train_args.threads, "worker threads (1 = serial reference)");

    EvalArgs eval_args;
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    eval_cmd->add_option("--config", eval_args.config_path, "JSON config file");
    eval_cmd->add_option("--ckpt", eval_args.ckpt_dir, "checkpoint directory");
    eval_cmd->add_option("--corpus", eval_args.corpus_dir, "corpus directory providing the format");
    eval_cmd->add_option("--grid", eval_args.grid, "digit grid M1LO:M1HI,M2LO:M2HI");
    eval_cmd->add_option("--lengths", eval_args.lengths, "digit list, e.g. 9,10,11,12,13");
    eval_cmd->add_option("--dialogue", eval_args.dialogue, "dialogue digit list, e.g. 2,3,4,5");
    eval_cmd->add_flag("--repetitive", eval_args.repetitive, "repeated-digit reversal test data");
    eval_cmd->add_option("--samples", eval_args.samples, "samples per cell");
    eval_cmd->add_option("--seed", eval_args.seed, "evaluation seed");
    eval_cmd->add_option("--tag-seed", eval_args.tag_seed, "random-tag table seed");
    eval_cmd->add_flag("--oracle", eval_args.oracle, "replace generation with ground truth");
    eval_cmd->add_option("--out", eval_args.out, "output CSV");
    eval_cmd->add_option("--threads", eval_args.threads, "worker threads (1 = serial reference)");

    std::string report_grid, report_out;
    CLI::App* report_cmd = app.add_subcommand("report", "render a grid CSV as an SVG heatmap");
    report_cmd->add_option("--grid", report_grid, "grid CSV path")->required();
    report_cmd->add_option("--out", report_out, "output SVG path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (gen_cmd->parsed()) {
            if (gen.threads > 0) kernels::set_threads(gen.threads);
            return cmd_gen(gen, *gen_cmd);
        }
        if (train_cmd->parsed()) {
            if (train_args.threads > 0) kernels::set_threads(train_args.threads);
            return cmd_train(train_args, *train_cmd);
        }
        if (eval_cmd->parsed()) {
            if (eval_args.threads > 0) kernels::set_threads(eval_args.threads);
            return cmd_eval(eval_args, *eval_cmd);
        }
        if (report_cmd->parsed()) return cmd_report(report_grid, report_out);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
