// SPDX-License-Identifier: Apache-2.0
// Command line front end. Everything goes through the C API in mlmkit.h;
// this translation unit never touches the C++ core directly.
#include <cstdio>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "mlmkit.h"

namespace {

// A convenience flag that expands to one "section.key=value" override.
struct MappedFlag {
    const char* flag;
    const char* key;
    const char* help;
};

struct SubcommandSpec {
    const char* name;
    const char* help;
    std::vector<MappedFlag> flags;
};

const std::vector<MappedFlag> kTaskFlags = {
    {"--tokenizer", "tokenizer.dir", "Tokenizer directory"},
    {"--checkpoint", "model.checkpoint", "Model checkpoint directory"},
    {"--task", "task.kind", "Task kind: sentiment, diedat, pos or ner"},
    {"--train", "task.train", "Training split path"},
    {"--dev", "task.dev", "Development split path (carved from train when absent)"},
    {"--test", "task.test", "Test split path"},
    {"--max-len", "task.max_len", "Token budget per example"},
    {"--seed", "run.seed", "Run seed"},
};

std::vector<MappedFlag> with_task_flags(std::vector<MappedFlag> extra) {
    std::vector<MappedFlag> flags = kTaskFlags;
    flags.insert(flags.end(), extra.begin(), extra.end());
    return flags;
}

std::vector<SubcommandSpec> subcommand_specs() {
    return {
        {"train-tokenizer",
         "Learn a byte-level BPE vocabulary from a line-per-document corpus",
         {{"--corpus", "tokenizer.corpus", "UTF-8 corpus, one document per line"},
          {"--vocab-size", "tokenizer.vocab_size", "Target vocabulary size"},
          {"--min-pair-frequency", "tokenizer.min_pair_frequency",
           "Stop merging below this pair count"}}},
        {"pretrain",
         "Masked-language-model pre-training from scratch",
         {{"--tokenizer", "tokenizer.dir", "Tokenizer directory"},
          {"--corpus", "pretrain.corpus", "UTF-8 corpus, one document per line"},
          {"--seed", "run.seed", "Run seed"}}},
        {"finetune", "Fine-tune a pre-trained checkpoint on a labeled task", with_task_flags({})},
        {"grid-search",
         "Fine-tune once per (learning rate, batch size) cell and pick the best",
         with_task_flags({{"--lrs", "grid.lrs", "Comma-separated learning rates"},
                          {"--batches", "grid.batches", "Comma-separated batch sizes"}})},
        {"learning-curve",
         "Fine-tune on growing training subsets and track test accuracy",
         with_task_flags({{"--sizes", "curve.sizes",
                           "Comma-separated subset sizes ('full' for the whole set)"}})},
        {"eval", "Evaluate a fine-tuned checkpoint on a test split", with_task_flags({})},
        {"zeroshot",
         "Score masked-choice examples with a pre-trained model, no fine-tuning",
         {{"--tokenizer", "tokenizer.dir", "Tokenizer directory"},
          {"--checkpoint", "model.checkpoint", "Model checkpoint directory"},
          {"--test", "task.test", "Choice examples (JSONL)"}}},
        {"build-diedat",
         "Harvest die/dat choice examples from a sentence-per-line corpus",
         {{"--corpus", "diedat.corpus", "Sentence-per-line corpus"},
          {"--head", "diedat.head", "Sentences scanned for the training split"},
          {"--tail", "diedat.tail", "Sentences scanned (from the end) for the test split"},
          {"--words", "diedat.words", "Comma-separated surface forms to blank out"}}},
        {"fairness-audit",
         "Group fairness report for a scored, labeled, attributed record file",
         {{"--records", "fairness.records", "CSV of id,score,y[,a]"},
          {"--threshold", "fairness.threshold", "Decision threshold (predict 1 when score > t)"},
          {"--a-value", "fairness.a_value", "Attribute value treated as the reference group"},
          {"--y-value", "fairness.y_value", "Outcome conditioned on for equal opportunity"}}},
        {"association-test",
         "Rank pronoun fill-ins across profession templates with a masked model",
         {{"--tokenizer", "tokenizer.dir", "Tokenizer directory"},
          {"--checkpoint", "model.checkpoint", "Model checkpoint directory"},
          {"--templates", "fairness.templates", "TSV of cloze templates"},
          {"--professions", "fairness.professions", "TSV of professions with gender scores"},
          {"--pronouns", "fairness.pronouns", "Two comma-separated pronouns"}}},
    };
}

struct SubcommandState {
    std::string name;
    CLI::App* cmd = nullptr;
    std::string preset;
    std::string config;
    std::string run_dir;
    std::vector<std::string> sets;
    // parallel arrays: option -> config key -> bound value
    std::vector<CLI::Option*> mapped_opts;
    std::vector<std::string> mapped_keys;
    std::vector<std::string> mapped_values;
};

int run_subcommand(const SubcommandState& state) {
    std::vector<std::string> overrides;
    for (size_t i = 0; i < state.mapped_opts.size(); ++i)
        if (state.mapped_opts[i]->count() > 0)
            overrides.push_back(state.mapped_keys[i] + "=" + state.mapped_values[i]);
    overrides.insert(overrides.end(), state.sets.begin(), state.sets.end());

    std::vector<const char*> override_ptrs;
    override_ptrs.reserve(overrides.size());
    for (const auto& o : overrides) override_ptrs.push_back(o.c_str());

    mlmkit_status status = mlmkit_run(
        state.name.c_str(), state.preset.empty() ? nullptr : state.preset.c_str(),
        state.config.empty() ? nullptr : state.config.c_str(),
        override_ptrs.empty() ? nullptr : override_ptrs.data(), override_ptrs.size(),
        state.run_dir.c_str());
    if (status != MLMKIT_OK) {
        std::fprintf(stderr, "error: %s\n", mlmkit_last_error());
        return static_cast<int>(status);
    }
    std::printf("artifacts written to %s\n", state.run_dir.c_str());
    return 0;
}

int print_buffer(mlmkit_status (*fn)(char**)) {
    char* text = nullptr;
    mlmkit_status status = fn(&text);
    if (status != MLMKIT_OK) {
        std::fprintf(stderr, "error: %s\n", mlmkit_last_error());
        return static_cast<int>(status);
    }
    std::printf("%s\n", text);
    mlmkit_buffer_free(text);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Masked-language-model toolkit: tokenizer training, encoder pre-training, "
                 "task fine-tuning, zero-shot scoring and fairness auditing"};
    app.set_version_flag("--version,-V", mlmkit_version());
    app.require_subcommand(1);

    std::vector<std::unique_ptr<SubcommandState>> states;
    for (const auto& spec : subcommand_specs()) {
        auto state = std::make_unique<SubcommandState>();
        state->name = spec.name;
        state->cmd = app.add_subcommand(spec.name, spec.help);
        state->cmd->add_option("--preset,-p", state->preset,
                               "Named configuration preset (see 'presets')");
        state->cmd->add_option("--config,-c", state->config,
                               "Configuration file; overrides the preset key by key");
        state->cmd->add_option("--set,-s", state->sets,
                               "Override one value as section.key=value (repeatable)");
        state->cmd->add_option("--run-dir,-o", state->run_dir, "Directory for run artifacts")
            ->required();
        state->mapped_opts.reserve(spec.flags.size());
        state->mapped_keys.reserve(spec.flags.size());
        state->mapped_values.resize(spec.flags.size());
        for (size_t i = 0; i < spec.flags.size(); ++i) {
            state->mapped_keys.emplace_back(spec.flags[i].key);
            state->mapped_opts.push_back(
                state->cmd->add_option(spec.flags[i].flag, state->mapped_values[i],
                                       spec.flags[i].help));
        }
        states.push_back(std::move(state));
    }

    CLI::App* presets_cmd =
        app.add_subcommand("presets", "List the named configuration presets");
    std::string show_name;
    presets_cmd->add_option("--show", show_name, "Print one preset's full configuration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(MLMKIT_USAGE);
    }

    if (presets_cmd->parsed()) {
        if (show_name.empty()) return print_buffer(mlmkit_presets);
        char* text = nullptr;
        mlmkit_status status = mlmkit_preset_text(show_name.c_str(), &text);
        if (status != MLMKIT_OK) {
            std::fprintf(stderr, "error: %s\n", mlmkit_last_error());
            return static_cast<int>(status);
        }
        std::printf("%s", text);
        mlmkit_buffer_free(text);
        return 0;
    }

    for (const auto& state : states)
        if (state->cmd->parsed()) return run_subcommand(*state);
    return static_cast<int>(MLMKIT_USAGE);  // unreachable with require_subcommand(1)
}
