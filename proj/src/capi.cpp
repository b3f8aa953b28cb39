// SPDX-License-Identifier: Apache-2.0
#include "mlmkit.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "mlmkit/bpe.hpp"
#include "mlmkit/checkpoint.hpp"
#include "mlmkit/common.hpp"
#include "mlmkit/encoder.hpp"
#include "mlmkit/metrics.hpp"
#include "mlmkit/runner.hpp"
#include "mlmkit/zeroshot.hpp"

struct mlmkit_tokenizer {
    mlmkit::Tokenizer impl;
};

struct mlmkit_model {
    mlmkit::EncoderModel impl;
};

namespace {

thread_local std::string g_last_error;

mlmkit_status fail(mlmkit_status code, const std::string& message) {
    g_last_error = message;
    return code;
}

mlmkit_status from_kind(mlmkit::ErrorKind kind) {
    using mlmkit::ErrorKind;
    switch (kind) {
        case ErrorKind::usage: return MLMKIT_USAGE;
        case ErrorKind::config: return MLMKIT_CONFIG;
        case ErrorKind::data: return MLMKIT_DATA;
        case ErrorKind::training: return MLMKIT_TRAINING;
        case ErrorKind::io: return MLMKIT_IO;
        case ErrorKind::contract: return MLMKIT_INVALID;
        case ErrorKind::numeric: return MLMKIT_TRAINING;
    }
    return MLMKIT_INTERNAL;
}

// Runs `body`, translating C++ exceptions into status codes.
template <class Fn>
mlmkit_status guarded(Fn&& body) {
    try {
        g_last_error.clear();
        return body();
    } catch (const mlmkit::Error& e) {
        return fail(from_kind(e.kind()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(MLMKIT_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(MLMKIT_INTERNAL, std::string("internal error: ") + e.what());
    } catch (...) {
        return fail(MLMKIT_INTERNAL, "internal error");
    }
}

mlmkit_status require(bool ok, const char* what) {
    if (ok) return MLMKIT_OK;
    return fail(MLMKIT_INVALID, std::string("invalid argument: ") + what);
}

char* copy_string(const std::string& s) {
    char* buf = static_cast<char*>(std::malloc(s.size() + 1));
    if (!buf) throw std::bad_alloc();
    std::memcpy(buf, s.c_str(), s.size() + 1);
    return buf;
}

std::string join_lines(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& item : items) {
        if (!out.empty()) out += '\n';
        out += item;
    }
    return out;
}

}  // namespace

extern "C" {

const char* mlmkit_version(void) { return "0.1.0"; }

const char* mlmkit_last_error(void) { return g_last_error.c_str(); }

void mlmkit_buffer_free(void* ptr) { std::free(ptr); }

mlmkit_status mlmkit_tokenizer_train(const char* corpus_path, int64_t target_vocab_size,
                                     int64_t min_pair_frequency, mlmkit_tokenizer** out) {
    if (auto s = require(corpus_path && out, "corpus_path and out must be non-NULL")) return s;
    return guarded([&] {
        auto lines = mlmkit::read_text_lines(corpus_path);
        auto tok = mlmkit::Tokenizer::train(lines, target_vocab_size, min_pair_frequency);
        *out = new mlmkit_tokenizer{std::move(tok)};
        return MLMKIT_OK;
    });
}

mlmkit_status mlmkit_tokenizer_load(const char* dir, mlmkit_tokenizer** out) {
    if (auto s = require(dir && out, "dir and out must be non-NULL")) return s;
    return guarded([&] {
        *out = new mlmkit_tokenizer{mlmkit::Tokenizer::load_dir(dir)};
        return MLMKIT_OK;
    });
}

mlmkit_status mlmkit_tokenizer_save(const mlmkit_tokenizer* tok, const char* dir) {
    if (auto s = require(tok && dir, "tok and dir must be non-NULL")) return s;
    return guarded([&] {
        tok->impl.save_dir(dir);
        return MLMKIT_OK;
    });
}

mlmkit_status mlmkit_tokenizer_encode(const mlmkit_tokenizer* tok, const char* text,
                                      int add_specials, int64_t** ids_out, size_t* count_out) {
    if (auto s = require(tok && text && ids_out && count_out,
                         "tok, text, ids_out and count_out must be non-NULL"))
        return s;
    return guarded([&] {
        mlmkit::Encoding enc = tok->impl.encode(text, add_specials != 0);
        auto* buf = static_cast<int64_t*>(std::malloc(sizeof(int64_t) * std::max<size_t>(enc.ids.size(), 1)));
        if (!buf) throw std::bad_alloc();
        std::memcpy(buf, enc.ids.data(), sizeof(int64_t) * enc.ids.size());
        *ids_out = buf;
        *count_out = enc.ids.size();
        return MLMKIT_OK;
    });
}

mlmkit_status mlmkit_tokenizer_decode(const mlmkit_tokenizer* tok, const int64_t* ids, size_t count,
                                      char** text_out) {
    if (auto s = require(tok && text_out && (ids || count == 0),
                         "tok, text_out and (when count > 0) ids must be non-NULL"))
        return s;
    return guarded([&] {
        std::vector<int64_t> vec(ids, ids + count);
        *text_out = copy_string(tok->impl.decode(vec));
        return MLMKIT_OK;
    });
}

mlmkit_status mlmkit_tokenizer_vocab_size(const mlmkit_tokenizer* tok, int64_t* out) {
    if (auto s = require(tok && out, "tok and out must be non-NULL")) return s;
    *out = tok->impl.vocab_size();
    return MLMKIT_OK;
}

void mlmkit_tokenizer_free(mlmkit_tokenizer* tok) { delete tok; }

mlmkit_status mlmkit_model_load(const char* checkpoint_dir, mlmkit_model** out) {
    if (auto s = require(checkpoint_dir && out, "checkpoint_dir and out must be non-NULL"))
        return s;
    return guarded([&] {
        *out = new mlmkit_model{mlmkit::load_checkpoint(checkpoint_dir)};
        return MLMKIT_OK;
    });
}

mlmkit_status mlmkit_model_parameter_count(const mlmkit_model* model, int64_t* out) {
    if (auto s = require(model && out, "model and out must be non-NULL")) return s;
    *out = model->impl.parameter_total();
    return MLMKIT_OK;
}

void mlmkit_model_free(mlmkit_model* model) { delete model; }

mlmkit_status mlmkit_score_choices(mlmkit_model* model, const mlmkit_tokenizer* tok,
                                   const char* masked_text, const char* const* candidates,
                                   size_t candidate_count, double* scores_out,
                                   size_t* predicted_out) {
    if (auto s = require(model && tok && masked_text && candidates && scores_out && predicted_out,
                         "all arguments must be non-NULL"))
        return s;
    if (auto s = require(candidate_count > 0, "candidate_count must be positive")) return s;
    return guarded([&] {
        mlmkit::MaskedChoiceExample example;
        example.masked_text = masked_text;
        for (size_t i = 0; i < candidate_count; ++i) {
            if (!candidates[i])
                return fail(MLMKIT_INVALID, "invalid argument: candidates must be non-NULL");
            example.candidates.emplace_back(candidates[i]);
        }
        example.gold = 0;
        mlmkit::ChoiceScores scored = mlmkit::score_candidates(model->impl, tok->impl, example);
        for (size_t i = 0; i < candidate_count; ++i) scores_out[i] = scored.scores[i];
        *predicted_out = static_cast<size_t>(scored.predicted);
        return MLMKIT_OK;
    });
}

mlmkit_status mlmkit_accuracy_ci(int64_t correct, int64_t total, double confidence,
                                 double* accuracy_out, double* lower_out, double* upper_out) {
    if (auto s = require(accuracy_out && lower_out && upper_out,
                         "accuracy_out, lower_out and upper_out must be non-NULL"))
        return s;
    return guarded([&] {
        mlmkit::AccuracyCi ci = mlmkit::accuracy_ci(correct, total, confidence);
        *accuracy_out = ci.accuracy;
        *lower_out = ci.lower;
        *upper_out = ci.upper;
        return MLMKIT_OK;
    });
}

mlmkit_status mlmkit_auc(const double* scores, const int64_t* labels, size_t count, double* out) {
    if (auto s = require(scores && labels && out, "scores, labels and out must be non-NULL"))
        return s;
    return guarded([&] {
        std::vector<double> s(scores, scores + count);
        std::vector<int64_t> l(labels, labels + count);
        *out = mlmkit::roc(s, l).auc;
        return MLMKIT_OK;
    });
}

mlmkit_status mlmkit_run(const char* subcommand, const char* preset, const char* config_path,
                         const char* const* overrides, size_t override_count,
                         const char* run_dir) {
    if (auto s = require(subcommand && run_dir, "subcommand and run_dir must be non-NULL"))
        return s;
    if (auto s = require(overrides || override_count == 0,
                         "overrides must be non-NULL when override_count > 0"))
        return s;
    return guarded([&] {
        mlmkit::RunRequest request;
        request.subcommand = subcommand;
        request.preset = preset ? preset : "";
        request.config_path = config_path ? config_path : "";
        for (size_t i = 0; i < override_count; ++i) {
            if (!overrides[i])
                return fail(MLMKIT_INVALID, "invalid argument: overrides must be non-NULL");
            request.overrides.emplace_back(overrides[i]);
        }
        request.run_dir = run_dir;
        mlmkit::run_command(request);
        return MLMKIT_OK;
    });
}

mlmkit_status mlmkit_subcommands(char** out) {
    if (auto s = require(out != nullptr, "out must be non-NULL")) return s;
    return guarded([&] {
        *out = copy_string(join_lines(mlmkit::subcommand_names()));
        return MLMKIT_OK;
    });
}

mlmkit_status mlmkit_presets(char** out) {
    if (auto s = require(out != nullptr, "out must be non-NULL")) return s;
    return guarded([&] {
        *out = copy_string(join_lines(mlmkit::preset_names()));
        return MLMKIT_OK;
    });
}

mlmkit_status mlmkit_preset_text(const char* name, char** out) {
    if (auto s = require(name && out, "name and out must be non-NULL")) return s;
    return guarded([&] {
        *out = copy_string(mlmkit::preset_text(name));
        return MLMKIT_OK;
    });
}

}  // extern "C"
