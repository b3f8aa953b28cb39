// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mlmkit/encoder.hpp"
#include "mlmkit/tape.hpp"
#include "mlmkit/tensor.hpp"

namespace mlmkit {

/// Named-tensor container: params.bin holds, per tensor, a length-prefixed
/// name, a rank, int64 dims, and a little-endian float32 payload; manifest.txt
/// lists a format version plus one "name<TAB>dims" line per tensor in the
/// same order.
void write_tensors(const std::filesystem::path& dir, const std::vector<const Parameter*>& params);
std::vector<std::pair<std::string, Tensor>> read_tensors(const std::filesystem::path& dir);

/// Full model checkpoint: the tensor container plus model_config.txt.
void save_checkpoint(const std::filesystem::path& dir, const EncoderModel& model);
/// Rebuilds the model (heads included) from model_config.txt and loads every
/// tensor strictly: any missing, extra, or reshaped entry is a DataError.
EncoderModel load_checkpoint(const std::filesystem::path& dir);

}  // namespace mlmkit
