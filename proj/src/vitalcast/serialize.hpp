#pragma once

#include <string>

#include "vitalcast/train.hpp"

namespace vitalcast {

/// Model file layout:
///   magic line        "ATNF1\n"
///   config lines      "!key value\n" (training config, architecture,
///                      best epoch; doubles printed with %.17g)
///   tensor headers    "name dim0 dim1...\n", one per tensor, ending with
///                      a single ".\n" sentinel; the reserved names
///                      history.train_loss / history.val_loss carry the
///                      loss curves
///   payload           little-endian 64-bit floats, in header order
///   trailer           little-endian u64: total payload byte count
///
/// Round trips are bit-exact: load(save(m)) reproduces every parameter,
/// config field, and forecast.
void save_model(const TrainedModel& m, const std::string& path);

/// Rebuilds the model from its config and overwrites the freshly initialized
/// parameters with the stored payload. Malformed input raises IoError naming
/// the byte offset where reading stopped making sense.
TrainedModel load_model(const std::string& path);

} // namespace vitalcast
