#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "etpa/dataset.hpp"
#include "etpa/mlp.hpp"
#include "etpa/scg.hpp"

namespace etpa::nn {

/// A trained network together with the input scaling it was trained under.
struct SavedModel {
    MlpParams params;
    std::optional<data::FeatureScaling> scaling;
    // Training metadata; absent for hand-built models.
    std::optional<TrainReport> report;
    std::uint64_t seed = 0;
};

/// JSON text: dimensions, row-major flattened weights, scaling and a training
/// summary. Numbers are written in shortest round-trip form, so loading gives
/// back bit-identical weights.
void save_model(const SavedModel& model, const std::filesystem::path& path);

/// Throws MalformedFileError on unreadable or inconsistent files.
SavedModel load_model(const std::filesystem::path& path);

} // namespace etpa::nn
