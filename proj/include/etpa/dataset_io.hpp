#pragma once

#include <filesystem>

#include "etpa/dataset.hpp"

namespace etpa::data {

/// Companion metadata path: "<csv>.meta.json".
std::filesystem::path metadata_path(const std::filesystem::path& csv_path);

/// CSV with header f000..f{d-1},class plus JSON metadata holding the
/// generator config, split assignment and scaling parameters.
void save_dataset(const Dataset& dataset, const std::filesystem::path& csv_path);

/// Inverse of save_dataset. Metadata is optional; without it the dataset has
/// a default config, no split and no scaling.
///
/// Throws MalformedFileError for unparsable content, FeatureCountError when a
/// row or the header disagrees with the feature count, LabelError for a class
/// outside 1..4.
Dataset load_dataset(const std::filesystem::path& csv_path);

} // namespace etpa::data
