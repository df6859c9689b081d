#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "etpa/batch.hpp"
#include "etpa/physics.hpp"
#include "etpa/random.hpp"

namespace etpa::data {

/// Uniform grid of candidate intermediate-level wavelengths, both ends included.
struct LevelBand {
    double low = 835.0;  // nm
    double high = 845.0; // nm
    double step = 1.0;   // nm

    /// Throws ValidationError unless low < high, step > 0 and the span is a
    /// whole number of steps (to 1e-9).
    void validate() const;
    std::size_t grid_size() const;
    double width() const { return high - low; }

    bool operator==(const LevelBand&) const = default;
};

std::vector<double> level_grid(const LevelBand& band);

/// k distinct grid wavelengths (sorted ascending) with unit dipole products.
physics::MolecularSystem sample_system(const LevelBand& band, int level_count, Rng& rng);

struct GeneratorConfig {
    LevelBand band;
    physics::PhotonSource source;
    int per_class = 500;
    std::size_t n_samples = 500;
    physics::TauWindow window;
    std::uint64_t seed = 1;
    // Divide each trace by its own peak. Off by default: the absolute level of
    // the signal grows with the number of coherently summed pathways and is
    // the main thing that tells the classes apart.
    bool normalize = false;
    // Draw D_j uniformly from [0.5, 1] instead of 1.
    bool random_dipoles = false;
    // Std. dev. of additive Gaussian noise, relative to each trace's peak; 0 disables.
    double noise_sigma = 0.0;

    void validate() const;

    bool operator==(const GeneratorConfig&) const = default;
};

struct LabeledSignal {
    std::vector<double> features; // non-negative; peak is 1 when normalized
    int class_index = 1; // number of intermediate levels, 1..4

    bool operator==(const LabeledSignal&) const = default;
};

inline constexpr std::size_t min_split_records = 20;

enum class Subset : std::uint8_t { train, validation, test };

std::string_view to_string(Subset subset);
Subset subset_from_string(std::string_view name);

struct SplitRatios {
    double train = 0.70;
    double validation = 0.15;
    double test = 0.15;
};

/// Per-feature affine map onto [-1, 1] fitted on training rows.
struct FeatureScaling {
    std::vector<double> min;
    std::vector<double> max;

    std::size_t size() const { return min.size(); }
    /// Constant features map to 0.
    double scale(std::size_t feature, double value) const;
    double unscale(std::size_t feature, double scaled) const;
    void apply(std::span<const double> in, std::span<double> out) const;

    bool operator==(const FeatureScaling&) const = default;
};

struct Dataset {
    GeneratorConfig config;
    std::vector<LabeledSignal> records;
    std::vector<Subset> split;            // empty until assigned
    std::optional<FeatureScaling> scaling; // set by fit_scaling

    std::size_t size() const { return records.size(); }
    std::size_t feature_count() const { return records.empty() ? 0 : records.front().features.size(); }
    std::vector<std::size_t> indices(Subset subset) const;

    bool operator==(const Dataset&) const = default;
};

/// per_class records for each k in 1..4, ordered by class then draw index.
/// Each record uses its own stream derived from (seed, k, index), so the
/// result does not depend on `threads`.
Dataset generate_dataset(const GeneratorConfig& config, unsigned threads = 1);

std::array<double, class_count> one_hot_encode(int class_index);

/// Random permutation; first floor(0.70 n) train, next floor(0.15 n)
/// validation, rest test. Rejects n < min_split_records.
std::vector<Subset> split_dataset(std::size_t record_count, SplitRatios ratios, Rng& rng);

/// Fits min/max on the training subset. Requires a split.
FeatureScaling fit_scaling(const Dataset& dataset);

/// Fits min/max on the given rows only.
FeatureScaling fit_scaling(const Dataset& dataset, std::span<const std::size_t> train_rows);

std::vector<std::size_t> subset_indices(std::span<const Subset> split, Subset subset);

/// Assigns a split from `rng` and refits scaling on it.
void assign_split(Dataset& dataset, Rng& rng, SplitRatios ratios = {});

/// All records mapped through `scaling`, in record order.
Eigen::MatrixXd scale_features(const Dataset& dataset, const FeatureScaling& scaling);

/// Fits scaling on the training subset and maps every record with it.
std::pair<Eigen::MatrixXd, FeatureScaling> scale_features(const Dataset& dataset);

/// Scaled features and one-hot targets for the given rows.
Batch make_batch(const Dataset& dataset, std::span<const std::size_t> rows,
                 const FeatureScaling& scaling);

} // namespace etpa::data
