#include "etpa/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "etpa/errors.hpp"
#include "etpa/parallel.hpp"

namespace etpa::data {

namespace {

constexpr double alignment_tolerance = 1e-9;

std::string describe(const LevelBand& band) {
    return "(" + std::to_string(band.low) + ", " + std::to_string(band.high) + ") step " +
           std::to_string(band.step);
}

} // namespace

void LevelBand::validate() const {
    if (!std::isfinite(low) || !std::isfinite(high) || !(low < high))
        throw ValidationError("level band: low must be below high");
    if (low <= 0.0)
        throw ValidationError("level band: wavelengths must be positive");
    if (!std::isfinite(step) || !(step > 0.0))
        throw ValidationError("level band: step must be positive");
    const double intervals = (high - low) / step;
    if (std::abs(intervals - std::round(intervals)) > alignment_tolerance)
        throw ValidationError("level band " + describe(*this) +
                              ": span is not a whole number of steps");
}

std::size_t LevelBand::grid_size() const {
    validate();
    return static_cast<std::size_t>(std::llround((high - low) / step)) + 1;
}

std::vector<double> level_grid(const LevelBand& band) {
    const std::size_t n = band.grid_size();
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i)
        grid[i] = band.low + band.step * static_cast<double>(i);
    grid.back() = band.high;
    return grid;
}

physics::MolecularSystem sample_system(const LevelBand& band, int level_count, Rng& rng) {
    auto grid = level_grid(band);
    if (level_count < 1 || level_count > class_count)
        throw ValidationError("sample system: level count must be in 1..4");
    if (static_cast<std::size_t>(level_count) > grid.size())
        throw ValidationError("sample system: " + std::to_string(level_count) +
                              " levels requested but band " + describe(band) + " has only " +
                              std::to_string(grid.size()) + " grid points");
    // partial Fisher-Yates
    for (int i = 0; i < level_count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), grid.size() - 1);
        std::swap(grid[static_cast<std::size_t>(i)], grid[pick(rng)]);
    }
    grid.resize(static_cast<std::size_t>(level_count));
    std::sort(grid.begin(), grid.end());
    return physics::MolecularSystem::with_unit_dipoles(std::move(grid));
}

void GeneratorConfig::validate() const {
    band.validate();
    source.validate();
    if (per_class < 1)
        throw ValidationError("generator: per_class must be at least 1");
    if (n_samples < 2)
        throw ValidationError("generator: need at least 2 samples per trace");
    if (!(window.start < window.end))
        throw ValidationError("generator: window start must be below window end");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
        throw ValidationError("generator: noise sigma must be non-negative");
    if (band.grid_size() < static_cast<std::size_t>(class_count))
        throw ValidationError("generator: band " + describe(band) +
                              " has fewer than 4 grid points");
}

Dataset generate_dataset(const GeneratorConfig& config, unsigned threads) {
    config.validate();
    const auto per_class = static_cast<std::size_t>(config.per_class);

    Dataset dataset;
    dataset.config = config;
    dataset.records.resize(per_class * class_count);

    parallel_for(dataset.records.size(), threads, [&](std::size_t r) {
        const int k = static_cast<int>(r / per_class) + 1;
        const std::size_t draw = r % per_class;
        Rng rng = derive_rng(config.seed, {stream::system, static_cast<std::uint64_t>(k), draw});
        auto system = sample_system(config.band, k, rng);
        if (config.random_dipoles) {
            std::uniform_real_distribution<double> dipole(0.5, 1.0);
            for (double& d : system.dipole_products)
                d = dipole(rng);
        }
        auto trace = physics::signal_trace(system, config.source, config.window, config.n_samples, false);
        double peak = *std::max_element(trace.values.begin(), trace.values.end());
        if (!(peak > 0.0))
            throw DegenerateTraceError("generator: all-zero trace for class " + std::to_string(k) +
                                       " draw " + std::to_string(draw));
        if (config.noise_sigma > 0.0) {
            Rng noise_rng = derive_rng(config.seed, {stream::noise, static_cast<std::uint64_t>(k), draw});
            std::normal_distribution<double> noise(0.0, config.noise_sigma * peak);
            for (double& v : trace.values)
                v = std::max(0.0, v + noise(noise_rng));
            peak = *std::max_element(trace.values.begin(), trace.values.end());
            if (!(peak > 0.0))
                throw DegenerateTraceError("generator: noise produced an all-zero trace");
        }
        if (config.normalize)
            for (double& v : trace.values)
                v /= peak;
        dataset.records[r] = LabeledSignal{std::move(trace.values), k};
    });
    return dataset;
}

std::array<double, class_count> one_hot_encode(int class_index) {
    if (class_index < 1 || class_index > class_count)
        throw ValidationError("one-hot: class index " + std::to_string(class_index) +
                              " outside 1..4");
    std::array<double, class_count> v{};
    v[static_cast<std::size_t>(class_index - 1)] = 1.0;
    return v;
}

std::string_view to_string(Subset subset) {
    switch (subset) {
    case Subset::train: return "train";
    case Subset::validation: return "validation";
    case Subset::test: return "test";
    }
    return "?";
}

Subset subset_from_string(std::string_view name) {
    if (name == "train") return Subset::train;
    if (name == "validation") return Subset::validation;
    if (name == "test") return Subset::test;
    throw ValidationError("unknown subset '" + std::string(name) + "'");
}

std::vector<std::size_t> subset_indices(std::span<const Subset> split, Subset subset) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < split.size(); ++i)
        if (split[i] == subset)
            out.push_back(i);
    return out;
}

std::vector<std::size_t> Dataset::indices(Subset subset) const {
    return subset_indices(split, subset);
}

std::vector<Subset> split_dataset(std::size_t record_count, SplitRatios ratios, Rng& rng) {
    if (record_count < min_split_records)
        throw ValidationError("split: need at least " + std::to_string(min_split_records) + " records, got " + std::to_string(record_count));
    if (ratios.train <= 0.0 || ratios.validation <= 0.0 || ratios.test <= 0.0 ||
        std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9)
        throw ValidationError("split: ratios must be positive and sum to 1");

    const auto n = static_cast<double>(record_count);
    // floor with slack so that e.g. 0.15 * 100 lands on 15
    const auto n_train = static_cast<std::size_t>(std::floor(ratios.train * n + 1e-9));
    const auto n_val = static_cast<std::size_t>(std::floor(ratios.validation * n + 1e-9));

    std::vector<std::size_t> order(record_count);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = record_count - 1; i > 0; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i);
        std::swap(order[i], order[pick(rng)]);
    }

    std::vector<Subset> split(record_count, Subset::test);
    for (std::size_t i = 0; i < n_train; ++i)
        split[order[i]] = Subset::train;
    for (std::size_t i = n_train; i < n_train + n_val; ++i)
        split[order[i]] = Subset::validation;
    return split;
}

double FeatureScaling::scale(std::size_t feature, double value) const {
    const double lo = min[feature];
    const double range = max[feature] - lo;
    if (range <= 0.0)
        return 0.0;
    return 2.0 * (value - lo) / range - 1.0;
}

double FeatureScaling::unscale(std::size_t feature, double scaled) const {
    const double lo = min[feature];
    const double range = max[feature] - lo;
    if (range <= 0.0)
        return lo;
    return (scaled + 1.0) * range / 2.0 + lo;
}

void FeatureScaling::apply(std::span<const double> in, std::span<double> out) const {
    if (in.size() != size() || out.size() != size())
        throw ValidationError("scaling: feature count mismatch");
    for (std::size_t f = 0; f < in.size(); ++f)
        out[f] = scale(f, in[f]);
}

FeatureScaling fit_scaling(const Dataset& dataset) {
    if (dataset.split.size() != dataset.size())
        throw ValidationError("scaling: dataset has no split assignment");
    return fit_scaling(dataset, dataset.indices(Subset::train));
}

FeatureScaling fit_scaling(const Dataset& dataset, std::span<const std::size_t> train) {
    if (train.empty())
        throw ValidationError("scaling: empty training subset");
    const std::size_t d = dataset.feature_count();
    FeatureScaling s;
    s.min = dataset.records[train.front()].features;
    s.max = s.min;
    for (std::size_t r : train) {
        const auto& x = dataset.records.at(r).features;
        if (x.size() != d)
            throw ValidationError("scaling: ragged feature rows");
        for (std::size_t f = 0; f < d; ++f) {
            s.min[f] = std::min(s.min[f], x[f]);
            s.max[f] = std::max(s.max[f], x[f]);
        }
    }
    return s;
}

void assign_split(Dataset& dataset, Rng& rng, SplitRatios ratios) {
    dataset.split = split_dataset(dataset.size(), ratios, rng);
    dataset.scaling = fit_scaling(dataset);
}

Eigen::MatrixXd scale_features(const Dataset& dataset, const FeatureScaling& scaling) {
    const auto n = static_cast<Eigen::Index>(dataset.size());
    const auto d = static_cast<Eigen::Index>(scaling.size());
    Eigen::MatrixXd out(n, d);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& x = dataset.records[static_cast<std::size_t>(r)].features;
        if (x.size() != scaling.size())
            throw ValidationError("scaling: feature count mismatch");
        for (Eigen::Index f = 0; f < d; ++f)
            out(r, f) = scaling.scale(static_cast<std::size_t>(f), x[static_cast<std::size_t>(f)]);
    }
    return out;
}

std::pair<Eigen::MatrixXd, FeatureScaling> scale_features(const Dataset& dataset) {
    auto scaling = fit_scaling(dataset);
    auto scaled = scale_features(dataset, scaling);
    return {std::move(scaled), std::move(scaling)};
}

Batch make_batch(const Dataset& dataset, std::span<const std::size_t> rows,
                 const FeatureScaling& scaling) {
    const auto d = static_cast<Eigen::Index>(scaling.size());
    Batch batch;
    batch.features.resize(static_cast<Eigen::Index>(rows.size()), d);
    batch.targets = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), class_count);
    batch.labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& rec = dataset.records.at(rows[i]);
        if (rec.features.size() != scaling.size())
            throw ValidationError("batch: feature count mismatch");
        const auto row = static_cast<Eigen::Index>(i);
        for (Eigen::Index f = 0; f < d; ++f)
            batch.features(row, f) = scaling.scale(static_cast<std::size_t>(f),
                                                   rec.features[static_cast<std::size_t>(f)]);
        const auto hot = one_hot_encode(rec.class_index);
        for (int c = 0; c < class_count; ++c)
            batch.targets(row, c) = hot[static_cast<std::size_t>(c)];
        batch.labels.push_back(rec.class_index);
    }
    return batch;
}

} // namespace etpa::data
