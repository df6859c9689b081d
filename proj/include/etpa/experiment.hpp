#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "etpa/dataset.hpp"
#include "etpa/scg.hpp"

namespace etpa::experiment {

struct ExperimentConfig {
    data::LevelBand band;
    double entanglement_time = 63.0; // fs
    double lambda0 = 810.0;          // nm, degenerate pair
    int replicates = 100;
    int per_class = 500;
    std::size_t n_samples = 500;
    physics::TauWindow window;
    std::uint64_t base_seed = 1;
    int hidden = 5;
    nn::TrainConfig train;
    // Peak-normalize every trace before training.
    bool normalize = false;
    // Reuse one split for every replicate instead of re-splitting per replicate.
    bool fixed_split = false;

    void validate() const;
    data::GeneratorConfig generator() const;
};

/// Test-set efficiency (%) of one trained network per replicate, in replicate
/// order. The dataset is generated once from base_seed; replicate r gets its
/// own split and initialization from (base_seed, r). Results do not depend on
/// `threads`.
std::vector<double> run_replicates(const ExperimentConfig& config, unsigned threads = 1);

/// Same as above on an already generated dataset.
std::vector<double> run_replicates(const ExperimentConfig& config, const data::Dataset& dataset,
                                   unsigned threads = 1);

struct Summary {
    double mean = 0.0;
    double std_dev = 0.0; // sample (n - 1) estimator
};

Summary summarize_stats(const std::vector<double>& efficiencies);

struct TableRow {
    double band_low = 0.0;
    double band_high = 0.0;
    double step = 0.0;
    double entanglement_time = 0.0;
    double mean_efficiency = 0.0; // %
    double std_deviation = 0.0;   // %
    std::vector<double> efficiencies;

    double band_width() const { return band_high - band_low; }
};

struct SweepConfig {
    double band_center = 840.0;
    std::vector<double> band_widths{10.0, 20.0, 30.0, 40.0};
    std::vector<double> steps{1.0, 0.5, 0.1};
    std::vector<double> entanglement_times{63.0, 7.16};
    ExperimentConfig base; // band and entanglement time are overridden per cell

    std::vector<ExperimentConfig> cells() const;
};

using ProgressFn = std::function<void(const TableRow&, std::size_t done, std::size_t total)>;

/// One row per (entanglement time, band width, step), in that nesting order.
/// A failing cell aborts with an error naming it.
std::vector<TableRow> reproduce_table(const SweepConfig& sweep, unsigned threads = 1,
                                      const ProgressFn& progress = {});

/// Header band_low,band_high,step_nm,te_fs,mean_pct,std_pct,n_replicates.
std::string table_csv(const std::vector<TableRow>& rows);
/// Header band_low,band_high,step_nm,te_fs,replicate,efficiency_pct.
std::string replicates_csv(const std::vector<TableRow>& rows);
/// Aligned human-readable table.
std::string format_table(const std::vector<TableRow>& rows);

} // namespace etpa::experiment
