#include "etpa/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "etpa/errors.hpp"
#include "etpa/io_util.hpp"
#include "etpa/parallel.hpp"

namespace etpa::experiment {

void ExperimentConfig::validate() const {
    band.validate();
    if (replicates < 2)
        throw ValidationError("experiment: need at least 2 replicates");
    if (hidden < 1)
        throw ValidationError("experiment: hidden width must be positive");
    train.validate();
    generator().validate();
    if (static_cast<std::size_t>(per_class) * class_count < data::min_split_records)
        throw ValidationError("experiment: need at least " + std::to_string(data::min_split_records) +
                              " records to split; raise per_class");
}

data::GeneratorConfig ExperimentConfig::generator() const {
    data::GeneratorConfig g;
    g.band = band;
    g.source = physics::PhotonSource::degenerate(lambda0, entanglement_time);
    g.per_class = per_class;
    g.n_samples = n_samples;
    g.window = window;
    g.seed = base_seed;
    g.normalize = normalize;
    return g;
}

std::vector<double> run_replicates(const ExperimentConfig& config, unsigned threads) {
    config.validate();
    return run_replicates(config, data::generate_dataset(config.generator(), threads), threads);
}

std::vector<double> run_replicates(const ExperimentConfig& config, const data::Dataset& dataset,
                                   unsigned threads) {
    config.validate();
    const auto n = static_cast<std::size_t>(config.replicates);
    std::vector<double> efficiencies(n);
    parallel_for(n, threads, [&](std::size_t r) {
        const std::uint64_t split_key = config.fixed_split ? 0 : r;
        Rng split_rng = derive_rng(config.base_seed, {stream::split, split_key});
        Rng init_rng = derive_rng(config.base_seed, {stream::init, r});

        const auto split = data::split_dataset(dataset.size(), {}, split_rng);
        const auto train_rows = data::subset_indices(split, data::Subset::train);
        const auto scaling = data::fit_scaling(dataset, train_rows);
        const auto train = data::make_batch(dataset, train_rows, scaling);
        const auto validation =
            data::make_batch(dataset, data::subset_indices(split, data::Subset::validation), scaling);
        const auto test = data::make_batch(dataset, data::subset_indices(split, data::Subset::test), scaling);

        auto init = nn::init_params(config.hidden, static_cast<int>(dataset.feature_count()),
                                    class_count, init_rng);
        nn::TrainConfig train_config = config.train;
        train_config.seed = config.base_seed;
        const auto trained = nn::scg_train(init, train, validation, train_config);
        efficiencies[r] = 100.0 * nn::evaluate_model(trained.params, test).accuracy;
    });
    return efficiencies;
}

Summary summarize_stats(const std::vector<double>& efficiencies) {
    const auto n = efficiencies.size();
    if (n < 2)
        throw ValidationError("summarize: need at least 2 values");
    // sort so the reduction is order-independent bit for bit
    std::vector<double> v = efficiencies;
    std::sort(v.begin(), v.end());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double e : v)
        ss += (e - mean) * (e - mean);
    return {mean, std::sqrt(ss / static_cast<double>(n - 1))};
}

std::vector<ExperimentConfig> SweepConfig::cells() const {
    std::vector<ExperimentConfig> out;
    for (double te : entanglement_times)
        for (double width : band_widths)
            for (double step : steps) {
                ExperimentConfig c = base;
                c.band = {band_center - width / 2.0, band_center + width / 2.0, step};
                c.entanglement_time = te;
                out.push_back(c);
            }
    return out;
}

std::vector<TableRow> reproduce_table(const SweepConfig& sweep, unsigned threads,
                                      const ProgressFn& progress) {
    const auto cells = sweep.cells();
    for (const auto& c : cells)
        c.validate();

    std::vector<TableRow> rows;
    rows.reserve(cells.size());
    for (const auto& c : cells) {
        TableRow row;
        row.band_low = c.band.low;
        row.band_high = c.band.high;
        row.step = c.band.step;
        row.entanglement_time = c.entanglement_time;
        try {
            row.efficiencies = run_replicates(c, threads);
        } catch (const std::exception& e) {
            char label[160];
            std::snprintf(label, sizeof label, "cell (%g, %g) nm step %g nm T_e %g fs: ", c.band.low,
                          c.band.high, c.band.step, c.entanglement_time);
            throw std::runtime_error(label + std::string(e.what()));
        }
        const auto s = summarize_stats(row.efficiencies);
        row.mean_efficiency = s.mean;
        row.std_deviation = s.std_dev;
        rows.push_back(std::move(row));
        if (progress)
            progress(rows.back(), rows.size(), cells.size());
    }
    return rows;
}

std::string table_csv(const std::vector<TableRow>& rows) {
    std::ostringstream out;
    out << "band_low,band_high,step_nm,te_fs,mean_pct,std_pct,n_replicates\n";
    for (const auto& r : rows)
        out << io::format_double(r.band_low) << ',' << io::format_double(r.band_high) << ','
            << io::format_double(r.step) << ',' << io::format_double(r.entanglement_time) << ','
            << io::format_double(r.mean_efficiency) << ',' << io::format_double(r.std_deviation) << ','
            << r.efficiencies.size() << '\n';
    return out.str();
}

std::string replicates_csv(const std::vector<TableRow>& rows) {
    std::ostringstream out;
    out << "band_low,band_high,step_nm,te_fs,replicate,efficiency_pct\n";
    for (const auto& r : rows)
        for (std::size_t i = 0; i < r.efficiencies.size(); ++i)
            out << io::format_double(r.band_low) << ',' << io::format_double(r.band_high) << ','
                << io::format_double(r.step) << ',' << io::format_double(r.entanglement_time) << ','
                << i << ',' << io::format_double(r.efficiencies[i]) << '\n';
    return out.str();
}

std::string format_table(const std::vector<TableRow>& rows) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-14s %8s %8s %8s %10s %9s %5s\n", "range (nm)", "dl (nm)",
                  "step", "T_e (fs)", "E_m (%)", "sigma (%)", "n");
    out << line;
    for (const auto& r : rows) {
        char range[32];
        std::snprintf(range, sizeof range, "(%g, %g)", r.band_low, r.band_high);
        std::snprintf(line, sizeof line, "%-14s %8g %8g %8g %10.2f %9.2f %5zu\n", range,
                      r.band_width(), r.step, r.entanglement_time, r.mean_efficiency,
                      r.std_deviation, r.efficiencies.size());
        out << line;
    }
    return out.str();
}

} // namespace etpa::experiment
