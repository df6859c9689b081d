#include "etpa/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>

#include "etpa/dataset.hpp"
#include "etpa/dataset_io.hpp"
#include "etpa/errors.hpp"
#include "etpa/experiment.hpp"
#include "etpa/io_util.hpp"
#include "etpa/mlp.hpp"
#include "etpa/model_io.hpp"
#include "etpa/oracle.hpp"
#include "etpa/parallel.hpp"
#include "etpa/physics.hpp"
#include "etpa/scg.hpp"

#ifndef ETPA_VERSION
#define ETPA_VERSION "0.0.0"
#endif

namespace etpa::cli {

namespace {

[[noreturn]] void flag_error(const std::string& flag, const std::string& message) {
    throw ValidationError(flag + ": " + message);
}

// Re-raise a validation failure with the offending flag named.
template <typename Fn>
void check_flag(const std::string& flag, Fn&& fn) {
    try {
        fn();
    } catch (const ValidationError& e) {
        flag_error(flag, e.what());
    }
}

std::string fmt(const char* format, double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, value);
    return buf;
}

struct SourceFlags {
    double te_fs = 63.0;
    double lambda0_nm = 810.0;
    double lambda_s_nm = 0.0;
    double lambda_i_nm = 0.0;
    double area_um2 = 10.0;

    void add(CLI::App& cmd) {
        cmd.add_option("--te-fs", te_fs, "Entanglement time T_e (fs)")->capture_default_str();
        cmd.add_option("--lambda0-nm", lambda0_nm, "Central wavelength of a degenerate pair (nm)")
            ->capture_default_str();
        cmd.add_option("--lambda-s-nm", lambda_s_nm, "Signal central wavelength (nm); overrides --lambda0-nm");
        cmd.add_option("--lambda-i-nm", lambda_i_nm, "Idler central wavelength (nm); overrides --lambda0-nm");
        cmd.add_option("--area-um2", area_um2, "Interaction area (um^2)")->capture_default_str();
    }

    physics::PhotonSource build() const {
        physics::PhotonSource s;
        s.lambda_s0 = lambda_s_nm > 0.0 ? lambda_s_nm : lambda0_nm;
        s.lambda_i0 = lambda_i_nm > 0.0 ? lambda_i_nm : lambda0_nm;
        s.entanglement_time = te_fs;
        s.interaction_area = area_um2;
        if (!(s.entanglement_time > 0.0))
            flag_error("--te-fs", "entanglement time must be positive");
        if (!(s.lambda_s0 > 0.0) || !(s.lambda_i0 > 0.0))
            flag_error("--lambda0-nm", "wavelengths must be positive");
        if (!(s.interaction_area > 0.0))
            flag_error("--area-um2", "interaction area must be positive");
        return s;
    }
};

struct WindowFlags {
    double tau_min = -100.0;
    double tau_max = 100.0;
    std::size_t samples = 500;

    void add(CLI::App& cmd) {
        cmd.add_option("--tau-min-fs", tau_min, "Start of the delay window (fs)")->capture_default_str();
        cmd.add_option("--tau-max-fs", tau_max, "End of the delay window (fs)")->capture_default_str();
        cmd.add_option("--samples", samples, "Delay samples per trace")->capture_default_str();
    }

    physics::TauWindow build() const {
        if (!(tau_min < tau_max))
            flag_error("--tau-min-fs", "must be below --tau-max-fs");
        if (samples < 2)
            flag_error("--samples", "need at least 2 samples");
        return {tau_min, tau_max};
    }
};

struct TrainFlags {
    int hidden = 5;
    int max_epochs = 1000;
    int fail_limit = 6;
    double sigma = 5e-5;
    double lambda = 5e-7;

    void add(CLI::App& cmd) {
        cmd.add_option("--hidden", hidden, "Hidden sigmoid units")->capture_default_str()->check(CLI::PositiveNumber);
        cmd.add_option("--max-epochs", max_epochs, "Epoch limit")->capture_default_str()->check(CLI::PositiveNumber);
        cmd.add_option("--fail-limit", fail_limit, "Consecutive validation failures before stopping")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        cmd.add_option("--scg-sigma", sigma, "SCG curvature probe length")->capture_default_str()->check(CLI::PositiveNumber);
        cmd.add_option("--scg-lambda", lambda, "SCG initial scale")->capture_default_str()->check(CLI::PositiveNumber);
    }

    nn::TrainConfig build(std::uint64_t seed) const {
        nn::TrainConfig c;
        c.max_epochs = max_epochs;
        c.validation_fail_limit = fail_limit;
        c.scg_sigma = sigma;
        c.scg_lambda_init = lambda;
        c.seed = seed;
        return c;
    }
};

void write_or_print(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    io::write_atomically(path, [&](std::ostream& f) { f << text; });
}

std::string confusion_text(const nn::Evaluation& e) {
    std::ostringstream s;
    s << "confusion (rows: true levels, columns: predicted levels)\n";
    s << "      1     2     3     4\n";
    for (int t = 0; t < class_count; ++t) {
        s << t + 1;
        for (int p = 0; p < class_count; ++p) {
            char cell[16];
            std::snprintf(cell, sizeof cell, "%6d", e.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)]);
            s << cell;
        }
        s << '\n';
    }
    return s.str();
}

// Oracle-equivalence and gradient checks shared by `check`. Returns true if all pass.
bool run_checks(std::uint64_t seed, int systems, std::ostream& out) {
    bool ok = true;

    Rng rng = derive_rng(seed, {0x4348, 1});
    const data::LevelBand band{835.0, 845.0, 1.0};
    const auto source = physics::PhotonSource::degenerate(810.0, 63.0);
    const auto grid = physics::tau_grid({}, 500);
    double worst = 0.0;
    for (int i = 0; i < systems; ++i) {
        std::uniform_int_distribution<int> levels(1, 4);
        const auto system = data::sample_system(band, levels(rng), rng);
        const auto closed = physics::signal_trace(system, source, {}, 500, true);
        const auto oracle = physics::oracle_trace(system, source, grid);
        for (std::size_t n = 0; n < grid.size(); ++n)
            worst = std::max(worst, std::abs(closed.values[n] - oracle.values[n]));
    }
    const bool oracle_ok = worst < 1e-3;
    ok = ok && oracle_ok;
    out << (oracle_ok ? "PASS" : "FAIL") << "  oracle equivalence: max |closed - quadrature| = "
        << fmt("%.3e", worst) << " over " << systems << " systems (limit 1e-3)\n";

    Rng nn_rng = derive_rng(seed, {0x4348, 2});
    double grad_worst = 0.0;
    for (int i = 0; i < 10; ++i) {
        auto params = nn::init_params(5, 500, class_count, nn_rng);
        std::normal_distribution<double> bias(0.0, 0.5);
        for (auto& b : params.hidden_biases()) b = bias(nn_rng);
        for (auto& b : params.output_biases()) b = bias(nn_rng);
        Eigen::MatrixXd x(20, 500);
        std::uniform_real_distribution<double> feature(-1.0, 1.0);
        for (Eigen::Index r = 0; r < x.rows(); ++r)
            for (Eigen::Index c = 0; c < x.cols(); ++c)
                x(r, c) = feature(nn_rng);
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(20, class_count);
        for (Eigen::Index r = 0; r < t.rows(); ++r)
            t(r, r % class_count) = 1.0;
        grad_worst = std::max(grad_worst, nn::finite_diff_check(params, x, t, 1e-5));
    }
    const bool grad_ok = grad_worst < 1e-5;
    ok = ok && grad_ok;
    out << (grad_ok ? "PASS" : "FAIL") << "  gradient check: max relative error = " << fmt("%.3e", grad_worst)
        << " at 10 parameter points (limit 1e-5)\n";
    return ok;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Entangled two-photon absorption signal synthesis and level-count classification"};
    app.set_version_flag("--version", ETPA_VERSION);
    app.set_config("--config", "", "TOML/INI file supplying option values; command-line flags take precedence");
    app.require_subcommand(1);

    std::uint64_t seed = 1;
    unsigned threads = 0;

    // synth
    auto* synth = app.add_subcommand("synth", "Write one delay-scan trace as CSV");
    std::vector<double> levels;
    std::vector<double> dipoles;
    SourceFlags synth_source;
    WindowFlags synth_window;
    bool raw = false;
    std::string method = "closed";
    std::string synth_out;
    synth->add_option("--levels", levels, "Intermediate-level wavelengths (nm)")->required()->delimiter(',');
    synth->add_option("--dipoles", dipoles, "Dipole products, one per level (default 1)")->delimiter(',');
    synth_source.add(*synth);
    synth_window.add(*synth);
    synth->add_flag("--raw", raw, "Write unnormalized values");
    synth->add_option("--method", method, "closed (closed form) or oracle (direct quadrature)")
        ->check(CLI::IsMember({"closed", "oracle"}))
        ->capture_default_str();
    synth->add_option("--out", synth_out, "Output path (stdout if omitted)");
    synth->add_option("--seed", seed, "Random seed (unused by synth)");

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Generate a labeled dataset");
    data::LevelBand band;
    SourceFlags gen_source;
    WindowFlags gen_window;
    int per_class = 500;
    bool normalize = false;
    bool random_dipoles = false;
    double noise_sigma = 0.0;
    std::string gen_out;
    gen->add_option("--band-low", band.low, "Lower edge of the level band (nm)")->capture_default_str();
    gen->add_option("--band-high", band.high, "Upper edge of the level band (nm)")->capture_default_str();
    gen->add_option("--step", band.step, "Level grid spacing (nm)")->capture_default_str();
    gen_source.add(*gen);
    gen_window.add(*gen);
    gen->add_option("--per-class", per_class, "Records per class")->capture_default_str()->check(CLI::PositiveNumber);
    gen->add_option("--seed", seed, "Random seed")->capture_default_str();
    gen->add_option("--threads", threads, "Worker threads (0 = all cores)");
    gen->add_flag("--normalize", normalize, "Peak-normalize every trace");
    gen->add_flag("--random-dipoles", random_dipoles, "Draw dipole products from [0.5, 1]");
    gen->add_option("--noise-sigma", noise_sigma, "Additive Gaussian noise, as a fraction of each trace peak")
        ->check(CLI::NonNegativeNumber);
    gen->add_option("--out", gen_out, "Output CSV path (metadata goes to <out>.meta.json)")->required();

    // train
    auto* train = app.add_subcommand("train", "Train a classifier on a generated dataset");
    std::string train_data;
    std::string model_out;
    TrainFlags train_flags;
    train->add_option("--data", train_data, "Dataset CSV")->required()->check(CLI::ExistingFile);
    train->add_option("--model-out", model_out, "Where to write the trained model")->required();
    train_flags.add(*train);
    train->add_option("--seed", seed, "Initialization seed (also used to split an unsplit dataset)")
        ->capture_default_str();

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate a trained model on a dataset subset");
    std::string eval_model;
    std::string eval_data;
    std::string subset_name = "test";
    eval->add_option("--model", eval_model, "Model file")->required()->check(CLI::ExistingFile);
    eval->add_option("--data", eval_data, "Dataset CSV")->required()->check(CLI::ExistingFile);
    eval->add_option("--subset", subset_name, "train, validation, test or all")
        ->check(CLI::IsMember({"train", "validation", "test", "all"}))
        ->capture_default_str();
    eval->add_option("--seed", seed, "Accepted for uniformity; unused");

    // table
    auto* table = app.add_subcommand("table", "Sweep bands, steps and entanglement times");
    experiment::SweepConfig sweep;
    TrainFlags table_train;
    std::string table_out;
    std::string dump_path;
    table->add_option("--te-fs", sweep.entanglement_times, "Entanglement times (fs)")->delimiter(',')->capture_default_str();
    table->add_option("--band-widths", sweep.band_widths, "Band widths (nm)")->delimiter(',')->capture_default_str();
    table->add_option("--steps", sweep.steps, "Level grid spacings (nm)")->delimiter(',')->capture_default_str();
    table->add_option("--band-center", sweep.band_center, "Band center (nm)")->capture_default_str();
    table->add_option("--lambda0-nm", sweep.base.lambda0, "Degenerate pair wavelength (nm)")->capture_default_str();
    table->add_option("--replicates", sweep.base.replicates, "Trainings per cell")->capture_default_str();
    table->add_option("--per-class", sweep.base.per_class, "Records per class")->capture_default_str()->check(CLI::PositiveNumber);
    table->add_option("--samples", sweep.base.n_samples, "Delay samples per trace")->capture_default_str();
    table->add_flag("--normalize", sweep.base.normalize, "Peak-normalize every trace");
    table->add_flag("--fixed-split", sweep.base.fixed_split, "Use one split for every replicate");
    table_train.add(*table);
    table->add_option("--seed", seed, "Base seed")->capture_default_str();
    table->add_option("--threads", threads, "Worker threads (0 = all cores)");
    table->add_option("--out", table_out, "Report CSV path (stdout table only if omitted)");
    table->add_option("--dump-replicates", dump_path, "Write per-replicate efficiencies to this CSV");

    // check
    auto* check = app.add_subcommand("check", "Run the oracle-equivalence and gradient checks");
    int check_systems = 10;
    check->add_option("--systems", check_systems, "Random systems for the oracle comparison")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    check->add_option("--seed", seed, "Seed for random systems and parameters")->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::CallForVersion&) {
        out << ETPA_VERSION << '\n';
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return exit_validation;
    }

    try {
        if (*synth) {
            const auto source = synth_source.build();
            const auto window = synth_window.build();
            physics::MolecularSystem system;
            system.level_wavelengths = levels;
            system.dipole_products = dipoles.empty() ? std::vector<double>(levels.size(), 1.0) : dipoles;
            if (system.dipole_products.size() != levels.size())
                flag_error("--dipoles", "need exactly one value per level");
            check_flag("--levels", [&] { system.validate(); });

            physics::SignalTrace trace;
            if (method == "oracle") {
                if (raw)
                    flag_error("--raw", "the oracle only produces normalized traces");
                trace = physics::oracle_trace(system, source, physics::tau_grid(window, synth_window.samples));
            } else {
                trace = physics::signal_trace(system, source, window, synth_window.samples, !raw);
            }
            if (trace.degenerate)
                throw DegenerateTraceError("all dipole products are zero; the trace is identically zero");

            std::ostringstream csv;
            csv << (raw ? "tau_fs,p_au\n" : "tau_fs,p_norm\n");
            char row[96];
            for (std::size_t n = 0; n < trace.tau.size(); ++n) {
                std::snprintf(row, sizeof row, "%.15g,%.15g\n", trace.tau[n], trace.values[n]);
                csv << row;
            }
            write_or_print(synth_out, csv.str(), out);
            return exit_ok;
        }

        if (*gen) {
            data::GeneratorConfig config;
            check_flag("--step", [&] { band.validate(); });
            config.band = band;
            config.source = gen_source.build();
            config.window = gen_window.build();
            config.n_samples = gen_window.samples;
            config.per_class = per_class;
            config.seed = seed;
            config.normalize = normalize;
            config.random_dipoles = random_dipoles;
            config.noise_sigma = noise_sigma;
            check_flag("--step", [&] {
                if (band.grid_size() < static_cast<std::size_t>(class_count))
                    throw ValidationError("band has fewer than 4 grid points");
            });
            if (per_class * class_count < 20)
                flag_error("--per-class", "need at least 20 records in total to split");
            config.validate();

            auto dataset = data::generate_dataset(config, threads);
            Rng split_rng = derive_rng(seed, {stream::split, 0});
            data::assign_split(dataset, split_rng);
            data::save_dataset(dataset, gen_out);
            out << "wrote " << dataset.size() << " records (" << dataset.indices(data::Subset::train).size()
                << " train / " << dataset.indices(data::Subset::validation).size() << " validation / "
                << dataset.indices(data::Subset::test).size() << " test) to " << gen_out << '\n';
            return exit_ok;
        }

        if (*train) {
            auto dataset = data::load_dataset(train_data);
            if (dataset.split.empty()) {
                Rng split_rng = derive_rng(seed, {stream::split, 0});
                data::assign_split(dataset, split_rng);
            }
            const auto scaling = dataset.scaling ? *dataset.scaling : data::fit_scaling(dataset);
            const auto tr = data::make_batch(dataset, dataset.indices(data::Subset::train), scaling);
            const auto va = data::make_batch(dataset, dataset.indices(data::Subset::validation), scaling);
            Rng init_rng = derive_rng(seed, {stream::init, 0});
            const auto init = nn::init_params(train_flags.hidden, static_cast<int>(dataset.feature_count()),
                                              class_count, init_rng);
            const auto result = nn::scg_train(init, tr, va, train_flags.build(seed));

            nn::SavedModel model{result.params, scaling, result.report, seed};
            nn::save_model(model, model_out);

            const auto& rep = result.report;
            out << "epochs " << rep.epochs_run << ", stop " << nn::to_string(rep.stop_reason)
                << ", best epoch " << rep.best_epoch << ", best validation loss "
                << fmt("%.6f", rep.best_validation_loss) << '\n';
            out << "train accuracy " << fmt("%.2f", 100.0 * nn::evaluate_model(result.params, tr).accuracy)
                << "%, validation accuracy " << fmt("%.2f", 100.0 * nn::evaluate_model(result.params, va).accuracy)
                << "%\n";
            const auto test_rows = dataset.indices(data::Subset::test);
            if (!test_rows.empty()) {
                const auto te = data::make_batch(dataset, test_rows, scaling);
                out << "test accuracy " << fmt("%.2f", 100.0 * nn::evaluate_model(result.params, te).accuracy)
                    << "%\n";
            }
            return exit_ok;
        }

        if (*eval) {
            const auto model = nn::load_model(eval_model);
            const auto dataset = data::load_dataset(eval_data);
            if (dataset.feature_count() != static_cast<std::size_t>(model.params.shape().inputs))
                flag_error("--data", "feature count does not match the model input size");
            std::vector<std::size_t> rows;
            if (subset_name == "all") {
                rows.resize(dataset.size());
                std::iota(rows.begin(), rows.end(), std::size_t{0});
            } else {
                if (dataset.split.empty())
                    flag_error("--subset", "dataset has no split; use --subset all");
                rows = dataset.indices(data::subset_from_string(subset_name));
            }
            if (rows.empty())
                flag_error("--subset", "selected subset is empty");
            const auto scaling = model.scaling   ? *model.scaling
                                 : dataset.scaling ? *dataset.scaling
                                                   : throw ValidationError("--model: no feature scaling in model or dataset");
            const auto batch = data::make_batch(dataset, rows, scaling);
            const auto e = nn::evaluate_model(model.params, batch);
            out << "accuracy " << fmt("%.4f", 100.0 * e.accuracy) << "% on " << e.total() << " "
                << subset_name << " records\n"
                << confusion_text(e);
            return exit_ok;
        }

        if (*table) {
            sweep.base.base_seed = seed;
            sweep.base.hidden = table_train.hidden;
            sweep.base.train = table_train.build(seed);
            if (sweep.base.replicates < 2)
                flag_error("--replicates", "need at least 2 replicates");
            for (double te : sweep.entanglement_times)
                if (!(te > 0.0))
                    flag_error("--te-fs", "entanglement times must be positive");
            for (const auto& cell : sweep.cells()) {
                check_flag("--steps", [&] { cell.band.validate(); });
                check_flag("--per-class", [&] { cell.validate(); });
            }

            const auto rows = experiment::reproduce_table(
                sweep, threads, [&](const experiment::TableRow& r, std::size_t done, std::size_t total) {
                    char line[160];
                    std::snprintf(line, sizeof line, "[%zu/%zu] (%g, %g) step %g T_e %g: %.2f +- %.2f %%\n",
                                  done, total, r.band_low, r.band_high, r.step, r.entanglement_time,
                                  r.mean_efficiency, r.std_deviation);
                    err << line << std::flush;
                });
            out << experiment::format_table(rows);
            if (!table_out.empty())
                write_or_print(table_out, experiment::table_csv(rows), out);
            if (!dump_path.empty())
                write_or_print(dump_path, experiment::replicates_csv(rows), out);
            return exit_ok;
        }

        if (*check) {
            return run_checks(seed, check_systems, out) ? exit_ok : exit_runtime;
        }
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return exit_validation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_runtime;
    }
    return exit_validation;
}

} // namespace etpa::cli
