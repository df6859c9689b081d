#include "etpa/model_io.hpp"

#include <fstream>

#include <json.hpp>

#include "etpa/errors.hpp"
#include "etpa/io_util.hpp"

namespace etpa::nn {

using nlohmann::json;

namespace {

std::vector<double> flatten(const auto& m) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            out.push_back(m(r, c));
    return out;
}

void unflatten(const json& j, auto&& m, const char* name) {
    const auto v = j.at(name).get<std::vector<double>>();
    if (v.size() != static_cast<std::size_t>(m.size()))
        throw MalformedFileError(std::string("model: '") + name + "' has " + std::to_string(v.size()) +
                                 " entries, expected " + std::to_string(m.size()));
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            m(r, c) = v[i++];
}

StopReason stop_reason_from(const std::string& s) {
    if (s == "validation_stall") return StopReason::validation_stall;
    if (s == "max_epochs") return StopReason::max_epochs;
    if (s == "gradient_vanished") return StopReason::gradient_vanished;
    throw MalformedFileError("model: unknown stop reason '" + s + "'");
}

} // namespace

void save_model(const SavedModel& model, const std::filesystem::path& path) {
    const auto& p = model.params;
    json j;
    j["format"] = "etpa-mlp/1";
    j["inputs"] = p.shape().inputs;
    j["hidden"] = p.shape().hidden;
    j["outputs"] = p.shape().outputs;
    j["hidden_activation"] = "logistic";
    j["output_activation"] = "softmax";
    j["hidden_weights"] = flatten(p.hidden_weights());
    j["hidden_biases"] = flatten(p.hidden_biases());
    j["output_weights"] = flatten(p.output_weights());
    j["output_biases"] = flatten(p.output_biases());
    j["seed"] = model.seed;
    if (model.scaling)
        j["scaling"] = {{"min", model.scaling->min}, {"max", model.scaling->max}};
    if (model.report) {
        const auto& r = *model.report;
        j["training"] = {
            {"epochs_run", r.epochs_run},
            {"best_epoch", r.best_epoch},
            {"stop_reason", std::string(to_string(r.stop_reason))},
            {"initial_training_loss", r.initial_training_loss},
            {"initial_validation_loss", r.initial_validation_loss},
            {"best_validation_loss", r.best_validation_loss},
            {"training_loss", r.training_loss},
            {"validation_loss", r.validation_loss},
        };
    }
    io::write_atomically(path, [&](std::ostream& out) { out << j.dump(1) << '\n'; });
}

SavedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw MalformedFileError("cannot open model " + path.string());
    try {
        const json j = json::parse(in);
        if (j.value("format", "") != "etpa-mlp/1")
            throw MalformedFileError("model " + path.string() + ": unknown format");
        const MlpShape shape{j.at("inputs").get<int>(), j.at("hidden").get<int>(), j.at("outputs").get<int>()};
        SavedModel model;
        model.params = MlpParams(shape);
        unflatten(j, model.params.hidden_weights(), "hidden_weights");
        unflatten(j, model.params.hidden_biases(), "hidden_biases");
        unflatten(j, model.params.output_weights(), "output_weights");
        unflatten(j, model.params.output_biases(), "output_biases");
        model.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("scaling")) {
            data::FeatureScaling s;
            s.min = j.at("scaling").at("min").get<std::vector<double>>();
            s.max = j.at("scaling").at("max").get<std::vector<double>>();
            if (s.min.size() != static_cast<std::size_t>(shape.inputs) || s.max.size() != s.min.size())
                throw MalformedFileError("model: scaling does not match input dimension");
            model.scaling = std::move(s);
        }
        if (j.contains("training")) {
            const auto& t = j.at("training");
            TrainReport r;
            r.epochs_run = t.at("epochs_run").get<int>();
            r.best_epoch = t.at("best_epoch").get<int>();
            r.stop_reason = stop_reason_from(t.at("stop_reason").get<std::string>());
            r.initial_training_loss = t.at("initial_training_loss").get<double>();
            r.initial_validation_loss = t.at("initial_validation_loss").get<double>();
            r.best_validation_loss = t.at("best_validation_loss").get<double>();
            r.training_loss = t.at("training_loss").get<std::vector<double>>();
            r.validation_loss = t.at("validation_loss").get<std::vector<double>>();
            model.report = std::move(r);
        }
        if (!model.params.all_finite())
            throw MalformedFileError("model " + path.string() + ": non-finite weights");
        return model;
    } catch (const json::exception& e) {
        throw MalformedFileError("model " + path.string() + ": " + e.what());
    } catch (const ValidationError& e) {
        throw MalformedFileError("model " + path.string() + ": " + e.what());
    }
}

} // namespace etpa::nn
