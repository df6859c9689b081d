#include "etpa/dataset_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "etpa/errors.hpp"
#include "etpa/io_util.hpp"

namespace etpa::data {

using nlohmann::json;

namespace {

std::string feature_name(std::size_t f) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "f%03zu", f);
    return buf;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

json config_to_json(const GeneratorConfig& c) {
    return {
        {"band", {{"low", c.band.low}, {"high", c.band.high}, {"step", c.band.step}}},
        {"source",
         {{"lambda_s0_nm", c.source.lambda_s0},
          {"lambda_i0_nm", c.source.lambda_i0},
          {"entanglement_time_fs", c.source.entanglement_time},
          {"interaction_area_um2", c.source.interaction_area}}},
        {"per_class", c.per_class},
        {"n_samples", c.n_samples},
        {"window_fs", {c.window.start, c.window.end}},
        {"seed", c.seed},
        {"normalize", c.normalize},
        {"random_dipoles", c.random_dipoles},
        {"noise_sigma", c.noise_sigma},
    };
}

GeneratorConfig config_from_json(const json& j) {
    GeneratorConfig c;
    c.band.low = j.at("band").at("low").get<double>();
    c.band.high = j.at("band").at("high").get<double>();
    c.band.step = j.at("band").at("step").get<double>();
    const auto& s = j.at("source");
    c.source.lambda_s0 = s.at("lambda_s0_nm").get<double>();
    c.source.lambda_i0 = s.at("lambda_i0_nm").get<double>();
    c.source.entanglement_time = s.at("entanglement_time_fs").get<double>();
    c.source.interaction_area = s.at("interaction_area_um2").get<double>();
    c.per_class = j.at("per_class").get<int>();
    c.n_samples = j.at("n_samples").get<std::size_t>();
    c.window.start = j.at("window_fs").at(0).get<double>();
    c.window.end = j.at("window_fs").at(1).get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.normalize = j.at("normalize").get<bool>();
    c.random_dipoles = j.at("random_dipoles").get<bool>();
    c.noise_sigma = j.at("noise_sigma").get<double>();
    return c;
}

void read_metadata(const std::filesystem::path& path, Dataset& dataset) {
    std::ifstream in(path);
    if (!in)
        throw MalformedFileError("cannot open metadata " + path.string());
    try {
        const json meta = json::parse(in);
        dataset.config = config_from_json(meta.at("generator"));
        if (meta.contains("split") && !meta.at("split").is_null()) {
            const auto tags = meta.at("split").get<std::string>();
            if (tags.size() != dataset.size())
                throw MalformedFileError("metadata split covers " + std::to_string(tags.size()) +
                                         " records, file has " + std::to_string(dataset.size()));
            dataset.split.clear();
            for (char t : tags) {
                switch (t) {
                case 'T': dataset.split.push_back(Subset::train); break;
                case 'V': dataset.split.push_back(Subset::validation); break;
                case 'E': dataset.split.push_back(Subset::test); break;
                default: throw MalformedFileError("metadata split: unknown tag");
                }
            }
        }
        if (meta.contains("scaling") && !meta.at("scaling").is_null()) {
            FeatureScaling s;
            s.min = meta.at("scaling").at("min").get<std::vector<double>>();
            s.max = meta.at("scaling").at("max").get<std::vector<double>>();
            if (s.min.size() != dataset.feature_count() || s.max.size() != dataset.feature_count())
                throw FeatureCountError("metadata scaling has wrong feature count");
            dataset.scaling = std::move(s);
        }
    } catch (const json::exception& e) {
        throw MalformedFileError("metadata " + path.string() + ": " + e.what());
    }
}

} // namespace

std::filesystem::path metadata_path(const std::filesystem::path& csv_path) {
    auto p = csv_path;
    p += ".meta.json";
    return p;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& csv_path) {
    const std::size_t d = dataset.feature_count();
    io::write_atomically(csv_path, [&](std::ostream& out) {
        for (std::size_t f = 0; f < d; ++f)
            out << feature_name(f) << ',';
        out << "class\n";
        for (const auto& rec : dataset.records) {
            if (rec.features.size() != d)
                throw FeatureCountError("save: ragged feature rows");
            for (double v : rec.features)
                out << io::format_double(v) << ',';
            out << rec.class_index << '\n';
        }
    });

    json meta;
    meta["format"] = "etpa-dataset/1";
    meta["records"] = dataset.size();
    meta["features"] = d;
    meta["generator"] = config_to_json(dataset.config);
    if (dataset.split.empty()) {
        meta["split"] = nullptr;
    } else {
        std::string tags;
        for (auto s : dataset.split)
            tags.push_back(s == Subset::train ? 'T' : s == Subset::validation ? 'V' : 'E');
        meta["split"] = tags;
    }
    if (dataset.scaling)
        meta["scaling"] = {{"min", dataset.scaling->min}, {"max", dataset.scaling->max}};
    else
        meta["scaling"] = nullptr;
    io::write_atomically(metadata_path(csv_path), [&](std::ostream& out) { out << meta.dump(1) << '\n'; });
}

Dataset load_dataset(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path);
    if (!in)
        throw MalformedFileError("cannot open " + csv_path.string());

    std::string line;
    if (!std::getline(in, line))
        throw MalformedFileError(csv_path.string() + ": empty file");
    const auto header = split_fields(line);
    if (header.size() < 2 || header.back() != "class")
        throw MalformedFileError(csv_path.string() + ": header must end with 'class'");
    const std::size_t d = header.size() - 1;
    for (std::size_t f = 0; f < d; ++f)
        if (header[f] != feature_name(f))
            throw MalformedFileError(csv_path.string() + ": unexpected header column '" +
                                     std::string(header[f]) + "'");

    Dataset dataset;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        const auto fields = split_fields(line);
        const std::string where = csv_path.string() + ":" + std::to_string(line_no);
        if (fields.size() != d + 1)
            throw FeatureCountError(where + ": expected " + std::to_string(d) + " features, got " +
                                    std::to_string(fields.size() - 1));
        LabeledSignal rec;
        rec.features.reserve(d);
        for (std::size_t f = 0; f < d; ++f)
            rec.features.push_back(io::parse_double(fields[f], where));
        int label = 0;
        auto [ptr, ec] = std::from_chars(fields[d].data(), fields[d].data() + fields[d].size(), label);
        if (ec != std::errc{} || ptr != fields[d].data() + fields[d].size())
            throw MalformedFileError(where + ": class label is not an integer");
        if (label < 1 || label > class_count)
            throw LabelError(where + ": class label " + std::to_string(label) + " outside 1..4");
        rec.class_index = label;
        dataset.records.push_back(std::move(rec));
    }

    const auto meta = metadata_path(csv_path);
    if (std::filesystem::exists(meta))
        read_metadata(meta, dataset);
    return dataset;
}

} // namespace etpa::data
