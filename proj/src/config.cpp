#include "zs3/config.hpp"

#include "zs3/errors.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace zs3 {

namespace {

using Json = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct FieldBinding {
    std::function<void(const Json&)> set;
    std::function<Json()> get;
};

/// Declarative section/key schema over a RunConfig. One table drives
/// parsing, unknown-key rejection, validation, and the echo.
class Schema {
public:
    explicit Schema(RunConfig& cfg) : cfg_(cfg) { build(); }

    void apply(const std::string& section, const std::string& key, const Json& value) {
        auto sec = fields_.find(section);
        if (sec == fields_.end()) throw ConfigError("unknown config section [" + section + "]");
        auto field = sec->second.find(key);
        if (field == sec->second.end())
            throw ConfigError("unknown config key '" + key + "' in section [" + section + "]");
        field->second.set(value);
    }

    Json echo() const {
        Json out = Json::object();
        for (const auto& [section, keys] : fields_) {
            Json sec = Json::object();
            for (const auto& [key, binding] : keys) sec[key] = binding.get();
            out[section] = sec;
        }
        return out;
    }

private:
    template <typename T>
    static T as_number(const Json& v, const std::string& name) {
        if (v.is_string()) {
            const std::string s = v.get<std::string>();
            try {
                if constexpr (std::is_floating_point_v<T>)
                    return static_cast<T>(std::stod(s));
                else
                    return static_cast<T>(std::stoull(s));
            } catch (const std::exception&) {
                throw ConfigError("field '" + name + "': cannot parse '" + s + "'");
            }
        }
        if (!v.is_number() && !v.is_boolean())
            throw ConfigError("field '" + name + "': expected a number");
        return v.get<T>();
    }

    static bool as_bool(const Json& v, const std::string& name) {
        if (v.is_boolean()) return v.get<bool>();
        if (v.is_string()) {
            const std::string s = v.get<std::string>();
            if (s == "true" || s == "1" || s == "on") return true;
            if (s == "false" || s == "0" || s == "off") return false;
        }
        if (v.is_number_integer()) return v.get<int>() != 0;
        throw ConfigError("field '" + name + "': expected a boolean");
    }

    void number(const std::string& section, const std::string& key, double& ref, double lo, double hi) {
        const std::string name = section + "." + key;
        fields_[section][key] = FieldBinding{
            [&ref, name, lo, hi](const Json& v) {
                const double x = as_number<double>(v, name);
                if (!(x >= lo && x <= hi))
                    throw ConfigError("field '" + name + "' out of range [" + std::to_string(lo) + ", " +
                                      std::to_string(hi) + "]");
                ref = x;
            },
            [&ref]() { return Json(ref); }};
    }

    void count(const std::string& section, const std::string& key, std::size_t& ref, std::size_t lo,
               std::size_t hi) {
        const std::string name = section + "." + key;
        fields_[section][key] = FieldBinding{
            [&ref, name, lo, hi](const Json& v) {
                const std::size_t x = as_number<std::size_t>(v, name);
                if (x < lo || x > hi)
                    throw ConfigError("field '" + name + "' out of range [" + std::to_string(lo) + ", " +
                                      std::to_string(hi) + "]");
                ref = x;
            },
            [&ref]() { return Json(ref); }};
    }

    void seed_field(const std::string& section, const std::string& key, std::uint64_t& ref) {
        const std::string name = section + "." + key;
        fields_[section][key] = FieldBinding{
            [&ref, name](const Json& v) { ref = as_number<std::uint64_t>(v, name); },
            [&ref]() { return Json(ref); }};
    }

    void boolean(const std::string& section, const std::string& key, bool& ref) {
        const std::string name = section + "." + key;
        fields_[section][key] = FieldBinding{[&ref, name](const Json& v) { ref = as_bool(v, name); },
                                             [&ref]() { return Json(ref); }};
    }

    void text(const std::string& section, const std::string& key, std::string& ref) {
        fields_[section][key] =
            FieldBinding{[&ref](const Json& v) { ref = v.is_string() ? v.get<std::string>() : v.dump(); },
                         [&ref]() { return Json(ref); }};
    }

    void bandwidths(const std::string& section, const std::string& key, std::vector<double>& ref) {
        const std::string name = section + "." + key;
        fields_[section][key] = FieldBinding{
            [&ref, name](const Json& v) {
                std::vector<double> out;
                if (v.is_array()) {
                    for (const auto& e : v) out.push_back(as_number<double>(e, name));
                } else if (v.is_string()) {
                    std::istringstream ss(v.get<std::string>());
                    std::string tok;
                    while (std::getline(ss, tok, ','))
                        if (!tok.empty()) out.push_back(std::stod(tok));
                } else {
                    throw ConfigError("field '" + name + "': expected a list of bandwidths");
                }
                if (out.empty()) throw ConfigError("field '" + name + "': bandwidth list is empty");
                for (double s : out)
                    if (!(s > 0.0)) throw ConfigError("field '" + name + "': bandwidths must be positive");
                ref = std::move(out);
            },
            [&ref]() { return Json(ref); }};
    }

    void connectivity_field(const std::string& section, const std::string& key, int& ref) {
        const std::string name = section + "." + key;
        fields_[section][key] = FieldBinding{
            [&ref, name](const Json& v) {
                const int x = static_cast<int>(as_number<std::size_t>(v, name));
                if (x != 4 && x != 8) throw ConfigError("field '" + name + "' must be 4 or 8");
                ref = x;
            },
            [&ref]() { return Json(ref); }};
    }

    void build() {
        PipelineConfig& p = cfg_.pipeline;
        seed_field("run", "seed", p.seed);
        boolean("run", "graph_context", p.graph_context);
        number("run", "self_training_p", p.self_training_p, 0.0, 1.0);
        count("run", "self_training_rounds", p.self_training_rounds, 1, 16);

        count("world", "classes", p.n_classes, 2, 4096);
        count("world", "d_a", p.d_a, 2, 4096);
        count("world", "d_x", p.world.d_x, 2, 4096);
        number("world", "sigma_f", p.world.sigma_f, 0.0, 1e6);
        number("world", "pair_cos", p.embedding_pair_cos, 0.01, 0.999);
        count("world", "min_stamps", p.world.geometry.min_stamps, 0, 1024);
        count("world", "max_stamps", p.world.geometry.max_stamps, 0, 1024);
        count("world", "min_region_size", p.world.geometry.min_region_size, 1, 1 << 24);

        count("scenes", "height", p.scene_height, 2, 4096);
        count("scenes", "width", p.scene_width, 2, 4096);
        count("scenes", "train", p.n_train_scenes, 1, 1 << 20);
        count("scenes", "test", p.n_test_scenes, 1, 1 << 20);
        count("scenes", "pool", p.n_pool_scenes, 0, 1 << 20);

        count("split", "unseen", p.n_unseen, 0, 4096);

        count("generator", "hidden", p.generator.hidden, 1, 1 << 16);
        number("generator", "leaky_slope", p.generator.leaky_slope, 1e-6, 0.999999);
        number("generator", "dropout", p.generator.dropout_rate, 0.0, 0.999999);
        number("generator", "lr", p.generator.learning_rate, 1e-12, 1e3);
        count("generator", "iterations", p.generator.iterations, 0, 1 << 24);
        count("generator", "batch_real", p.generator.batch_real, 1, 1 << 16);
        count("generator", "batch_synthetic", p.generator.batch_synthetic, 1, 1 << 16);
        bandwidths("generator", "bandwidths", p.kernel_bandwidths);
        number("generator", "kernel_scale", p.kernel_scale, 1e-9, 1e9);
        count("generator", "structure_masks", p.n_structure_masks, 1, 1 << 20);
        connectivity_field("generator", "connectivity", p.graph_connectivity);

        number("classifier", "base_lr", p.classifier.base_lr, 1e-12, 1e3);
        number("classifier", "weight_decay", p.classifier.weight_decay, 0.0, 1.0);
        number("classifier", "momentum", p.classifier.momentum, 0.0, 0.999999);
        number("classifier", "poly_power", p.classifier.poly_power, 1e-6, 16.0);
        count("classifier", "iterations", p.classifier.iterations, 0, 1 << 24);
        count("classifier", "batch", p.classifier.batch_size, 1, 1 << 16);
        count("classifier", "per_class_cap", p.classifier.per_class_cap, 1, 1 << 24);
        count("classifier", "synthetic_per_class", p.synthetic_per_class, 1, 1 << 24);

        text("paths", "dataset_dir", cfg_.paths.dataset_dir);
        text("paths", "embeddings", cfg_.paths.embeddings);
        text("paths", "generator", cfg_.paths.generator_checkpoint);
        text("paths", "classifier", cfg_.paths.classifier_checkpoint);
        text("paths", "output_dir", cfg_.paths.output_dir);
    }

    RunConfig& cfg_;
    std::map<std::string, std::map<std::string, FieldBinding>> fields_;
};

void validate(const RunConfig& cfg) {
    const PipelineConfig& p = cfg.pipeline;
    if (p.n_unseen >= p.n_classes)
        throw ConfigError("field 'split.unseen' must be smaller than world.classes");
    if (p.world.geometry.min_stamps > p.world.geometry.max_stamps)
        throw ConfigError("field 'world.min_stamps' exceeds world.max_stamps");
    if (p.world.geometry.min_region_size > p.scene_height * p.scene_width)
        throw ConfigError("field 'world.min_region_size' exceeds the scene area");
}

RunConfig parse_ini(const std::string& text) {
    RunConfig cfg;
    Schema schema(cfg);
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.erase(comment);
        auto begin = line.find_first_not_of(" \t\r");
        if (begin == std::string::npos) continue;
        auto end = line.find_last_not_of(" \t\r");
        line = line.substr(begin, end - begin + 1);
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ParseError("config line " + std::to_string(lineno) + ": unterminated section header");
            section = line.substr(1, line.size() - 2);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        key.erase(key.find_last_not_of(" \t") + 1);
        value.erase(0, value.find_first_not_of(" \t"));
        if (section.empty())
            throw ParseError("config line " + std::to_string(lineno) + ": key outside any section");
        try {
            schema.apply(section, key, Json(value));
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    validate(cfg);
    return cfg;
}

RunConfig parse_json(const std::string& text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ParseError(std::string("config JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("config JSON: expected an object of sections");
    RunConfig cfg;
    Schema schema(cfg);
    for (const auto& [section, body] : doc.items()) {
        if (!body.is_object()) throw ParseError("config section '" + section + "' must be an object");
        for (const auto& [key, value] : body.items()) schema.apply(section, key, value);
    }
    validate(cfg);
    return cfg;
}

} // namespace

RunConfig parse_config_text(const std::string& text, bool json) {
    return json ? parse_json(text) : parse_ini(text);
}

RunConfig load_config(const std::string& path) {
    const std::string text = read_file(path);
    bool json = path.size() > 5 && path.compare(path.size() - 5, 5, ".json") == 0;
    if (!json) {
        const auto first = text.find_first_not_of(" \t\r\n");
        json = first != std::string::npos && text[first] == '{';
    }
    return parse_config_text(text, json);
}

std::string config_echo_json(const RunConfig& config) {
    RunConfig copy = config;
    Schema schema(copy);
    return schema.echo().dump(2) + "\n";
}

std::string split_to_json(const SplitConfig& split) {
    Json doc = Json::object();
    doc["unseen"] = split.n_unseen;
    doc["seed"] = split.seed;
    doc["unseen_ids"] = split.unseen_ids;
    return doc.dump(2) + "\n";
}

SplitConfig split_from_json_file(const std::string& path) {
    Json doc;
    try {
        doc = Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
        throw ParseError(std::string("split JSON: ") + e.what());
    }
    SplitConfig split;
    if (!doc.contains("unseen") || !doc.contains("seed") || !doc.contains("unseen_ids"))
        throw ParseError("split JSON: missing unseen/seed/unseen_ids");
    split.n_unseen = doc["unseen"].get<std::size_t>();
    split.seed = doc["seed"].get<std::uint64_t>();
    split.unseen_ids = doc["unseen_ids"].get<std::vector<std::size_t>>();
    if (split.unseen_ids.size() != split.n_unseen) throw ParseError("split JSON: inconsistent unseen count");
    return split;
}

} // namespace zs3
