#include "spr/config.hpp"

#include <algorithm>
#include <fstream>

#include "spr/error.hpp"

namespace spr {

using nlohmann::json;

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "seed",          "class",          "sigma2",          "theta",
        "sigma_diag",    "period_fractions", "period_convention", "draws",
        "alpha",         "bootstrap_replicates", "bootstrap_scope", "bootstrap_common_random_numbers",
        "bandwidth",     "bandwidth_scale", "bandwidth_rate",  "workers",
        "output_dir",    "grid_x_min",     "grid_x_max",      "grid_x_count",
        "grid_y_min",    "grid_y_max",     "grid_y_count",    "grid_log_spaced",
        "set_mode",      "set_draws",      "curve_draws",     "curve_grid",
        "settings",      "replications",   "oracle_replications", "n_a",
        "n_b",           "misspecified",   "study_a_structure", "smoother_preset",
        "simulation_scope",
    };
    return keys;
}

namespace {

const json& field(const json& doc, const char* key) {
    return doc.at(key);
}

double number(const json& doc, const char* key) {
    const auto& v = field(doc, key);
    if (!v.is_number()) throw ConfigError(std::string("config key '") + key + "' must be a number");
    return v.get<double>();
}

std::size_t count(const json& doc, const char* key) {
    const auto& v = field(doc, key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ConfigError(std::string("config key '") + key + "' must be a non-negative integer");
    return v.get<std::size_t>();
}

bool boolean(const json& doc, const char* key) {
    const auto& v = field(doc, key);
    if (!v.is_boolean()) throw ConfigError(std::string("config key '") + key + "' must be true or false");
    return v.get<bool>();
}

std::string text(const json& doc, const char* key) {
    const auto& v = field(doc, key);
    if (!v.is_string()) throw ConfigError(std::string("config key '") + key + "' must be a string");
    return v.get<std::string>();
}

std::vector<double> numbers(const json& doc, const char* key) {
    const auto& v = field(doc, key);
    if (!v.is_array()) throw ConfigError(std::string("config key '") + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw ConfigError(std::string("config key '") + key + "' must be an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

} // namespace

Seed AnalysisConfig::master_seed() const {
    if (!seed) throw ConfigError("a master seed is required (config key 'seed' or --seed)");
    return Seed(*seed);
}

AnalysisConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    const auto& keys = config_keys();
    for (const auto& [key, value] : doc.items())
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            throw ConfigError("unknown config key '" + key + "'");

    AnalysisConfig c;
    auto has = [&](const char* key) { return doc.contains(key); };
    if (has("seed")) {
        const auto& v = doc.at("seed");
        if (!v.is_number_unsigned()) throw ConfigError("config key 'seed' must be a non-negative integer");
        c.seed = v.get<std::uint64_t>();
    }
    if (has("class")) c.class_spec.family = parse_class_family(text(doc, "class"));
    if (has("sigma2")) c.class_spec.sigma2 = number(doc, "sigma2");
    if (has("theta")) c.class_spec.theta = number(doc, "theta");
    if (has("sigma_diag")) c.class_spec.sigma_diag = numbers(doc, "sigma_diag");
    if (has("period_fractions")) c.class_spec.period_fractions = numbers(doc, "period_fractions");
    if (has("period_convention")) c.class_spec.convention = parse_period_convention(text(doc, "period_convention"));
    if (has("draws")) c.estimate.draws = count(doc, "draws");
    if (has("alpha")) c.estimate.alpha = number(doc, "alpha");
    if (has("bootstrap_replicates")) c.bootstrap.replicates = count(doc, "bootstrap_replicates");
    if (has("bootstrap_scope")) c.bootstrap.scope = parse_resample_scope(text(doc, "bootstrap_scope"));
    if (has("bootstrap_common_random_numbers"))
        c.bootstrap.common_random_numbers = boolean(doc, "bootstrap_common_random_numbers");
    if (has("bandwidth")) c.smoother.bandwidth = number(doc, "bandwidth");
    if (has("bandwidth_scale")) c.smoother.rule.scale = number(doc, "bandwidth_scale");
    if (has("bandwidth_rate")) c.smoother.rule.rate = number(doc, "bandwidth_rate");
    if (has("workers")) c.workers = count(doc, "workers");
    if (has("output_dir")) c.output_dir = text(doc, "output_dir");

    const bool any_grid = std::any_of(keys.begin(), keys.end(), [&](const std::string& k) {
        return k.rfind("grid_", 0) == 0 && doc.contains(k);
    });
    if (any_grid) {
        for (const char* k : {"grid_x_min", "grid_x_max", "grid_y_min", "grid_y_max"})
            if (!has(k)) throw ConfigError(std::string("grid ranges need '") + k + "'");
        GridSpec g;
        g.x.min = number(doc, "grid_x_min");
        g.x.max = number(doc, "grid_x_max");
        g.y.min = number(doc, "grid_y_min");
        g.y.max = number(doc, "grid_y_max");
        if (has("grid_x_count")) g.x.count = count(doc, "grid_x_count");
        if (has("grid_y_count")) g.y.count = count(doc, "grid_y_count");
        if (has("grid_log_spaced")) g.x.log_spaced = g.y.log_spaced = boolean(doc, "grid_log_spaced");
        c.grid = g;
    }
    if (has("set_mode")) c.set.mode = parse_set_mode(text(doc, "set_mode"));
    if (has("set_draws")) c.set.draws = count(doc, "set_draws");
    if (has("curve_draws")) c.curve_draws = count(doc, "curve_draws");
    if (has("curve_grid")) c.curve_grid = count(doc, "curve_grid");

    if (has("settings")) {
        const auto& v = doc.at("settings");
        if (!v.is_array()) throw ConfigError("config key 'settings' must be an array of setting ids");
        for (const auto& id : v) {
            if (!id.is_number_integer()) throw ConfigError("config key 'settings' must be an array of setting ids");
            c.settings.push_back(id.get<int>());
        }
    }
    if (has("replications")) c.replications = count(doc, "replications");
    if (has("oracle_replications")) c.oracle_replications = count(doc, "oracle_replications");
    if (has("n_a")) c.n_a = count(doc, "n_a");
    if (has("n_b")) c.n_b = count(doc, "n_b");
    if (has("misspecified")) c.misspecified = boolean(doc, "misspecified");
    if (has("study_a_structure")) c.study_a_structure = boolean(doc, "study_a_structure");
    if (has("smoother_preset")) {
        const auto preset = text(doc, "smoother_preset");
        if (preset != "calibrated" && preset != "default")
            throw ConfigError("smoother_preset must be 'calibrated' or 'default'");
        c.calibrated_smoother = preset == "calibrated";
    }
    if (has("simulation_scope")) c.simulation_scope = parse_resample_scope(text(doc, "simulation_scope"));
    validate(c);
    return c;
}

AnalysisConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

void validate(const AnalysisConfig& c) {
    auto require = [](bool ok, const std::string& message) {
        if (!ok) throw ConfigError(message);
    };
    require(c.estimate.draws >= 1, "draws must be >= 1");
    require(c.estimate.alpha > 0.0 && c.estimate.alpha < 1.0, "alpha must lie in (0, 1)");
    require(c.bootstrap.replicates == 0 || c.bootstrap.replicates >= 2, "bootstrap_replicates must be 0 or >= 2");
    require(!c.smoother.bandwidth || *c.smoother.bandwidth > 0.0, "bandwidth must be positive");
    require(c.smoother.rule.scale > 0.0, "bandwidth_scale must be positive");
    require(c.workers >= 1, "workers must be >= 1");
    require(c.curve_grid >= 2, "curve_grid must be >= 2");
    require(c.set.draws >= 1, "set_draws must be >= 1");
    if (c.grid) {
        for (const auto* axis : {&c.grid->x, &c.grid->y}) {
            require(axis->count >= 1, "grid counts must be >= 1");
            require(axis->max >= axis->min, "grid max must not be below grid min");
            require(!axis->log_spaced || axis->min > 0.0, "log-spaced grids need a positive minimum");
        }
    }
    require(c.replications >= 2, "replications must be >= 2");
    require(c.oracle_replications >= 1, "oracle_replications must be >= 1");
    require(c.n_a >= 2 && c.n_b >= 2, "n_a and n_b must be >= 2");
    validate(c.class_spec);
}

json echo(const AnalysisConfig& c) {
    json j;
    if (c.seed) j["seed"] = *c.seed;
    j["class"] = to_string(c.class_spec.family);
    j["sigma2"] = c.class_spec.sigma2;
    j["theta"] = c.class_spec.theta;
    j["sigma_diag"] = c.class_spec.sigma_diag;
    j["period_fractions"] = c.class_spec.period_fractions;
    j["period_convention"] = to_string(c.class_spec.convention);
    j["draws"] = c.estimate.draws;
    j["alpha"] = c.estimate.alpha;
    j["bootstrap_replicates"] = c.bootstrap.replicates;
    j["bootstrap_scope"] = to_string(c.bootstrap.scope);
    j["bootstrap_common_random_numbers"] = c.bootstrap.common_random_numbers;
    if (c.smoother.bandwidth) j["bandwidth"] = *c.smoother.bandwidth;
    j["bandwidth_scale"] = c.smoother.rule.scale;
    j["bandwidth_rate"] = c.smoother.rule.rate;
    if (c.grid) {
        j["grid_x_min"] = c.grid->x.min;
        j["grid_x_max"] = c.grid->x.max;
        j["grid_x_count"] = c.grid->x.count;
        j["grid_y_min"] = c.grid->y.min;
        j["grid_y_max"] = c.grid->y.max;
        j["grid_y_count"] = c.grid->y.count;
        j["grid_log_spaced"] = c.grid->x.log_spaced;
    }
    j["set_mode"] = to_string(c.set.mode);
    j["set_draws"] = c.set.draws;
    j["curve_draws"] = c.curve_draws;
    j["curve_grid"] = c.curve_grid;
    j["settings"] = c.settings;
    j["replications"] = c.replications;
    j["oracle_replications"] = c.oracle_replications;
    j["n_a"] = c.n_a;
    j["n_b"] = c.n_b;
    j["misspecified"] = c.misspecified;
    j["study_a_structure"] = c.study_a_structure;
    j["smoother_preset"] = c.calibrated_smoother ? "calibrated" : "default";
    j["simulation_scope"] = to_string(c.simulation_scope);
    return j;
}

} // namespace spr
