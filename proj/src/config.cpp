#include "bifield/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <string>

#include "bifield/errors.hpp"
#include "bifield/step_distribution.hpp"

namespace bifield {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void bad(const std::string& msg) {
    throw Error(ErrorKind::parse_error, msg);
}

[[noreturn]] void inconsistent(const std::string& msg) {
    throw Error(ErrorKind::validation_error, msg);
}

double need_number(const json& j, const std::string& path) {
    if (!j.is_number()) bad(path + ": expected a number");
    return j.get<double>();
}

long long need_integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) bad(path + ": expected an integer");
    return j.get<long long>();
}

std::string need_string(const json& j, const std::string& path) {
    if (!j.is_string()) bad(path + ": expected a string");
    return j.get<std::string>();
}

std::vector<double> need_number_array(const json& j, const std::string& path) {
    if (!j.is_array()) bad(path + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) bad(path + ": expected an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

// A step law is either the string "simple" (nearest-neighbour walk) or an
// array of {"step": [d ints], "weight": w} entries.
StepDistribution decode_law(const json& j, int dimension, const std::string& path) {
    if (j.is_string()) {
        if (j.get<std::string>() == "simple") return simple_walk(dimension);
        bad(path + ": unknown law name \"" + j.get<std::string>() +
            "\" (use \"simple\" or an entry list)");
    }
    if (!j.is_array()) bad(path + ": expected \"simple\" or an array of entries");
    StepDistribution law;
    law.dimension = dimension;
    for (const auto& entry : j) {
        if (!entry.is_object()) bad(path + ": entries must be objects");
        IntVec step;
        double weight = 0.0;
        bool saw_step = false, saw_weight = false;
        for (const auto& [key, val] : entry.items()) {
            if (key == "step") {
                if (!val.is_array() ||
                    static_cast<int>(val.size()) != dimension)
                    bad(path + ".step: expected " + std::to_string(dimension) +
                        " integer coordinates");
                for (const auto& c : val)
                    step.push_back(static_cast<int>(need_integer(c, path + ".step")));
                saw_step = true;
            } else if (key == "weight") {
                weight = need_number(val, path + ".weight");
                saw_weight = true;
            } else {
                bad("unknown key " + path + "." + key);
            }
        }
        if (!saw_step || !saw_weight)
            bad(path + ": each entry needs both step and weight");
        law.entries.emplace_back(std::move(step), weight);
    }
    return law;  // invariants are checked by model validation
}

// Split rates come as an object keyed by offspring count: {"2": 0.3}.
std::vector<double> decode_split_rates(const json& j, const std::string& path) {
    if (!j.is_object()) bad(path + ": expected an object keyed by offspring count");
    int max_l = 1;
    std::vector<std::pair<int, double>> listed;
    for (const auto& [key, val] : j.items()) {
        bool digits = !key.empty() &&
                      std::all_of(key.begin(), key.end(),
                                  [](unsigned char c) { return std::isdigit(c); });
        if (!digits) bad(path + ": key \"" + key + "\" is not an offspring count");
        int l = std::stoi(key);
        if (l < 2) bad(path + ": offspring count must be at least 2, got " + key);
        listed.emplace_back(l, need_number(val, path + "." + key));
        max_l = std::max(max_l, l);
    }
    std::vector<double> rates(listed.empty() ? 0 : max_l - 1, 0.0);
    for (const auto& [l, r] : listed) rates[l - 2] = r;
    return rates;
}

void decode_model(const json& j, ModelParams& m) {
    if (!j.is_object()) bad("model: expected an object");
    bool jump_given = false, offspring_given = false;
    const int old_dimension = m.dimension;
    if (j.contains("dimension"))
        m.dimension = static_cast<int>(need_integer(j.at("dimension"), "model.dimension"));
    for (const auto& [key, val] : j.items()) {
        if (key == "dimension") {
            continue;  // consumed first so laws know their arity
        } else if (key == "jump_rate") {
            m.jump_rate = need_number(val, "model.jump_rate");
        } else if (key == "jump_law") {
            m.jump_law = decode_law(val, m.dimension, "model.jump_law");
            jump_given = true;
        } else if (key == "death_rate") {
            m.death_rate = need_number(val, "model.death_rate");
        } else if (key == "split_rates") {
            m.split_rates = decode_split_rates(val, "model.split_rates");
        } else if (key == "offspring_law") {
            m.offspring_law = decode_law(val, m.dimension, "model.offspring_law");
            offspring_given = true;
        } else if (key == "immigration_rate") {
            m.immigration_rate = need_number(val, "model.immigration_rate");
        } else if (key == "tail_coeff") {
            m.tail_coeff = need_number(val, "model.tail_coeff");
        } else if (key == "tail_ratio") {
            m.tail_ratio = need_number(val, "model.tail_ratio");
        } else {
            bad("unknown key model." + key);
        }
    }
    // Dimension changed but the laws were left at their defaults: refresh
    // the defaults to the new arity instead of failing validation.
    if (m.dimension != old_dimension) {
        if (!jump_given) m.jump_law = simple_walk(m.dimension);
        if (!offspring_given) m.offspring_law = simple_walk(m.dimension);
    }
}

void decode_sim(const json& j, SimSettings& s) {
    if (!j.is_object()) bad("sim: expected an object");
    for (const auto& [key, val] : j.items()) {
        if (key == "torus_side")
            s.torus_side = static_cast<int>(need_integer(val, "sim.torus_side"));
        else if (key == "t_max")
            s.t_max = need_number(val, "sim.t_max");
        else if (key == "record_times")
            s.record_times = need_number_array(val, "sim.record_times");
        else if (key == "replicates")
            s.replicates = need_integer(val, "sim.replicates");
        else
            bad("unknown key sim." + key);
    }
}

void decode_hierarchy(const json& j, HierarchySettings& h) {
    if (!j.is_object()) bad("hierarchy: expected an object");
    for (const auto& [key, val] : j.items()) {
        if (key == "torus_side")
            h.torus_side = static_cast<int>(need_integer(val, "hierarchy.torus_side"));
        else if (key == "max_order")
            h.max_order = static_cast<int>(need_integer(val, "hierarchy.max_order"));
        else if (key == "t_max")
            h.t_max = need_number(val, "hierarchy.t_max");
        else if (key == "steps")
            h.steps = static_cast<int>(need_integer(val, "hierarchy.steps"));
        else
            bad("unknown key hierarchy." + key);
    }
}

void decode_cumulants(const json& j, CumulantSettings& c) {
    if (!j.is_object()) bad("cumulants: expected an object");
    for (const auto& [key, val] : j.items()) {
        if (key == "max_order")
            c.max_order = static_cast<int>(need_integer(val, "cumulants.max_order"));
        else if (key == "tol")
            c.tol = need_number(val, "cumulants.tol");
        else if (key == "torus_side")
            c.torus_side = static_cast<int>(need_integer(val, "cumulants.torus_side"));
        else if (key == "initial_horizon")
            c.initial_horizon = need_number(val, "cumulants.initial_horizon");
        else if (key == "max_doublings")
            c.max_doublings = static_cast<int>(need_integer(val, "cumulants.max_doublings"));
        else
            bad("unknown key cumulants." + key);
    }
}

void decode_oracle(const json& j, OracleSettings& o) {
    if (!j.is_object()) bad("oracle: expected an object");
    for (const auto& [key, val] : j.items()) {
        if (key == "torus_side")
            o.torus_side = static_cast<int>(need_integer(val, "oracle.torus_side"));
        else if (key == "cap")
            o.cap = static_cast<int>(need_integer(val, "oracle.cap"));
        else if (key == "times")
            o.times = need_number_array(val, "oracle.times");
        else if (key == "replicates")
            o.replicates = need_integer(val, "oracle.replicates");
        else
            bad("unknown key oracle." + key);
    }
}

void decode_top(const json& doc, ExperimentConfig& cfg) {
    if (!doc.is_object()) bad("top level: expected an object");
    for (const auto& [key, val] : doc.items()) {
        if (key == "model")
            decode_model(val, cfg.model);
        else if (key == "sim")
            decode_sim(val, cfg.sim);
        else if (key == "hierarchy")
            decode_hierarchy(val, cfg.hierarchy);
        else if (key == "cumulants")
            decode_cumulants(val, cfg.cumulants);
        else if (key == "oracle")
            decode_oracle(val, cfg.oracle);
        else if (key == "output_dir")
            cfg.output_dir = need_string(val, "output_dir");
        else if (key == "seed") {
            long long s = need_integer(val, "seed");
            if (s < 0) bad("seed: expected a nonnegative integer");
            cfg.seed = static_cast<std::uint64_t>(s);
        } else {
            bad("unknown key " + key);
        }
    }
}

void resolve_and_check(ExperimentConfig& cfg) {
    if (cfg.sim.record_times.empty()) cfg.sim.record_times = {cfg.sim.t_max};
    double last_record = 0.0;
    for (double t : cfg.sim.record_times) {
        if (!(t >= 0.0)) inconsistent("sim.record_times: times must be nonnegative");
        last_record = std::max(last_record, t);
    }
    if (cfg.sim.t_max < last_record)
        inconsistent("sim.t_max is shorter than the last record time");
    if (cfg.hierarchy.t_max < last_record)
        inconsistent("hierarchy.t_max is shorter than the last record time");
    if (cfg.sim.replicates < 0) inconsistent("sim.replicates must be nonnegative");
    if (cfg.hierarchy.steps < 1) inconsistent("hierarchy.steps must be at least 1");
    if (cfg.hierarchy.max_order < 1) inconsistent("hierarchy.max_order must be at least 1");
    if (!(cfg.hierarchy.t_max > 0.0)) inconsistent("hierarchy.t_max must be positive");
    if (cfg.cumulants.max_order < 1) inconsistent("cumulants.max_order must be at least 1");
    if (!(cfg.cumulants.tol > 0.0)) inconsistent("cumulants.tol must be positive");
    if (cfg.cumulants.max_doublings < 0)
        inconsistent("cumulants.max_doublings must be nonnegative");
    if (cfg.oracle.replicates < 0) inconsistent("oracle.replicates must be nonnegative");
    for (double t : cfg.oracle.times)
        if (!(t >= 0.0)) inconsistent("oracle.times: times must be nonnegative");
    validate(cfg.model);  // surfaces subcriticality and law defects
}

// Walk a dotted path creating objects along the way.  A numeric token is
// treated as an object key ("model.split_rates.2") unless the node already
// is an array, where it indexes an element ("sim.record_times.0").
void set_by_path(json& doc, const std::string& spec) {
    std::size_t eq = spec.find('=');
    if (eq == std::string::npos || eq == 0)
        throw Error(ErrorKind::usage_error,
                    "override must look like path=value, got \"" + spec + "\"");
    std::string path = spec.substr(0, eq);
    std::string text = spec.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::exception&) {
        value = text;  // not a JSON literal: keep as string
    }

    std::vector<std::string> tokens;
    std::size_t start = 0;
    while (true) {
        std::size_t dot = path.find('.', start);
        tokens.push_back(path.substr(start, dot - start));
        if (tokens.back().empty())
            throw Error(ErrorKind::usage_error,
                        "override path has an empty segment: \"" + spec + "\"");
        if (dot == std::string::npos) break;
        start = dot + 1;
    }

    json* node = &doc;
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        if (node->is_array()) {
            std::size_t idx = 0;
            try {
                idx = std::stoul(tokens[i]);
            } catch (...) {
                throw Error(ErrorKind::usage_error,
                            "cannot index an array with \"" + tokens[i] + "\"");
            }
            if (idx >= node->size())
                throw Error(ErrorKind::usage_error,
                            "array index out of range in \"" + spec + "\"");
            node = &(*node)[idx];
        } else {
            if (node->is_null()) *node = json::object();
            if (!node->is_object())
                throw Error(ErrorKind::usage_error,
                            "cannot apply override \"" + spec + "\"");
            node = &(*node)[tokens[i]];
        }
    }
    const std::string& leaf = tokens.back();
    if (node->is_array()) {
        std::size_t idx = 0;
        try {
            idx = std::stoul(leaf);
        } catch (...) {
            throw Error(ErrorKind::usage_error,
                        "cannot index an array with \"" + leaf + "\"");
        }
        if (idx >= node->size())
            throw Error(ErrorKind::usage_error,
                        "array index out of range in \"" + spec + "\"");
        (*node)[idx] = value;
    } else {
        if (node->is_null()) *node = json::object();
        if (!node->is_object())
            throw Error(ErrorKind::usage_error,
                        "cannot apply override \"" + spec + "\"");
        (*node)[leaf] = value;
    }
}

json apply_overrides(json doc, const std::vector<std::string>& overrides) {
    for (const std::string& s : overrides) set_by_path(doc, s);
    return doc;
}

ordered_json law_to_json(const StepDistribution& law) {
    ordered_json entries = ordered_json::array();
    for (const auto& [step, weight] : law.entries) {
        ordered_json e;
        e["step"] = step;
        e["weight"] = weight;
        entries.push_back(std::move(e));
    }
    return entries;
}

}  // namespace

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    cfg.model.dimension = 1;
    cfg.model.jump_rate = 1.0;
    cfg.model.jump_law = simple_walk(1);
    cfg.model.death_rate = 1.0;
    cfg.model.split_rates = {0.3};
    cfg.model.offspring_law = simple_walk(1);
    cfg.model.immigration_rate = 0.1;
    cfg.model.tail_coeff = 1.0;
    cfg.model.tail_ratio = 0.6;
    return cfg;
}

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::vector<std::string>& overrides) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        bad(std::string("config is not valid JSON: ") + e.what());
    }
    doc = apply_overrides(std::move(doc), overrides);
    ExperimentConfig cfg = default_config();
    decode_top(doc, cfg);
    resolve_and_check(cfg);
    return cfg;
}

ExperimentConfig parse_config(const std::string& path,
                              const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::usage_error, "cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), overrides);
}

std::string config_to_json(const ExperimentConfig& cfg) {
    ordered_json doc;
    ordered_json model;
    model["dimension"] = cfg.model.dimension;
    model["jump_rate"] = cfg.model.jump_rate;
    model["jump_law"] = law_to_json(cfg.model.jump_law);
    model["death_rate"] = cfg.model.death_rate;
    ordered_json splits = ordered_json::object();
    for (std::size_t i = 0; i < cfg.model.split_rates.size(); ++i)
        if (cfg.model.split_rates[i] != 0.0)
            splits[std::to_string(i + 2)] = cfg.model.split_rates[i];
    model["split_rates"] = std::move(splits);
    model["offspring_law"] = law_to_json(cfg.model.offspring_law);
    model["immigration_rate"] = cfg.model.immigration_rate;
    model["tail_coeff"] = cfg.model.tail_coeff;
    model["tail_ratio"] = cfg.model.tail_ratio;
    doc["model"] = std::move(model);
    doc["sim"] = {{"torus_side", cfg.sim.torus_side},
                  {"t_max", cfg.sim.t_max},
                  {"record_times", cfg.sim.record_times},
                  {"replicates", cfg.sim.replicates}};
    doc["hierarchy"] = {{"torus_side", cfg.hierarchy.torus_side},
                        {"max_order", cfg.hierarchy.max_order},
                        {"t_max", cfg.hierarchy.t_max},
                        {"steps", cfg.hierarchy.steps}};
    doc["cumulants"] = {{"max_order", cfg.cumulants.max_order},
                        {"tol", cfg.cumulants.tol},
                        {"torus_side", cfg.cumulants.torus_side},
                        {"initial_horizon", cfg.cumulants.initial_horizon},
                        {"max_doublings", cfg.cumulants.max_doublings}};
    doc["oracle"] = {{"torus_side", cfg.oracle.torus_side},
                     {"cap", cfg.oracle.cap},
                     {"times", cfg.oracle.times},
                     {"replicates", cfg.oracle.replicates}};
    doc["output_dir"] = cfg.output_dir;
    doc["seed"] = cfg.seed;
    return doc.dump(2) + "\n";
}

}  // namespace bifield
