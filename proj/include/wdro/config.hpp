/**
 * @file config.hpp
 * @brief JSON experiment configuration: defaults, dotted-key overrides, validation.
 *
 * Every accepted key appears in default_config(); anything else is rejected
 * with its dotted path. Validation errors are config_error naming the key.
 */
#pragma once

#include <wdro/errors.hpp>
#include <wdro/field_grid.hpp>
#include <wdro/functions.hpp>
#include <wdro/operators.hpp>
#include <wdro/pde_solver.hpp>
#include <wdro/reference_models.hpp>
#include <wdro/validation.hpp>

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace wdro {

using json = nlohmann::json;

/// The full default document; its key set is the accepted schema.
inline json default_config()
{
    return json::parse(R"({
  "model": {
    "family": "brownian_drift",
    "actions": [ { "label": "a0", "b": [0.0], "sigma": [[1.0]] } ]
  },
  "ambiguity": { "m": 0.5, "p": 2.0 },
  "grid": {
    "dim": 1, "lo": [-8.0], "hi": [8.0], "n": [513],
    "window": { "lo": [-4.0], "hi": [4.0] }
  },
  "numerics": {
    "quad_order": 16, "dual_tol": 1e-10, "reach_factor": 4.0, "candidate_density": 4,
    "stop_tol": 1e-3, "max_level": 8, "cfl_safety": 0.9, "dt": 0.0
  },
  "experiment": {
    "name": "default",
    "function": "tanh",
    "horizon": 0.5,
    "t_list": [0.2, 0.1, 0.05, 0.025],
    "pairs": [[0.25, 0.25], [0.5, 0.25]],
    "trials": 100,
    "dual_trials": 200,
    "seed": 7,
    "snapshot_times": [],
    "oracle": "none",
    "thresholds": {
      "dual_oracle": 1e-6,
      "contraction": 1e-9,
      "lipschitz_slack_factor": 10.0,
      "refinement": 1e-8,
      "sensitivity_final_factor": 0.05,
      "sensitivity_monotone_slack": 0.1,
      "generator_factor": 0.1,
      "generator_monotone_slack": 0.1,
      "semigroup_factor": 5.0,
      "heat": 5e-3,
      "cdf": 1e-2,
      "crosscheck": 2e-2,
      "dominance": 1e-8,
      "certificate_fraction": 0.5
    }
  },
  "output": { "directory": "out", "formats": ["json", "csv"] }
})");
}

namespace detail {

inline const std::set<std::string>& action_keys()
{
    static const std::set<std::string> keys{"label", "b", "sigma", "theta", "kappa"};
    return keys;
}

// Rejects keys of `doc` that do not appear in `schema`; arrays of actions are
// checked against the action key set.
inline void check_keys(const json& doc, const json& schema, const std::string& path)
{
    if (!doc.is_object()) {
        return;
    }
    for (const auto& [key, value] : doc.items()) {
        const std::string here = path.empty() ? key : path + "." + key;
        if (!schema.contains(key)) {
            throw config_error("unknown config key '" + here + "'");
        }
        if (here == "model.actions") {
            if (!value.is_array()) {
                throw config_error("model.actions: must be an array");
            }
            for (std::size_t i = 0; i < value.size(); ++i) {
                if (!value[i].is_object()) {
                    throw config_error("model.actions." + std::to_string(i) + ": must be an object");
                }
                for (const auto& [ak, av] : value[i].items()) {
                    (void)av;
                    if (!action_keys().count(ak)) {
                        throw config_error("unknown config key 'model.actions." + std::to_string(i) +
                                           "." + ak + "'");
                    }
                }
            }
            continue;
        }
        if (value.is_object()) {
            check_keys(value, schema.at(key), here);
        }
    }
}

// Recursive object merge; arrays and scalars are replaced.
inline void merge_into(json& base, const json& patch)
{
    for (const auto& [key, value] : patch.items()) {
        if (value.is_object() && base.contains(key) && base[key].is_object()) {
            merge_into(base[key], value);
        } else {
            base[key] = value;
        }
    }
}

inline std::vector<std::string> split_path(const std::string& path)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : path) {
        if (c == '.') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

template <typename T>
T get(const json& doc, const std::string& path)
{
    const json* node = &doc;
    for (const auto& part : split_path(path)) {
        if (node->is_array()) {
            node = &node->at(std::stoul(part));
        } else {
            if (!node->contains(part)) {
                throw config_error(path + ": missing");
            }
            node = &node->at(part);
        }
    }
    try {
        return node->get<T>();
    } catch (const json::exception&) {
        throw config_error(path + ": wrong type");
    }
}

inline void check(bool cond, const std::string& key, const std::string& rule)
{
    if (!cond) {
        throw config_error(key + ": " + rule);
    }
}

inline Matrix matrix_from(const json& j, int dim, const std::string& key)
{
    check(j.is_array() && static_cast<int>(j.size()) == dim, key,
          "must be a " + std::to_string(dim) + "x" + std::to_string(dim) + " matrix");
    Matrix m(dim, dim);
    for (int r = 0; r < dim; ++r) {
        check(j[r].is_array() && static_cast<int>(j[r].size()) == dim, key,
              "must be a " + std::to_string(dim) + "x" + std::to_string(dim) + " matrix");
        for (int c = 0; c < dim; ++c) {
            check(j[r][c].is_number(), key, "entries must be numbers");
            m(r, c) = j[r][c].get<double>();
        }
    }
    return m;
}

inline Point vector_from(const json& j, int dim, const std::string& key)
{
    check(j.is_array() && static_cast<int>(j.size()) == dim, key,
          "must be a vector of length " + std::to_string(dim));
    Point p(dim);
    for (int k = 0; k < dim; ++k) {
        check(j[k].is_number(), key, "entries must be numbers");
        p[k] = j[k].get<double>();
    }
    return p;
}

} // namespace detail

/// Resolved configuration (defaults + file + overrides) with typed accessors.
class ExperimentConfig {
public:
    explicit ExperimentConfig(json doc = json::object())
    {
        doc_ = default_config();
        detail::check_keys(doc, doc_, "");
        detail::merge_into(doc_, doc);
        validate();
    }

    static ExperimentConfig load(const std::string& path)
    {
        std::ifstream in(path);
        if (!in) {
            throw config_error("cannot open config file '" + path + "'");
        }
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::parse_error& e) {
            throw config_error("config parse error in '" + path + "': " + e.what());
        }
        if (!doc.is_object()) {
            throw config_error("config root must be an object");
        }
        return ExperimentConfig(std::move(doc));
    }

    /// Applies `key=value`; the value is parsed as JSON, falling back to a string.
    void set(const std::string& assignment)
    {
        const auto eq = assignment.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw config_error("override '" + assignment + "' must look like key=value");
        }
        const std::string key = assignment.substr(0, eq);
        const std::string text = assignment.substr(eq + 1);
        json value;
        try {
            value = json::parse(text);
        } catch (const json::parse_error&) {
            value = text;
        }
        const json previous = doc_;
        json* node = &doc_;
        const auto parts = detail::split_path(key);
        for (std::size_t i = 0; i < parts.size(); ++i) {
            const std::string& part = parts[i];
            const bool last = i + 1 == parts.size();
            if (node->is_array()) {
                std::size_t idx = 0;
                try {
                    idx = std::stoul(part);
                } catch (const std::exception&) {
                    throw config_error("unknown config key '" + key + "'");
                }
                if (idx >= node->size()) {
                    throw config_error(key + ": index out of range");
                }
                node = &(*node)[idx];
            } else if (node->is_object()) {
                const bool in_action = key.rfind("model.actions.", 0) == 0 && i == 3;
                if (!node->contains(part) && !(in_action && detail::action_keys().count(part))) {
                    throw config_error("unknown config key '" + key + "'");
                }
                node = &(*node)[part];
            } else {
                throw config_error("unknown config key '" + key + "'");
            }
            if (last) {
                *node = value;
            }
        }
        try {
            validate();
        } catch (...) {
            doc_ = previous;
            throw;
        }
    }

    const json& doc() const { return doc_; }

    template <typename T>
    T get(const std::string& path) const
    {
        return detail::get<T>(doc_, path);
    }

    int dim() const { return get<int>("grid.dim"); }

    ReferenceModel model() const
    {
        const std::string fam = get<std::string>("model.family");
        const ModelFamily family =
            fam == "brownian_drift" ? ModelFamily::BrownianDrift : ModelFamily::OrnsteinUhlenbeck;
        const int d = dim();
        std::vector<Action> acts;
        const json& list = doc_.at("model").at("actions");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const json& a = list[i];
            const std::string key = "model.actions." + std::to_string(i);
            Action act;
            act.label = a.value("label", "a" + std::to_string(i));
            detail::check(a.contains("sigma"), key + ".sigma", "missing");
            act.sigma = detail::matrix_from(a.at("sigma"), d, key + ".sigma");
            if (family == ModelFamily::BrownianDrift) {
                detail::check(a.contains("b"), key + ".b", "missing");
                act.b = detail::vector_from(a.at("b"), d, key + ".b");
            } else {
                detail::check(a.contains("theta"), key + ".theta", "missing");
                detail::check(a.contains("kappa"), key + ".kappa", "missing");
                act.theta = detail::matrix_from(a.at("theta"), d, key + ".theta");
                act.kappa = detail::vector_from(a.at("kappa"), d, key + ".kappa");
            }
            acts.push_back(std::move(act));
        }
        try {
            return ReferenceModel(family, std::move(acts));
        } catch (const model_error& e) {
            throw config_error(std::string("model: ") + e.what());
        }
    }

    AmbiguitySpec ambiguity() const
    {
        return AmbiguitySpec{get<double>("ambiguity.m"), get<double>("ambiguity.p")};
    }

    Grid grid() const
    {
        return Grid(get<std::vector<double>>("grid.lo"), get<std::vector<double>>("grid.hi"),
                    get<std::vector<int>>("grid.n"));
    }

    CompactWindow window() const
    {
        return CompactWindow{get<std::vector<double>>("grid.window.lo"),
                             get<std::vector<double>>("grid.window.hi")};
    }

    OperatorConfig operator_config() const
    {
        return OperatorConfig{model(),
                              ambiguity(),
                              grid(),
                              get<int>("numerics.quad_order"),
                              get<double>("numerics.dual_tol"),
                              get<double>("numerics.reach_factor"),
                              get<int>("numerics.candidate_density")};
    }

    LimitOptions limit_options() const
    {
        return LimitOptions{get<int>("numerics.max_level"), get<double>("numerics.stop_tol")};
    }

    PdeScheme scheme() const
    {
        return PdeScheme{get<double>("numerics.dt"), get<double>("numerics.cfl_safety")};
    }

    std::uint64_t seed() const { return get<std::uint64_t>("experiment.seed"); }

    double threshold(const std::string& name) const
    {
        return get<double>("experiment.thresholds." + name);
    }

    /// Acceptance-suite settings: grid and numerics from this config, thresholds from experiment.thresholds.
    AcceptanceSettings acceptance_settings() const
    {
        AcceptanceSettings s;
        s.grid = grid();
        s.window = window();
        s.quad_order = get<int>("numerics.quad_order");
        s.p = get<double>("ambiguity.p");
        s.dual_tol = get<double>("numerics.dual_tol");
        s.reach_factor = get<double>("numerics.reach_factor");
        s.candidate_density = get<int>("numerics.candidate_density");
        s.limit = limit_options();
        s.cfl_safety = get<double>("numerics.cfl_safety");
        s.seed = seed();
        s.dual_trials = get<int>("experiment.dual_trials");
        s.property_trials = get<int>("experiment.trials");
        s.dual_tolerance = threshold("dual_oracle");
        s.contraction_tolerance = threshold("contraction");
        s.lipschitz_slack_factor = threshold("lipschitz_slack_factor");
        s.refinement_tolerance = threshold("refinement");
        s.sensitivity_final = threshold("sensitivity_final_factor");
        s.sensitivity_slack = threshold("sensitivity_monotone_slack");
        s.generator_factor = threshold("generator_factor");
        s.semigroup_tolerance = threshold("semigroup_factor") * s.limit.stop_tol;
        s.heat_tolerance = threshold("heat");
        s.cdf_tolerance = threshold("cdf");
        s.game_tolerance = threshold("crosscheck");
        s.dominance_tolerance = threshold("dominance");
        s.certificate_fraction = threshold("certificate_fraction");
        return s;
    }

private:
    void validate() const
    {
        using detail::check;
        try {
            const std::string fam = get<std::string>("model.family");
            check(fam == "brownian_drift" || fam == "ornstein_uhlenbeck", "model.family",
                  "must be 'brownian_drift' or 'ornstein_uhlenbeck'");
            check(doc_.at("model").at("actions").is_array() &&
                      !doc_.at("model").at("actions").empty(),
                  "model.actions", "must be a nonempty array");

            const double m = get<double>("ambiguity.m");
            check(std::isfinite(m) && m >= 0.0, "ambiguity.m", "must be >= 0");
            const double p = get<double>("ambiguity.p");
            check(std::isfinite(p) && p > 1.0, "ambiguity.p", "must be > 1");

            const int d = dim();
            check(d == 1 || d == 2, "grid.dim", "must be 1 or 2");
            const auto lo = get<std::vector<double>>("grid.lo");
            const auto hi = get<std::vector<double>>("grid.hi");
            const auto n = get<std::vector<int>>("grid.n");
            check(static_cast<int>(lo.size()) == d, "grid.lo", "needs one entry per axis");
            check(static_cast<int>(hi.size()) == d, "grid.hi", "needs one entry per axis");
            check(static_cast<int>(n.size()) == d, "grid.n", "needs one entry per axis");
            for (int k = 0; k < d; ++k) {
                check(lo[k] < hi[k], "grid.hi", "must exceed grid.lo on every axis");
                check(n[k] >= 8, "grid.n", "must be >= 8 on every axis");
            }
            try {
                window().validate(grid());
            } catch (const input_error& e) {
                throw config_error(std::string("grid.window: ") + e.what());
            }

            const int q = get<int>("numerics.quad_order");
            check(q >= 4 && q <= 64, "numerics.quad_order", "must lie in [4, 64]");
            check(get<double>("numerics.dual_tol") > 0.0, "numerics.dual_tol", "must be > 0");
            check(get<double>("numerics.reach_factor") >= 1.0, "numerics.reach_factor",
                  "must be >= 1");
            check(get<int>("numerics.candidate_density") >= 1, "numerics.candidate_density",
                  "must be >= 1");
            check(get<double>("numerics.stop_tol") > 0.0, "numerics.stop_tol", "must be > 0");
            const int ml = get<int>("numerics.max_level");
            check(ml >= 0 && ml <= 10, "numerics.max_level", "must lie in [0, 10]");
            const double cfl = get<double>("numerics.cfl_safety");
            check(cfl > 0.0 && cfl <= 1.0, "numerics.cfl_safety", "must lie in (0, 1]");
            check(get<double>("numerics.dt") >= 0.0, "numerics.dt", "must be >= 0 (0 = automatic)");

            const std::string fn = get<std::string>("experiment.function");
            const auto& names = test_function_names();
            check(std::find(names.begin(), names.end(), fn) != names.end(), "experiment.function",
                  "unknown test function '" + fn + "'");
            const double horizon = get<double>("experiment.horizon");
            check(horizon >= 0.0 && horizon <= 1.0, "experiment.horizon", "must lie in [0, 1]");
            for (double t : get<std::vector<double>>("experiment.t_list")) {
                check(t > 0.0, "experiment.t_list", "entries must be positive");
            }
            for (const auto& pr : get<std::vector<std::vector<double>>>("experiment.pairs")) {
                check(pr.size() == 2 && pr[0] >= 0.0 && pr[1] >= 0.0 && pr[0] + pr[1] <= 1.0,
                      "experiment.pairs", "entries must be [s, t] with s, t >= 0 and s + t <= 1");
            }
            check(get<int>("experiment.trials") >= 1, "experiment.trials", "must be >= 1");
            check(get<int>("experiment.dual_trials") >= 1, "experiment.dual_trials",
                  "must be >= 1");
            for (double t : get<std::vector<double>>("experiment.snapshot_times")) {
                check(t >= 0.0 && t <= horizon, "experiment.snapshot_times",
                      "entries must lie in [0, horizon]");
            }
            const std::string oracle = get<std::string>("experiment.oracle");
            check(oracle == "none" || oracle == "heat" || oracle == "monotone_cdf",
                  "experiment.oracle", "must be 'none', 'heat' or 'monotone_cdf'");
            for (const auto& [k, v] : doc_.at("experiment").at("thresholds").items()) {
                check(v.is_number() && v.get<double>() >= 0.0, "experiment.thresholds." + k,
                      "must be a number >= 0");
            }
            for (const auto& f : get<std::vector<std::string>>("output.formats")) {
                check(f == "json" || f == "csv", "output.formats", "entries must be 'json' or 'csv'");
            }
            get<std::string>("output.directory");
            get<std::string>("experiment.name");
            model();
        } catch (const json::exception& e) {
            throw config_error(std::string("config: ") + e.what());
        }
    }

    json doc_;
};

} // namespace wdro
