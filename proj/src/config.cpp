#include "remest/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "remest/errors.hpp"

namespace remest::config {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ConfigError(path + ": " + msg);
}

std::string join_path(const std::string& parent, const char* key) {
    return parent.empty() ? std::string(key) : parent + "." + key;
}

const json& member(const json& j, const std::string& path, const char* key) {
    if (!j.is_object()) fail(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) fail(path, std::string("missing required field '") + key + "'");
    return *it;
}

const json* optional_member(const json& j, const std::string& path, const char* key) {
    if (!j.is_object()) fail(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return nullptr;
    return &*it;
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> known) {
    if (!j.is_object()) fail(path, "expected an object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : known) {
            if (item.key() == k) {
                ok = true;
                break;
            }
        }
        if (!ok) fail(join_path(path, item.key().c_str()), "unknown field");
    }
}

double as_double(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

long long as_int(const json& j, const std::string& path) {
    if (!j.is_number_integer() && !j.is_number_unsigned()) fail(path, "expected an integer");
    return j.get<long long>();
}

std::uint64_t as_u64(const json& j, const std::string& path) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<long long>() >= 0) {
        return static_cast<std::uint64_t>(j.get<long long>());
    }
    fail(path, "expected a non-negative integer");
}

std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

std::vector<double> as_double_vector(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(as_double(j[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
}

std::vector<std::vector<double>> as_matrix(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of rows");
    std::vector<std::vector<double>> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(as_double_vector(j[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
}

model::NoiseSpec parse_noise(const json& j, const std::string& path) {
    check_keys(j, path, {"type", "sigma", "support", "pmf"});
    const std::string type = as_string(member(j, path, "type"), join_path(path, "type"));
    if (type == "gaussian") {
        return model::NoiseSpec::make_gaussian(
            as_double(member(j, path, "sigma"), join_path(path, "sigma")));
    }
    if (type == "discrete") {
        const json& sup = member(j, path, "support");
        const std::string sup_path = join_path(path, "support");
        if (!sup.is_array()) fail(sup_path, "expected an array of integers");
        std::vector<int> support;
        support.reserve(sup.size());
        for (std::size_t i = 0; i < sup.size(); ++i) {
            support.push_back(
                static_cast<int>(as_int(sup[i], sup_path + "[" + std::to_string(i) + "]")));
        }
        auto pmf = as_double_vector(member(j, path, "pmf"), join_path(path, "pmf"));
        return model::NoiseSpec::make_discrete(std::move(support), std::move(pmf));
    }
    fail(join_path(path, "type"), "expected \"gaussian\" or \"discrete\", got \"" + type + "\"");
}

model::DistortionSpec parse_distortion(const json& j, const std::string& path) {
    check_keys(j, path, {"type", "p", "knots", "values"});
    const std::string type = as_string(member(j, path, "type"), join_path(path, "type"));
    if (type == "power") {
        return model::DistortionSpec::make_power(
            as_double(member(j, path, "p"), join_path(path, "p")));
    }
    if (type == "custom") {
        return model::DistortionSpec::make_custom(
            as_double_vector(member(j, path, "knots"), join_path(path, "knots")),
            as_double_vector(member(j, path, "values"), join_path(path, "values")));
    }
    fail(join_path(path, "type"), "expected \"power\" or \"custom\", got \"" + type + "\"");
}

MultiChannelConfig parse_multichannel(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of {lambda, p} pairs");
    MultiChannelConfig mc;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string entry_path = path + "[" + std::to_string(i) + "]";
        check_keys(j[i], entry_path, {"lambda", "p"});
        mc.lambda.push_back(
            as_double(member(j[i], entry_path, "lambda"), join_path(entry_path, "lambda")));
        mc.drop.push_back(as_double(member(j[i], entry_path, "p"), join_path(entry_path, "p")));
    }
    const auto issues = validate_multichannel(mc);
    if (!issues.empty()) {
        std::string joined;
        for (const auto& s : issues) {
            if (!joined.empty()) joined += "; ";
            joined += s;
        }
        fail(path, joined);
    }
    return mc;
}

model::ChannelSpec parse_channel(const json& j, const std::string& path) {
    if (const json* multi = optional_member(j, path, "multi")) {
        check_keys(j, path, {"multi"});
        return expand_multichannel(parse_multichannel(*multi, join_path(path, "multi")));
    }
    check_keys(j, path, {"Q", "p", "lambda", "power_levels"});
    model::ChannelSpec ch;
    ch.Q = as_matrix(member(j, path, "Q"), join_path(path, "Q"));
    ch.num_states = static_cast<int>(ch.Q.size());
    const std::string q_path = join_path(path, "Q");
    if (ch.Q.empty()) fail(q_path, "expected at least one row");
    for (std::size_t s = 0; s < ch.Q.size(); ++s) {
        if (ch.Q[s].size() != ch.Q.size()) {
            fail(q_path, "must be square: row " + std::to_string(s) + " has " +
                             std::to_string(ch.Q[s].size()) + " entries but there are " +
                             std::to_string(ch.Q.size()) + " rows");
        }
    }
    ch.drop = as_matrix(member(j, path, "p"), join_path(path, "p"));
    if (ch.drop.size() != ch.Q.size()) {
        fail(join_path(path, "p"), "expected one row per channel state (" +
                                       std::to_string(ch.Q.size()) + "), got " +
                                       std::to_string(ch.drop.size()));
    }
    ch.tx_cost = as_double_vector(member(j, path, "lambda"), join_path(path, "lambda"));
    if (const json* levels = optional_member(j, path, "power_levels")) {
        ch.power_levels = as_double_vector(*levels, join_path(path, "power_levels"));
    } else {
        ch.power_levels.resize(ch.tx_cost.size());
        for (std::size_t i = 0; i < ch.power_levels.size(); ++i) {
            ch.power_levels[i] = static_cast<double>(i);
        }
    }
    return ch;
}

model::ModelSpec parse_model(const json& j, const std::string& path, bool channel_only) {
    check_keys(j, path, {"a", "noise", "channel", "distortion", "beta", "reference_state"});
    model::ModelSpec m;
    m.channel = parse_channel(member(j, path, "channel"), join_path(path, "channel"));
    if (channel_only) {
        // Estimation workflows over a finite alphabet ignore the continuous
        // source; benign defaults keep the whole spec valid.
        m.source.a = 1.0;
        m.source.noise = model::NoiseSpec::make_gaussian(1.0);
        m.cost.distortion = model::DistortionSpec::make_power(2.0);
        m.cost.beta = 0.9;
    } else {
        m.source.a = as_double(member(j, path, "a"), join_path(path, "a"));
        m.source.noise = parse_noise(member(j, path, "noise"), join_path(path, "noise"));
        m.cost.distortion =
            parse_distortion(member(j, path, "distortion"), join_path(path, "distortion"));
        m.cost.beta = as_double(member(j, path, "beta"), join_path(path, "beta"));
    }
    if (const json* ref = optional_member(j, path, "reference_state")) {
        m.reference_state = static_cast<int>(as_int(*ref, join_path(path, "reference_state")));
    }
    return m;
}

model::ThresholdPolicy parse_policy(const json& j, const std::string& path) {
    model::ThresholdPolicy k;
    k.k = as_matrix(j, path);
    return k;
}

void parse_sim(const json& j, const std::string& path, sim::SimConfig& out) {
    check_keys(j, path, {"N", "max_cycle_len", "discount_cutoff"});
    out.n_cycles = as_int(member(j, path, "N"), join_path(path, "N"));
    if (const json* v = optional_member(j, path, "max_cycle_len")) {
        out.max_cycle_len = as_int(*v, join_path(path, "max_cycle_len"));
    }
    if (const json* v = optional_member(j, path, "discount_cutoff")) {
        out.discount_cutoff = as_double(*v, join_path(path, "discount_cutoff"));
    }
}

void parse_rmc(const json& j, const std::string& path, rmc::RmcConfig& out) {
    check_keys(j, path,
               {"iterations", "N", "c", "perturb", "alpha", "beta1", "beta2", "epsilon", "k_max",
                "max_cycle_len", "discount_cutoff"});
    out.iterations = as_int(member(j, path, "iterations"), join_path(path, "iterations"));
    out.n_cycles_per_estimate = as_int(member(j, path, "N"), join_path(path, "N"));
    out.perturb_scale = as_double(member(j, path, "c"), join_path(path, "c"));
    if (const json* v = optional_member(j, path, "perturb")) {
        const std::string name = as_string(*v, join_path(path, "perturb"));
        if (name == "normal") {
            out.perturb_dist = rmc::PerturbDist::normal;
        } else if (name == "rademacher") {
            out.perturb_dist = rmc::PerturbDist::rademacher;
        } else {
            fail(join_path(path, "perturb"),
                 "expected \"normal\" or \"rademacher\", got \"" + name + "\"");
        }
    }
    if (const json* v = optional_member(j, path, "alpha")) {
        out.adam.alpha = as_double(*v, join_path(path, "alpha"));
    }
    if (const json* v = optional_member(j, path, "beta1")) {
        out.adam.beta1 = as_double(*v, join_path(path, "beta1"));
    }
    if (const json* v = optional_member(j, path, "beta2")) {
        out.adam.beta2 = as_double(*v, join_path(path, "beta2"));
    }
    if (const json* v = optional_member(j, path, "epsilon")) {
        out.adam.epsilon = as_double(*v, join_path(path, "epsilon"));
    }
    if (const json* v = optional_member(j, path, "k_max")) {
        out.k_max = as_double(*v, join_path(path, "k_max"));
    }
    if (const json* v = optional_member(j, path, "max_cycle_len")) {
        out.max_cycle_len = as_int(*v, join_path(path, "max_cycle_len"));
    }
    if (const json* v = optional_member(j, path, "discount_cutoff")) {
        out.discount_cutoff = as_double(*v, join_path(path, "discount_cutoff"));
    }
}

void parse_dp(const json& j, const std::string& path, DpParams& out) {
    check_keys(j, path,
               {"e_max", "n_points", "noise_truncation", "tolerance", "max_iterations", "horizon"});
    if (const json* v = optional_member(j, path, "e_max")) {
        out.grid.e_max = as_double(*v, join_path(path, "e_max"));
    }
    if (const json* v = optional_member(j, path, "n_points")) {
        out.grid.n_points = static_cast<int>(as_int(*v, join_path(path, "n_points")));
    }
    if (const json* v = optional_member(j, path, "noise_truncation")) {
        out.grid.noise_truncation = as_double(*v, join_path(path, "noise_truncation"));
    }
    if (const json* v = optional_member(j, path, "tolerance")) {
        out.tolerance = as_double(*v, join_path(path, "tolerance"));
    }
    if (const json* v = optional_member(j, path, "max_iterations")) {
        out.max_iterations = as_int(*v, join_path(path, "max_iterations"));
    }
    if (const json* v = optional_member(j, path, "horizon")) {
        out.horizon = static_cast<int>(as_int(*v, join_path(path, "horizon")));
    }
}

void parse_pomdp(const json& j, const std::string& path, PomdpParams& out) {
    check_keys(j, path, {"n_symbols", "P", "distortion", "T", "initial_belief", "initial_state"});
    out.source.n_symbols =
        static_cast<int>(as_int(member(j, path, "n_symbols"), join_path(path, "n_symbols")));
    out.source.P = as_matrix(member(j, path, "P"), join_path(path, "P"));
    out.source.distortion = as_matrix(member(j, path, "distortion"), join_path(path, "distortion"));
    out.horizon = static_cast<int>(as_int(member(j, path, "T"), join_path(path, "T")));
    out.initial_belief =
        as_double_vector(member(j, path, "initial_belief"), join_path(path, "initial_belief"));
    if (const json* v = optional_member(j, path, "initial_state")) {
        out.initial_state = static_cast<int>(as_int(*v, join_path(path, "initial_state")));
    }
    const auto issues = pomdp::validate_source(out.source);
    if (!issues.empty()) {
        std::string joined;
        for (const auto& s : issues) {
            if (!joined.empty()) joined += "; ";
            joined += s;
        }
        fail(path, joined);
    }
}

void parse_table1(const json& j, const std::string& path, Table1Params& out) {
    check_keys(j, path, {"lambda1", "eval_cycles", "trace_stride"});
    if (const json* v = optional_member(j, path, "lambda1")) {
        out.lambda1 = as_double_vector(*v, join_path(path, "lambda1"));
        if (out.lambda1.empty()) fail(join_path(path, "lambda1"), "expected at least one value");
    }
    if (const json* v = optional_member(j, path, "eval_cycles")) {
        out.eval_cycles = as_int(*v, join_path(path, "eval_cycles"));
    }
    if (const json* v = optional_member(j, path, "trace_stride")) {
        out.trace_stride = as_int(*v, join_path(path, "trace_stride"));
        if (out.trace_stride < 1) fail(join_path(path, "trace_stride"), "must be >= 1");
    }
}

void require_valid(const std::vector<std::string>& issues, const std::string& path) {
    if (issues.empty()) return;
    std::string joined;
    for (const auto& s : issues) {
        if (!joined.empty()) joined += "; ";
        joined += s;
    }
    fail(path, joined);
}

ExperimentConfig parse_config(const json& doc, const std::string& origin) {
    const json* root = &doc;
    // Summary files embed the config they ran with; accept them directly. A
    // plain config can never carry a "config" member (the strict key check
    // rejects it), so an embedded object with a workflow field is decisive.
    if (doc.is_object()) {
        auto it = doc.find("config");
        if (it != doc.end() && it->is_object() && it->contains("workflow")) {
            root = &*it;
        }
    }
    const json& j = *root;
    if (!j.is_object()) fail(origin, "top level must be a JSON object");
    check_keys(j, "",
               {"workflow", "seed", "replications", "workers", "output_dir", "model", "policy",
                "sim", "rmc", "trace_stride", "dp", "pomdp", "table1"});

    ExperimentConfig cfg;
    cfg.workflow = workflow_from_name(as_string(member(j, "", "workflow"), "workflow"));
    if (const json* v = optional_member(j, "", "seed")) cfg.seed = as_u64(*v, "seed");
    if (const json* v = optional_member(j, "", "replications")) {
        cfg.replications = static_cast<int>(as_int(*v, "replications"));
        if (cfg.replications < 1) fail("replications", "must be >= 1");
    }
    if (const json* v = optional_member(j, "", "workers")) {
        cfg.workers = static_cast<int>(as_int(*v, "workers"));
        if (cfg.workers < 1) fail("workers", "must be >= 1");
    }
    if (const json* v = optional_member(j, "", "output_dir")) {
        cfg.output_dir = as_string(*v, "output_dir");
    }
    if (const json* v = optional_member(j, "", "trace_stride")) {
        cfg.trace_stride = as_int(*v, "trace_stride");
        if (cfg.trace_stride < 1) fail("trace_stride", "must be >= 1");
    }

    const bool channel_only = cfg.workflow == Workflow::pomdp;
    cfg.model = parse_model(member(j, "", "model"), "model", channel_only);
    require_valid(model::validate_model(cfg.model), "model");

    const bool needs_policy = cfg.workflow == Workflow::evaluate ||
                              cfg.workflow == Workflow::optimize ||
                              cfg.workflow == Workflow::table1;
    if (needs_policy) {
        cfg.policy = parse_policy(member(j, "", "policy"), "policy");
        require_valid(model::validate_policy(cfg.policy, cfg.model.channel), "policy");
    }

    if (cfg.workflow == Workflow::evaluate || cfg.workflow == Workflow::optimize) {
        parse_sim(member(j, "", "sim"), "sim", cfg.sim);
        if (cfg.sim.n_cycles < 1) fail("sim.N", "must be >= 1");
    }
    if (cfg.workflow == Workflow::optimize || cfg.workflow == Workflow::table1) {
        parse_rmc(member(j, "", "rmc"), "rmc", cfg.rmc);
        if (cfg.rmc.iterations < 1) fail("rmc.iterations", "must be >= 1");
    }
    if (cfg.workflow == Workflow::dp) {
        if (const json* v = optional_member(j, "", "dp")) parse_dp(*v, "dp", cfg.dp);
        dp::validate_grid(cfg.dp.grid);
        if (!(cfg.dp.tolerance > 0.0)) fail("dp.tolerance", "must be > 0");
        if (cfg.dp.max_iterations < 1) fail("dp.max_iterations", "must be >= 1");
    }
    if (cfg.workflow == Workflow::pomdp) {
        parse_pomdp(member(j, "", "pomdp"), "pomdp", cfg.pomdp);
        if (cfg.pomdp.horizon < 0) fail("pomdp.T", "must be >= 0");
        if (static_cast<int>(cfg.pomdp.initial_belief.size()) != cfg.pomdp.source.n_symbols) {
            fail("pomdp.initial_belief", "expected one probability per symbol");
        }
        if (cfg.pomdp.initial_state < 0 || cfg.pomdp.initial_state >= cfg.model.channel.num_states) {
            fail("pomdp.initial_state", "outside the channel state range");
        }
    }
    if (cfg.workflow == Workflow::table1) {
        if (const json* v = optional_member(j, "", "table1")) parse_table1(*v, "table1", cfg.table1);
        if (cfg.model.channel.num_states != 2 || cfg.model.channel.num_levels() != 2) {
            fail("model.channel",
                 "the table1 workflow requires two channel states and one transmission level");
        }
    }

    // Single sources of truth: the config seed drives every stream, the model
    // beta drives every discount, the worker count applies everywhere.
    cfg.sim.seed = cfg.seed;
    cfg.sim.workers = cfg.workers;
    cfg.sim.beta = cfg.model.cost.beta;
    cfg.rmc.seed = cfg.seed;
    cfg.rmc.workers = cfg.workers;
    return cfg;
}

ordered_json noise_json(const model::NoiseSpec& n) {
    ordered_json j;
    if (n.kind == model::NoiseSpec::Kind::gaussian) {
        j["type"] = "gaussian";
        j["sigma"] = n.sigma;
    } else {
        j["type"] = "discrete";
        j["support"] = n.support;
        j["pmf"] = n.pmf;
    }
    return j;
}

ordered_json distortion_json(const model::DistortionSpec& d) {
    ordered_json j;
    if (d.kind == model::DistortionSpec::Kind::power) {
        j["type"] = "power";
        j["p"] = d.p;
    } else {
        j["type"] = "custom";
        j["knots"] = d.knots;
        j["values"] = d.values;
    }
    return j;
}

}  // namespace

std::string workflow_name(Workflow w) {
    switch (w) {
        case Workflow::evaluate: return "evaluate";
        case Workflow::optimize: return "optimize";
        case Workflow::dp: return "dp";
        case Workflow::pomdp: return "pomdp";
        case Workflow::table1: return "table1";
    }
    return "unknown";
}

Workflow workflow_from_name(const std::string& name) {
    if (name == "evaluate") return Workflow::evaluate;
    if (name == "optimize") return Workflow::optimize;
    if (name == "dp") return Workflow::dp;
    if (name == "pomdp") return Workflow::pomdp;
    if (name == "table1") return Workflow::table1;
    throw ConfigError("workflow: expected one of evaluate, optimize, dp, pomdp, table1; got \"" +
                      name + "\"");
}

std::vector<std::string> validate_multichannel(const MultiChannelConfig& mc) {
    std::vector<std::string> issues;
    if (mc.lambda.size() != mc.drop.size()) {
        issues.push_back("lambda and p lists must have the same length");
        return issues;
    }
    if (mc.lambda.empty()) {
        issues.push_back("at least one (lambda, p) pair is required");
        return issues;
    }
    for (std::size_t i = 0; i < mc.lambda.size(); ++i) {
        if (mc.lambda[i] < 0.0) {
            issues.push_back("lambda(" + std::to_string(i + 1) + ") is negative");
        }
        if (mc.drop[i] < 0.0 || mc.drop[i] > 1.0) {
            issues.push_back("p(" + std::to_string(i + 1) + ") outside [0, 1]");
        }
        if (i > 0 && mc.lambda[i] < mc.lambda[i - 1]) {
            issues.push_back("channel ordering violated: lambda must be non-decreasing, but lambda(" +
                             std::to_string(i + 1) + ") < lambda(" + std::to_string(i) + ")");
        }
        if (i > 0 && mc.drop[i] > mc.drop[i - 1]) {
            issues.push_back("channel ordering violated: p must be non-increasing, but p(" +
                             std::to_string(i + 1) + ") > p(" + std::to_string(i) + ")");
        }
    }
    return issues;
}

model::ChannelSpec expand_multichannel(const MultiChannelConfig& mc) {
    const auto issues = validate_multichannel(mc);
    if (!issues.empty()) {
        std::string joined;
        for (const auto& s : issues) {
            if (!joined.empty()) joined += "; ";
            joined += s;
        }
        throw ConfigError("multichannel: " + joined);
    }
    model::ChannelSpec ch;
    ch.num_states = 1;
    ch.Q = {{1.0}};
    const std::size_t m = mc.lambda.size();
    ch.power_levels.resize(m + 1);
    ch.tx_cost.resize(m + 1);
    ch.drop.assign(1, std::vector<double>(m + 1));
    ch.power_levels[0] = 0.0;
    ch.tx_cost[0] = 0.0;
    ch.drop[0][0] = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
        ch.power_levels[i + 1] = static_cast<double>(i + 1);
        ch.tx_cost[i + 1] = mc.lambda[i];
        ch.drop[0][i + 1] = mc.drop[i];
    }
    return ch;
}

ExperimentConfig load_config_text(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    return parse_config(doc, origin);
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_config_text(buf.str(), path);
}

void apply_overrides(ExperimentConfig& cfg, const Overrides& ov) {
    if (ov.output_dir) cfg.output_dir = *ov.output_dir;
    if (ov.seed) {
        cfg.seed = *ov.seed;
        cfg.sim.seed = *ov.seed;
        cfg.rmc.seed = *ov.seed;
    }
    if (ov.replications) {
        if (*ov.replications < 1) throw ConfigError("replications: must be >= 1");
        cfg.replications = *ov.replications;
    }
    if (ov.workers) {
        if (*ov.workers < 1) throw ConfigError("workers: must be >= 1");
        cfg.workers = *ov.workers;
        cfg.sim.workers = *ov.workers;
        cfg.rmc.workers = *ov.workers;
    }
}

std::string resolved_config_json(const ExperimentConfig& cfg) {
    ordered_json j;
    j["workflow"] = workflow_name(cfg.workflow);
    j["seed"] = cfg.seed;
    j["replications"] = cfg.replications;
    j["workers"] = cfg.workers;
    j["output_dir"] = cfg.output_dir;

    ordered_json m;
    m["a"] = cfg.model.source.a;
    m["noise"] = noise_json(cfg.model.source.noise);
    ordered_json ch;
    ch["Q"] = cfg.model.channel.Q;
    ch["power_levels"] = cfg.model.channel.power_levels;
    ch["p"] = cfg.model.channel.drop;
    ch["lambda"] = cfg.model.channel.tx_cost;
    m["channel"] = ch;
    m["distortion"] = distortion_json(cfg.model.cost.distortion);
    m["beta"] = cfg.model.cost.beta;
    m["reference_state"] = cfg.model.reference_state;
    j["model"] = m;

    const bool needs_policy = cfg.workflow == Workflow::evaluate ||
                              cfg.workflow == Workflow::optimize ||
                              cfg.workflow == Workflow::table1;
    if (needs_policy) j["policy"] = cfg.policy.k;

    if (cfg.workflow == Workflow::evaluate || cfg.workflow == Workflow::optimize) {
        ordered_json s;
        s["N"] = cfg.sim.n_cycles;
        s["max_cycle_len"] = cfg.sim.max_cycle_len;
        s["discount_cutoff"] = cfg.sim.discount_cutoff;
        j["sim"] = s;
    }
    if (cfg.workflow == Workflow::optimize || cfg.workflow == Workflow::table1) {
        ordered_json r;
        r["iterations"] = cfg.rmc.iterations;
        r["N"] = cfg.rmc.n_cycles_per_estimate;
        r["c"] = cfg.rmc.perturb_scale;
        r["perturb"] = cfg.rmc.perturb_dist == rmc::PerturbDist::normal ? "normal" : "rademacher";
        r["alpha"] = cfg.rmc.adam.alpha;
        r["beta1"] = cfg.rmc.adam.beta1;
        r["beta2"] = cfg.rmc.adam.beta2;
        r["epsilon"] = cfg.rmc.adam.epsilon;
        r["k_max"] = cfg.rmc.k_max;
        r["max_cycle_len"] = cfg.rmc.max_cycle_len;
        r["discount_cutoff"] = cfg.rmc.discount_cutoff;
        j["rmc"] = r;
    }
    if (cfg.workflow == Workflow::optimize) j["trace_stride"] = cfg.trace_stride;
    if (cfg.workflow == Workflow::dp) {
        ordered_json d;
        d["e_max"] = cfg.dp.grid.e_max;
        d["n_points"] = cfg.dp.grid.n_points;
        if (std::isfinite(cfg.dp.grid.noise_truncation)) {
            d["noise_truncation"] = cfg.dp.grid.noise_truncation;
        } else {
            d["noise_truncation"] = nullptr;
        }
        d["tolerance"] = cfg.dp.tolerance;
        d["max_iterations"] = cfg.dp.max_iterations;
        if (cfg.dp.horizon >= 0) {
            d["horizon"] = cfg.dp.horizon;
        } else {
            d["horizon"] = nullptr;
        }
        j["dp"] = d;
    }
    if (cfg.workflow == Workflow::pomdp) {
        ordered_json p;
        p["n_symbols"] = cfg.pomdp.source.n_symbols;
        p["P"] = cfg.pomdp.source.P;
        p["distortion"] = cfg.pomdp.source.distortion;
        p["T"] = cfg.pomdp.horizon;
        p["initial_belief"] = cfg.pomdp.initial_belief;
        p["initial_state"] = cfg.pomdp.initial_state;
        j["pomdp"] = p;
    }
    if (cfg.workflow == Workflow::table1) {
        ordered_json t;
        t["lambda1"] = cfg.table1.lambda1;
        t["eval_cycles"] = cfg.table1.eval_cycles;
        t["trace_stride"] = cfg.table1.trace_stride;
        j["table1"] = t;
    }
    return j.dump(2) + "\n";
}

}  // namespace remest::config
