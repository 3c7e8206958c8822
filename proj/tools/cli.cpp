#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stratind/analysis.hpp"
#include "stratind/io.hpp"
#include "stratind/mcmc.hpp"
#include "stratind/tasks.hpp"
#include "stratind/value.hpp"

namespace stratind::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr const char* kSeedScheme =
    "rollout i: env=derive(seed,env,i), agent=derive(seed,agent,i); value seed per chain c: derive(seed,value,c); "
    "proposals per (beta index b, chain c): derive(seed,proposal,b,c)";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Kind { Int, Seed, Double, Bool, String, DoubleList, StringList, Program, ProgramList, OptString };

struct Field {
    const char* name;
    Kind kind;
};

bool kind_accepts(Kind kind, const Json& v) {
    switch (kind) {
    case Kind::Int: return v.is_null() || v.is_number_integer();
    case Kind::Seed: return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
    case Kind::Double: return v.is_number();
    case Kind::Bool: return v.is_boolean();
    case Kind::String: return v.is_string();
    case Kind::OptString: return v.is_null() || v.is_string();
    case Kind::DoubleList:
        if (v.is_null()) return true;
        if (!v.is_array()) return false;
        for (const auto& x : v)
            if (!x.is_number()) return false;
        return true;
    case Kind::StringList:
        if (!v.is_array()) return false;
        for (const auto& x : v)
            if (!x.is_string()) return false;
        return true;
    case Kind::Program: return v.is_null() || v.is_string() || v.is_object();
    case Kind::ProgramList:
        if (!v.is_array()) return false;
        for (const auto& x : v)
            if (!x.is_string() && !x.is_object()) return false;
        return true;
    }
    return false;
}

const char* kind_name(Kind kind) {
    switch (kind) {
    case Kind::Int: return "an integer";
    case Kind::Seed: return "a non-negative integer";
    case Kind::Double: return "a number";
    case Kind::Bool: return "a boolean";
    case Kind::String: return "a string";
    case Kind::OptString: return "a string or null";
    case Kind::DoubleList: return "a list of numbers";
    case Kind::StringList: return "a list of strings";
    case Kind::Program: return "a program";
    case Kind::ProgramList: return "a list of programs";
    }
    return "?";
}

/// Overlays `file` onto `defaults`, rejecting unknown fields and wrong types.
void merge_config(Json& config, const Json& file, const std::vector<Field>& fields) {
    if (!file.is_object()) throw ConfigError("config: expected an object");
    for (const auto& [key, value] : file.items()) {
        auto it = std::find_if(fields.begin(), fields.end(), [&](const Field& f) { return key == f.name; });
        if (it == fields.end()) throw ConfigError("config." + key + ": unknown field");
        if (!kind_accepts(it->kind, value)) throw ConfigError("config." + key + ": expected " + kind_name(it->kind));
        config[key] = value;
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Reads a config file; a run manifest contributes its "config" object.
Json load_config_file(const std::string& path, const std::string& command) {
    Json j;
    try {
        j = Json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    if (j.is_object() && j.contains("config") && j.contains("command")) {
        if (j["command"] != command)
            throw ConfigError(path + ": manifest is for '" + j["command"].get<std::string>() + "', not '" + command + "'");
        return j["config"];
    }
    return j;
}

Json program_json(const Strategy& s) {
    Json j;
    j["m1"] = print(s.m1);
    j["q1"] = print(s.q1);
    j["f"] = print(s.f);
    j["g"] = print(s.g);
    return j;
}

/// Listing text (`m_1 = ...`) or a single `m1;q1;f;g` line.
Strategy strategy_from_text(const std::string& text) {
    if (text.find(';') == std::string::npos) return parse_strategy_listing(text);
    std::vector<std::string> parts;
    std::string cur;
    for (char c : text) {
        if (c == ';') {
            parts.push_back(cur);
            cur.clear();
        } else if (c != '\n' && c != '\r') {
            cur += c;
        }
    }
    parts.push_back(cur);
    if (parts.size() != 4) throw ProgramError(ProgramError::Kind::Syntax, "expected a listing or m1;q1;f;g");
    return parse_strategy(parts[0], parts[1], parts[2], parts[3]);
}

Strategy strategy_from_json(const Json& j) {
    if (j.is_string()) return strategy_from_text(j.get<std::string>());
    for (const char* k : {"m1", "q1", "f", "g"})
        if (!j.contains(k) || !j[k].is_string()) throw ConfigError(std::string("program: missing field '") + k + "'");
    return parse_strategy(j["m1"].get<std::string>(), j["q1"].get<std::string>(), j["f"].get<std::string>(),
                          j["g"].get<std::string>());
}

// Task settings shared by several commands.
const std::vector<Field> kTaskFields{
    {"task", Kind::String}, {"trials", Kind::Int}, {"condition", Kind::String}, {"reward_scale", Kind::Double}};

Json task_defaults(const std::string& task) {
    Json j;
    j["task"] = task;
    j["trials"] = nullptr;
    j["condition"] = "long";
    j["reward_scale"] = 0.01;
    return j;
}

/// Builds the task and writes its resolved parameters back into `config`.
TaskSpec resolve_task(Json& config) {
    std::string name = config["task"].get<std::string>();
    std::string condition = config["condition"].get<std::string>();
    if (name == "bernoulli2" || name == "restless3") {
        int trials = config["trials"].is_null() ? (name == "bernoulli2" ? 20 : 500) : config["trials"].get<int>();
        if (trials < 1) throw ConfigError("config.trials: must be positive");
        config["trials"] = trials;
        return name == "bernoulli2" ? TaskSpec::bernoulli2(trials) : TaskSpec::restless3(trials);
    }
    if (name == "horizon") {
        if (condition != "short" && condition != "long")
            throw ConfigError("config.condition: expected 'short' or 'long'");
        int free = config["trials"].is_null() ? (condition == "short" ? 1 : 6) : config["trials"].get<int>();
        if (free < 1) throw ConfigError("config.trials: must be positive");
        config["trials"] = free;
        double scale = config["reward_scale"].get<double>();
        return TaskSpec::horizon_task(free, scale);
    }
    throw ConfigError("config.task: unknown task '" + name + "' (expected bernoulli2, horizon or restless3)");
}

void add_task_options(CLI::App* app, std::map<std::string, CLI::Option*>& opts, std::string& task, int& trials,
                      std::string& condition, double& scale) {
    opts["task"] = app->add_option("--task", task, "bernoulli2 | horizon | restless3");
    opts["trials"] = app->add_option("--trials", trials, "Trials per episode (free trials for horizon)");
    opts["condition"] = app->add_option("--condition", condition, "Horizon condition: short (1) | long (6)");
    opts["reward_scale"] = app->add_option("--reward-scale", scale, "Horizon task reward scale");
}

std::string hash_hex(const Json& config) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config.dump())));
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw EvalError("cannot write '" + path.string() + "'");
    out << text;
}

void write_manifest(const fs::path& dir, const std::string& command, const Json& config,
                    const std::vector<std::string>& outputs) {
    Json m;
    m["command"] = command;
    m["version"] = kVersion;
    m["config"] = config;
    m["config_hash"] = hash_hex(config);
    m["seed_scheme"] = kSeedScheme;
    m["outputs"] = outputs;
    write_text(dir / "manifest.json", m.dump(2) + "\n");
}

fs::path prepare_out(const std::string& out) {
    fs::path dir(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw EvalError("cannot create output directory '" + out + "': " + ec.message());
    return dir;
}

template <typename T>
void overlay(Json& config, const std::map<std::string, CLI::Option*>& opts, const std::string& key, const T& value) {
    auto it = opts.find(key);
    if (it != opts.end() && it->second->count() > 0) config[key] = value;
}

// discover ------------------------------------------------------------------

const std::vector<Field> kDiscoverFields = [] {
    auto f = kTaskFields;
    f.insert(f.end(), {{"betas", Kind::DoubleList},
                       {"chains", Kind::Int},
                       {"steps", Kind::Int},
                       {"rollouts", Kind::Int},
                       {"seed", Kind::Seed},
                       {"deterministic", Kind::Bool},
                       {"value_mode", Kind::String},
                       {"top_k", Kind::Int},
                       {"threads", Kind::Int}});
    return f;
}();

Json discover_defaults() {
    Json j = task_defaults("bernoulli2");
    j["betas"] = nullptr;
    j["chains"] = 5;
    j["steps"] = 500000;
    j["rollouts"] = nullptr;
    j["seed"] = 0;
    j["deterministic"] = false;
    j["value_mode"] = "mc";
    j["top_k"] = 100;
    j["threads"] = 0;
    return j;
}

int cmd_discover(Json config, const fs::path& out_dir, std::ostream& out) {
    TaskSpec task = resolve_task(config);
    DiscoveryConfig dc;
    dc.task = task;
    if (config["betas"].is_null()) config["betas"] = default_betas(task);
    dc.betas = config["betas"].get<std::vector<double>>();
    if (dc.betas.empty()) throw ConfigError("config.betas: must not be empty");
    for (double b : dc.betas)
        if (!(b >= 0.0)) throw ConfigError("config.betas: values must be non-negative");
    if (config["rollouts"].is_null()) config["rollouts"] = default_rollouts(task);
    dc.rollouts = config["rollouts"].get<int>();
    dc.chains = config["chains"].get<int>();
    dc.steps = config["steps"].get<long>();
    dc.seed = config["seed"].get<std::uint64_t>();
    dc.deterministic = config["deterministic"].get<bool>();
    dc.top_k = static_cast<std::size_t>(config["top_k"].get<int>());
    dc.threads = config["threads"].get<int>();
    std::string mode = config["value_mode"].get<std::string>();
    if (mode == "exact")
        dc.value_mode = ValueMode::Exact;
    else if (mode == "mc")
        dc.value_mode = ValueMode::MonteCarlo;
    else
        throw ConfigError("config.value_mode: expected 'exact' or 'mc'");
    if (dc.chains < 1) throw ConfigError("config.chains: must be positive");
    if (dc.steps < 0) throw ConfigError("config.steps: must be non-negative");
    if (dc.rollouts < 1) throw ConfigError("config.rollouts: must be positive");
    if (dc.value_mode == ValueMode::Exact && (task.kind != TaskKind::Bernoulli2 || !dc.deterministic))
        throw ConfigError("config.value_mode: exact values need task bernoulli2 with deterministic=true");

    auto results = run_discovery(dc);
    std::ostringstream ss;
    write_results_jsonl(ss, results);
    write_text(out_dir / "results.jsonl", ss.str());
    write_manifest(out_dir, "discover", config, {"results.jsonl"});
    out << "wrote " << results.size() << " strategies to " << (out_dir / "results.jsonl").string() << "\n";
    return kExitOk;
}

// eval ----------------------------------------------------------------------

const std::vector<Field> kEvalFields = [] {
    auto f = kTaskFields;
    f.insert(f.end(), {{"mode", Kind::String},
                       {"rollouts", Kind::Int},
                       {"seed", Kind::Seed},
                       {"programs", Kind::ProgramList}});
    return f;
}();

Json eval_defaults() {
    Json j = task_defaults("bernoulli2");
    j["mode"] = "mc";
    j["rollouts"] = nullptr;
    j["seed"] = 0;
    j["programs"] = Json::array();
    return j;
}

int cmd_eval(Json config, const fs::path& out_dir, std::ostream& out) {
    TaskSpec task = resolve_task(config);
    if (config["rollouts"].is_null()) config["rollouts"] = default_rollouts(task);
    int rollouts = config["rollouts"].get<int>();
    if (rollouts < 1) throw ConfigError("config.rollouts: must be positive");
    std::string mode = config["mode"].get<std::string>();
    if (mode != "exact" && mode != "mc") throw ConfigError("config.mode: expected 'exact' or 'mc'");
    if (config["programs"].empty()) throw ConfigError("config.programs: no programs given");
    std::uint64_t seed = config["seed"].get<std::uint64_t>();

    std::vector<Strategy> strategies;
    Json normalized = Json::array();
    Grammar grammar(task.grammar_options());
    for (const auto& p : config["programs"]) {
        Strategy s = strategy_from_json(p);
        check_strategy(s, grammar);
        normalized.push_back(program_json(s));
        strategies.push_back(std::move(s));
    }
    config["programs"] = normalized;

    std::ostringstream ss;
    for (const auto& s : strategies) {
        ValueEstimate v;
        if (mode == "exact") {
            if (task.kind != TaskKind::Bernoulli2) throw EvalError("exact mode is only available for bernoulli2");
            if (!is_deterministic(s))
                throw EvalError("exact mode rejects stochastic policies: q1 and g must be action(...) or argmax(...)");
            v = exact_value_bernoulli2(s, task);
        } else {
            v = mc_value(s, task, rollouts, seed);
        }
        Json row = value_report(s, v);
        row["log_prior"] = log_prior(s, grammar);
        ss << row.dump() << "\n";
    }
    write_text(out_dir / "eval.jsonl", ss.str());
    write_manifest(out_dir, "eval", config, {"eval.jsonl"});
    out << ss.str();
    return kExitOk;
}

// pareto --------------------------------------------------------------------

const std::vector<Field> kParetoFields{{"results", Kind::StringList}};

int cmd_pareto(Json config, const fs::path& out_dir, std::ostream& out) {
    std::vector<ScoredStrategy> points;
    std::map<std::string, std::size_t> seen;
    if (config["results"].empty()) throw ConfigError("config.results: no results files given");
    for (const auto& path : config["results"]) {
        std::ifstream in(path.get<std::string>(), std::ios::binary);
        if (!in) throw ConfigError("cannot read '" + path.get<std::string>() + "'");
        auto rows = read_results_jsonl(in);
        for (auto& r : rows) {
            if (!std::isfinite(r.normalized_value) || !std::isfinite(r.log_prior)) continue;
            // A strategy found by several chains appears once, with its best estimate.
            auto [it, fresh] = seen.emplace(r.text, points.size());
            if (fresh)
                points.push_back(std::move(r));
            else if (r.normalized_value > points[it->second].normalized_value)
                points[it->second] = std::move(r);
        }
    }
    std::ostringstream ss;
    write_pareto_csv(ss, points);
    write_text(out_dir / "pareto.csv", ss.str());
    write_manifest(out_dir, "pareto", config, {"pareto.csv"});
    auto front = pareto_frontier(points);
    out << front.size() << " of " << points.size() << " strategies on the frontier\n";
    for (const auto& p : front)
        out << format_double(p.normalized_value) << "\t" << format_double(p.log_prior) << "\t" << points[p.index].text
            << "\n";
    return kExitOk;
}

// fsm -----------------------------------------------------------------------

const std::vector<Field> kFsmFields = [] {
    auto f = kTaskFields;
    f.insert(f.end(), {{"program", Kind::Program},
                       {"quantize_tol", Kind::Double},
                       {"collapse_tol", Kind::Double},
                       {"prune", Kind::Double},
                       {"max_depth", Kind::Int},
                       {"budget", Kind::Int},
                       {"initial_memory", Kind::OptString},
                       {"initial_policy", Kind::OptString}});
    return f;
}();

Json fsm_defaults() {
    Json j = task_defaults("restless3");
    MachineOptions d;
    j["program"] = nullptr;
    j["quantize_tol"] = d.quantize_tol;
    j["collapse_tol"] = d.collapse_tol;
    j["prune"] = d.prune_threshold;
    j["max_depth"] = nullptr;
    j["budget"] = static_cast<int>(d.budget);
    j["initial_memory"] = nullptr;
    j["initial_policy"] = nullptr;
    return j;
}

int cmd_fsm(Json config, const fs::path& out_dir, std::ostream& out) {
    TaskSpec task = resolve_task(config);
    if (config["program"].is_null()) throw ConfigError("config.program: no program given");
    Strategy s = strategy_from_json(config["program"]);
    config["program"] = program_json(s);
    MachineOptions opt;
    opt.quantize_tol = config["quantize_tol"].get<double>();
    opt.collapse_tol = config["collapse_tol"].get<double>();
    opt.prune_threshold = config["prune"].get<double>();
    if (config["max_depth"].is_null()) config["max_depth"] = task.horizon;
    opt.max_depth = config["max_depth"].get<int>();
    int budget = config["budget"].get<int>();
    if (budget < 1) throw ConfigError("config.budget: must be positive");
    opt.budget = static_cast<std::size_t>(budget);
    if (!config["initial_memory"].is_null()) {
        Expr e = parse(config["initial_memory"].get<std::string>());
        check_role(e, Role::InitMemory);
        opt.initial_memory = e;
        config["initial_memory"] = print(e);
    }
    if (!config["initial_policy"].is_null()) {
        Expr e = parse(config["initial_policy"].get<std::string>());
        check_role(e, Role::InitPolicy);
        opt.initial_policy = e;
        config["initial_policy"] = print(e);
    }
    PolicyStateMachine m;
    try {
        m = extract_state_machine(s, task, opt);
    } catch (const std::invalid_argument& e) {
        throw EvalError(e.what());
    } catch (const std::runtime_error& e) {
        throw EvalError(e.what());
    }
    write_text(out_dir / "fsm.json", to_json(m).dump(2) + "\n");
    std::ostringstream dot;
    write_dot(dot, m);
    write_text(out_dir / "fsm.dot", dot.str());
    write_manifest(out_dir, "fsm", config, {"fsm.json", "fsm.dot"});
    out << m.states.size() << " states, " << m.edges.size() << " edges" << (m.partial ? " (partial)" : "") << "\n";
    return kExitOk;
}

// sweep ---------------------------------------------------------------------

const std::vector<Field> kSweepFields{{"trials", Kind::Int},           {"rollouts", Kind::Int}, {"seed", Kind::Seed},
                                      {"max_temperature", Kind::Int}, {"max_initial", Kind::Int}};

Json sweep_defaults() {
    Json j;
    j["trials"] = 20;
    j["rollouts"] = 10000;
    j["seed"] = 0;
    j["max_temperature"] = 10;
    j["max_initial"] = 2;
    return j;
}

int cmd_sweep(Json config, const fs::path& out_dir, std::ostream& out) {
    SweepOptions opt;
    int trials = config["trials"].get<int>();
    opt.rollouts = config["rollouts"].get<int>();
    opt.seed = config["seed"].get<std::uint64_t>();
    opt.max_temperature = config["max_temperature"].get<int>();
    opt.max_initial = config["max_initial"].get<int>();
    if (trials < 1 || opt.rollouts < 1) throw ConfigError("config: trials and rollouts must be positive");
    if (opt.max_temperature < 1 || opt.max_temperature > kMaxLiteral)
        throw ConfigError("config.max_temperature: must be in [1, 49]");
    if (opt.max_initial < 0 || opt.max_initial > kMaxLiteral) throw ConfigError("config.max_initial: must be in [0, 49]");
    auto rows = accumulator_sweep(TaskSpec::bernoulli2(trials), opt);
    std::ostringstream ss;
    write_sweep_csv(ss, rows);
    write_text(out_dir / "sweep.csv", ss.str());
    write_manifest(out_dir, "sweep", config, {"sweep.csv"});
    out << rows.size() << " rows\n";
    for (const auto& r : rows)
        if (r.best_in_target)
            out << "best " << r.target << ": " << print(r.strategy) << " raw=" << format_double(r.value.raw)
                << (r.deterministic ? " deterministic" : " stochastic") << (r.wsls_equivalent ? " wsls" : "") << "\n";
    return kExitOk;
}

// fit-horizon ---------------------------------------------------------------

const std::vector<Field> kFitFields{{"beta", Kind::Double},         {"reward_scale", Kind::Double},
                                    {"rollouts", Kind::Int},         {"seed", Kind::Seed},
                                    {"max_temperature", Kind::Int}, {"conditions", Kind::DoubleList}};

Json fit_defaults() {
    Json j;
    HorizonFitOptions d;
    j["beta"] = d.beta;
    j["reward_scale"] = d.reward_scale;
    j["rollouts"] = d.rollouts;
    j["seed"] = 0;
    j["max_temperature"] = d.max_temperature;
    j["conditions"] = {1, 6};
    return j;
}

int cmd_fit(Json config, const fs::path& out_dir, std::ostream& out) {
    HorizonFitOptions opt;
    opt.beta = config["beta"].get<double>();
    opt.reward_scale = config["reward_scale"].get<double>();
    opt.rollouts = config["rollouts"].get<int>();
    opt.seed = config["seed"].get<std::uint64_t>();
    opt.max_temperature = config["max_temperature"].get<int>();
    if (opt.rollouts < 1) throw ConfigError("config.rollouts: must be positive");
    if (opt.max_temperature < 1 || opt.max_temperature > kMaxLiteral)
        throw ConfigError("config.max_temperature: must be in [1, 49]");
    if (config["conditions"].is_null() || config["conditions"].empty())
        throw ConfigError("config.conditions: must list free-trial counts");
    Json report;
    report["fits"] = Json::array();
    for (const auto& c : config["conditions"]) {
        double free = c.get<double>();
        if (free < 1 || free != static_cast<int>(free)) throw ConfigError("config.conditions: must be positive integers");
        HorizonFit fit = fit_horizon_temperature(static_cast<int>(free), opt);
        report["fits"].push_back(to_json(fit));
        out << "free trials " << fit.free_trials << ": w = " << fit.best_temperature << "\n";
    }
    write_text(out_dir / "horizon_fit.json", report.dump(2) + "\n");
    write_manifest(out_dir, "fit-horizon", config, {"horizon_fit.json"});
    return kExitOk;
}

} // namespace

std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Strategy induction for bandit tasks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    // Flag storage; only flags actually given override the config.
    std::string config_path, out_path = "results";
    std::string task, condition, value_mode, mode, program_path, init_memory, init_policy;
    int trials = 0, chains = 0, rollouts = 0, top_k = 0, threads = 0, max_depth = 0, budget = 0, max_temp = 0,
        max_initial = 0;
    long steps = 0;
    std::uint64_t seed = 0;
    double reward_scale = 0, quantize_tol = 0, collapse_tol = 0, prune = 0, beta_single = 0;
    bool deterministic = false;
    std::vector<double> betas, conditions;
    std::vector<std::string> program_files, results_files;

    struct Sub {
        CLI::App* app;
        std::map<std::string, CLI::Option*> opts;
    };
    std::map<std::string, Sub> subs;
    auto common = [&](CLI::App* a, Sub& s) {
        s.opts["config"] = a->add_option("--config", config_path, "JSON config file or a run manifest");
        s.opts["out"] = a->add_option("--out", out_path, "Output directory")->capture_default_str();
        s.opts["seed"] = a->add_option("--seed", seed, "Master seed");
    };

    {
        Sub s{app.add_subcommand("discover", "Run MCMC strategy discovery"), {}};
        common(s.app, s);
        add_task_options(s.app, s.opts, task, trials, condition, reward_scale);
        s.opts["betas"] = s.app->add_option("--beta", betas, "Value weight(s); repeat for several");
        s.opts["chains"] = s.app->add_option("--chains", chains, "Chains per beta");
        s.opts["steps"] = s.app->add_option("--steps", steps, "MH steps per chain");
        s.opts["rollouts"] = s.app->add_option("--rollouts", rollouts, "Monte Carlo rollouts per value");
        s.opts["deterministic"] = s.app->add_flag("--deterministic", deterministic, "Policies limited to action/argmax");
        s.opts["value_mode"] = s.app->add_option("--value-mode", value_mode, "mc | exact");
        s.opts["top_k"] = s.app->add_option("--top-k", top_k, "Strategies kept per chain");
        s.opts["threads"] = s.app->add_option("--threads", threads, "Worker threads (0 = all cores)");
        subs["discover"] = s;
    }
    {
        Sub s{app.add_subcommand("eval", "Evaluate strategy programs"), {}};
        common(s.app, s);
        add_task_options(s.app, s.opts, task, trials, condition, reward_scale);
        s.opts["programs"] = s.app->add_option("--program", program_files, "Program file (listing or m1;q1;f;g)");
        s.opts["mode"] = s.app->add_option("--mode", mode, "mc | exact");
        s.opts["rollouts"] = s.app->add_option("--rollouts", rollouts, "Monte Carlo rollouts");
        subs["eval"] = s;
    }
    {
        Sub s{app.add_subcommand("pareto", "Pareto frontier of discovery results"), {}};
        s.opts["config"] = s.app->add_option("--config", config_path, "JSON config file or a run manifest");
        s.opts["out"] = s.app->add_option("--out", out_path, "Output directory")->capture_default_str();
        s.opts["results"] = s.app->add_option("--results", results_files, "results.jsonl files");
        subs["pareto"] = s;
    }
    {
        Sub s{app.add_subcommand("fsm", "Extract a policy state machine"), {}};
        s.opts["config"] = s.app->add_option("--config", config_path, "JSON config file or a run manifest");
        s.opts["out"] = s.app->add_option("--out", out_path, "Output directory")->capture_default_str();
        add_task_options(s.app, s.opts, task, trials, condition, reward_scale);
        s.opts["program"] = s.app->add_option("--program", program_path, "Program file");
        s.opts["quantize_tol"] = s.app->add_option("--quantize-tol", quantize_tol);
        s.opts["collapse_tol"] = s.app->add_option("--collapse-tol", collapse_tol);
        s.opts["prune"] = s.app->add_option("--prune", prune, "Minimum action probability for an edge");
        s.opts["max_depth"] = s.app->add_option("--max-depth", max_depth);
        s.opts["budget"] = s.app->add_option("--budget", budget, "Configuration budget");
        s.opts["initial_memory"] = s.app->add_option("--initial-memory", init_memory, "Override m1");
        s.opts["initial_policy"] = s.app->add_option("--initial-policy", init_policy, "Override q1");
        subs["fsm"] = s;
    }
    {
        Sub s{app.add_subcommand("sweep", "Exhaustive partial-accumulator sweep"), {}};
        common(s.app, s);
        s.opts["trials"] = s.app->add_option("--trials", trials, "Trials per episode");
        s.opts["rollouts"] = s.app->add_option("--rollouts", rollouts, "Rollouts for stochastic rows");
        s.opts["max_temperature"] = s.app->add_option("--max-temperature", max_temp);
        s.opts["max_initial"] = s.app->add_option("--max-initial", max_initial);
        subs["sweep"] = s;
    }
    {
        Sub s{app.add_subcommand("fit-horizon", "Fit horizon-specific softmax temperatures"), {}};
        common(s.app, s);
        s.opts["beta"] = s.app->add_option("--beta", beta_single, "Value weight");
        s.opts["reward_scale"] = s.app->add_option("--reward-scale", reward_scale);
        s.opts["rollouts"] = s.app->add_option("--rollouts", rollouts);
        s.opts["max_temperature"] = s.app->add_option("--max-temperature", max_temp);
        s.opts["conditions"] = s.app->add_option("--condition", conditions, "Free-trial counts");
        subs["fit-horizon"] = s;
    }

    std::vector<std::string> args(argv + 1, argv + argc);
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        for (auto& [name, sub] : subs) {
            if (!sub.app->parsed()) continue;
            auto& o = sub.opts;
            Json config;
            const std::vector<Field>* fields = nullptr;
            if (name == "discover") {
                config = discover_defaults();
                fields = &kDiscoverFields;
            } else if (name == "eval") {
                config = eval_defaults();
                fields = &kEvalFields;
            } else if (name == "pareto") {
                config["results"] = Json::array();
                fields = &kParetoFields;
            } else if (name == "fsm") {
                config = fsm_defaults();
                fields = &kFsmFields;
            } else if (name == "sweep") {
                config = sweep_defaults();
                fields = &kSweepFields;
            } else {
                config = fit_defaults();
                fields = &kFitFields;
            }
            if (o["config"]->count()) merge_config(config, load_config_file(config_path, name), *fields);

            overlay(config, o, "task", task);
            overlay(config, o, "trials", trials);
            overlay(config, o, "condition", condition);
            overlay(config, o, "reward_scale", reward_scale);
            overlay(config, o, "seed", seed);
            overlay(config, o, "betas", betas);
            overlay(config, o, "beta", beta_single);
            overlay(config, o, "chains", chains);
            overlay(config, o, "steps", steps);
            overlay(config, o, "rollouts", rollouts);
            overlay(config, o, "deterministic", deterministic);
            overlay(config, o, "value_mode", value_mode);
            overlay(config, o, "mode", mode);
            overlay(config, o, "top_k", top_k);
            overlay(config, o, "threads", threads);
            overlay(config, o, "quantize_tol", quantize_tol);
            overlay(config, o, "collapse_tol", collapse_tol);
            overlay(config, o, "prune", prune);
            overlay(config, o, "max_depth", max_depth);
            overlay(config, o, "budget", budget);
            overlay(config, o, "initial_memory", init_memory);
            overlay(config, o, "initial_policy", init_policy);
            overlay(config, o, "max_temperature", max_temp);
            overlay(config, o, "max_initial", max_initial);
            overlay(config, o, "conditions", conditions);
            overlay(config, o, "results", results_files);
            if (o.count("programs") && o["programs"]->count()) {
                Json programs = Json::array();
                for (const auto& p : program_files) programs.push_back(program_json(strategy_from_text(read_file(p))));
                config["programs"] = programs;
            }
            if (o.count("program") && o["program"]->count())
                config["program"] = program_json(strategy_from_text(read_file(program_path)));

            fs::path dir = prepare_out(out_path);
            if (name == "discover") return cmd_discover(config, dir, out);
            if (name == "eval") return cmd_eval(config, dir, out);
            if (name == "pareto") return cmd_pareto(config, dir, out);
            if (name == "fsm") return cmd_fsm(config, dir, out);
            if (name == "sweep") return cmd_sweep(config, dir, out);
            return cmd_fit(config, dir, out);
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ProgramError& e) {
        err << "program error: " << e.what();
        if (e.position() != ProgramError::npos) err << " (at offset " << e.position() << ")";
        err << "\n";
        return kExitUsage;
    } catch (const nlohmann::json::exception& e) {
        err << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const EvalError& e) {
        err << "evaluation error: " << e.what() << "\n";
        return kExitEval;
    } catch (const std::exception& e) {
        err << "evaluation error: " << e.what() << "\n";
        return kExitEval;
    }
    return kExitUsage;
}

} // namespace stratind::cli
