#include "stratind/io.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace stratind {

using nlohmann::ordered_json;

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

nlohmann::ordered_json json_number(double x) {
    if (!std::isfinite(x)) return nullptr;
    return x;
}

namespace {

double number_or_neg_inf(const nlohmann::ordered_json& j) {
    return j.is_null() ? -std::numeric_limits<double>::infinity() : j.get<double>();
}

} // namespace

nlohmann::ordered_json to_json(const ScoredStrategy& s) {
    ordered_json j;
    j["beta"] = s.beta;
    j["chain"] = s.chain;
    j["step_found"] = s.step_found;
    j["m1"] = print(s.strategy.m1);
    j["q1"] = print(s.strategy.q1);
    j["f"] = print(s.strategy.f);
    j["g"] = print(s.strategy.g);
    j["log_prior"] = json_number(s.log_prior);
    j["raw_value"] = json_number(s.raw_value);
    j["normalized_value"] = json_number(s.normalized_value);
    j["stderr"] = s.std_error;
    j["score"] = json_number(s.score);
    return j;
}

ScoredStrategy scored_from_json(const nlohmann::ordered_json& j) {
    ScoredStrategy s;
    s.strategy = parse_strategy(j.at("m1").get<std::string>(), j.at("q1").get<std::string>(),
                                j.at("f").get<std::string>(), j.at("g").get<std::string>());
    s.text = print(s.strategy);
    s.beta = j.at("beta").get<double>();
    s.chain = j.at("chain").get<int>();
    s.step_found = j.at("step_found").get<long>();
    s.log_prior = number_or_neg_inf(j.at("log_prior"));
    s.raw_value = number_or_neg_inf(j.at("raw_value"));
    s.normalized_value = number_or_neg_inf(j.at("normalized_value"));
    s.std_error = j.value("stderr", 0.0);
    s.score = number_or_neg_inf(j.at("score"));
    return s;
}

void write_results_jsonl(std::ostream& out, const std::vector<ScoredStrategy>& results) {
    for (const auto& r : results) out << ordered_json(to_json(r)).dump() << '\n';
}

std::vector<ScoredStrategy> read_results_jsonl(std::istream& in) {
    std::vector<ScoredStrategy> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(scored_from_json(nlohmann::ordered_json::parse(line)));
        } catch (const std::exception& e) {
            throw std::runtime_error("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

nlohmann::ordered_json value_report(const Strategy& s, const ValueEstimate& v) {
    ordered_json j;
    j["m1"] = print(s.m1);
    j["q1"] = print(s.q1);
    j["f"] = print(s.f);
    j["g"] = print(s.g);
    j["raw"] = json_number(v.raw);
    j["normalized"] = json_number(v.normalized);
    j["stderr"] = v.std_error;
    j["method"] = std::string(to_string(v.method));
    j["n_rollouts"] = v.n_rollouts;
    if (!v.valid()) j["fault"] = std::string(to_string(v.fault));
    return j;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

void write_pareto_csv(std::ostream& out, const std::vector<ScoredStrategy>& points) {
    auto marks = mark_pareto(points);
    out << "normalized_value,log_prior,m1,q1,f,g,on_frontier,beta,chain,step_found\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        out << format_double(p.normalized_value) << ',' << format_double(p.log_prior) << ','
            << csv_field(print(p.strategy.m1)) << ',' << csv_field(print(p.strategy.q1)) << ','
            << csv_field(print(p.strategy.f)) << ',' << csv_field(print(p.strategy.g)) << ','
            << (marks[i].dominated ? 0 : 1) << ',' << format_double(p.beta) << ',' << p.chain << ',' << p.step_found
            << '\n';
    }
}

nlohmann::ordered_json to_json(const PolicyStateMachine& m) {
    ordered_json j;
    j["num_actions"] = m.num_actions;
    j["initial"] = m.initial;
    j["partial"] = m.partial;
    j["configurations"] = m.configurations;
    j["pruned_edges"] = m.pruned_edges;
    ordered_json states = ordered_json::array();
    for (std::size_t i = 0; i < m.states.size(); ++i) {
        ordered_json s;
        s["id"] = i;
        ordered_json probs = ordered_json::array();
        for (int a = 0; a < m.num_actions; ++a) probs.push_back(m.states[i].policy[a]);
        s["probs"] = probs;
        s["configurations"] = m.states[i].configurations;
        states.push_back(s);
    }
    j["states"] = states;
    ordered_json edges = ordered_json::array();
    for (const auto& e : m.edges) {
        ordered_json k;
        k["from"] = e.from;
        k["action"] = e.action;
        k["outcome"] = e.win ? "win" : "loss";
        k["to"] = e.to;
        k["probability"] = e.probability;
        edges.push_back(k);
    }
    j["edges"] = edges;
    return j;
}

void write_dot(std::ostream& out, const PolicyStateMachine& m) {
    static const char* colors[] = {"red", "blue", "darkgreen", "orange"};
    out << "digraph policy {\n  rankdir=LR;\n";
    for (std::size_t i = 0; i < m.states.size(); ++i) {
        out << "  s" << i << " [label=\"";
        for (int a = 0; a < m.num_actions; ++a) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%s%.3f", a ? " " : "", m.states[i].policy[a]);
            out << buf;
        }
        out << "\"" << (i == m.initial ? ", shape=doublecircle" : "") << "];\n";
    }
    for (const auto& e : m.edges) {
        out << "  s" << e.from << " -> s" << e.to << " [color=" << colors[e.action % 4]
            << (e.win ? "" : ", style=dashed") << "];\n";
    }
    out << "}\n";
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "target,m1,q1,f,g,deterministic,method,raw,normalized,stderr,wsls_equivalent,best_in_target\n";
    for (const auto& r : rows) {
        out << r.target << ',' << csv_field(print(r.strategy.m1)) << ',' << csv_field(print(r.strategy.q1)) << ','
            << csv_field(print(r.strategy.f)) << ',' << csv_field(print(r.strategy.g)) << ','
            << (r.deterministic ? 1 : 0) << ',' << to_string(r.value.method) << ',' << format_double(r.value.raw)
            << ',' << format_double(r.value.normalized) << ',' << format_double(r.value.std_error) << ','
            << (r.wsls_equivalent ? 1 : 0) << ',' << (r.best_in_target ? 1 : 0) << '\n';
    }
}

nlohmann::ordered_json to_json(const HorizonFit& fit) {
    ordered_json j;
    j["free_trials"] = fit.free_trials;
    j["best_temperature"] = fit.best_temperature;
    ordered_json scores = ordered_json::array();
    for (const auto& s : fit.scores) {
        ordered_json k;
        k["temperature"] = s.temperature;
        k["value"] = json_number(s.value.raw);
        k["stderr"] = s.value.std_error;
        k["log_prior"] = s.log_prior;
        k["score"] = json_number(s.score);
        scores.push_back(k);
    }
    j["scores"] = scores;
    ordered_json trials = ordered_json::array();
    for (std::size_t i = 0; i < fit.p_better.size(); ++i) {
        ordered_json t;
        t["free_trial"] = i + 1;
        t["p_better"] = fit.p_better[i];
        t["stderr"] = fit.p_better_se[i];
        t["p_better_equal_counts"] = json_number(fit.p_better_equal[i]);
        t["equal_count_episodes"] = fit.equal_count_episodes[i];
        trials.push_back(t);
    }
    j["trials"] = trials;
    return j;
}

} // namespace stratind
