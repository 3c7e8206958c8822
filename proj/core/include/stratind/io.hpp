#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stratind/analysis.hpp"
#include "stratind/mcmc.hpp"
#include "stratind/value.hpp"

namespace stratind {

/// Shortest text that round-trips (printf %.17g); "-inf"/"inf"/"nan" for
/// non-finite values.
std::string format_double(double x);

/// JSON number, or null when not finite.
nlohmann::ordered_json json_number(double x);

nlohmann::ordered_json to_json(const ScoredStrategy& s);
/// Inverse of to_json; programs are re-parsed and checked.
ScoredStrategy scored_from_json(const nlohmann::ordered_json& j);

/// One JSON object per line, fields in a fixed order.
void write_results_jsonl(std::ostream& out, const std::vector<ScoredStrategy>& results);
std::vector<ScoredStrategy> read_results_jsonl(std::istream& in);

nlohmann::ordered_json value_report(const Strategy& s, const ValueEstimate& v);

/// normalized_value,log_prior,m1,q1,f,g,on_frontier,beta,chain,step_found
void write_pareto_csv(std::ostream& out, const std::vector<ScoredStrategy>& points);

nlohmann::ordered_json to_json(const PolicyStateMachine& m);
void write_dot(std::ostream& out, const PolicyStateMachine& m);

/// target,m1,q1,f,g,deterministic,method,raw,normalized,stderr,wsls_equivalent,best_in_target
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

nlohmann::ordered_json to_json(const HorizonFit& fit);

/// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_field(const std::string& s);

} // namespace stratind
