#include "dynaopt/analysis.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

namespace dynaopt {

int rule_degree(const Rule& r) { return static_cast<int>(rule_vars(r).size()); }

int program_degree(const Program& p) {
  Program live = dead_rule_elimination(p);
  int d = 0;
  for (const auto& r : live.rules) d = std::max(d, rule_degree(r));
  return d;
}

std::vector<EliminableVar> elimvar(const Rule& r) {
  std::set<std::string> head_vars = vars(r.head);
  std::map<std::string, std::vector<int>> occ;
  for (size_t k = 0; k < r.body.size(); ++k)
    for (const auto& v : vars(r.body[k])) occ[v].push_back(static_cast<int>(k));
  std::vector<EliminableVar> out;
  for (auto& [v, subgoals] : occ) {
    if (head_vars.count(v)) continue;
    if (subgoals.size() == r.body.size()) continue;  // occurs in every factor
    out.push_back({v, std::move(subgoals)});
  }
  return out;  // map iteration => sorted by variable name
}

std::vector<int> tie_break_key(const Program& p) {
  Program live = dead_rule_elimination(p);
  std::vector<int> key;
  key.reserve(live.rules.size());
  for (const auto& r : live.rules) key.push_back(rule_degree(r));
  std::sort(key.begin(), key.end(), std::greater<int>());
  return key;
}

double relative_degree(int d_start, int d_found, int d_opt) {
  if (!(d_opt <= d_found && d_found <= d_start))
    throw std::invalid_argument("relative_degree requires d_opt <= d_found <= d_start");
  if (d_start == d_opt) return 1.0;
  return static_cast<double>(d_start - d_found) / (d_start - d_opt);
}

std::string analyze_json(const Program& p) {
  nlohmann::json j;
  j["rules"] = nlohmann::json::array();
  for (size_t i = 0; i < p.rules.size(); ++i) {
    const Rule& r = p.rules[i];
    nlohmann::json jr;
    jr["index"] = i;
    jr["text"] = render_rule(r, p.agg);
    jr["degree"] = rule_degree(r);
    jr["eliminable"] = nlohmann::json::array();
    for (const auto& ev : elimvar(r))
      jr["eliminable"].push_back({{"var", ev.var}, {"subgoals", ev.subgoals}});
    j["rules"].push_back(std::move(jr));
  }
  j["degree"] = program_degree(p);
  j["tie_break_key"] = tie_break_key(p);
  return j.dump(2);
}

}  // namespace dynaopt
