#pragma once

// Grid data model: buses, branches, generators, admittance assembly and the
// boundary-bus merge used for single-interconnection studies.
//
// All quantities are per-unit on the case's MVA base. Branches are series
// impedances with zero shunt elements, so every row of the bus admittance
// matrix sums to zero.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "flexor/common.hpp"

namespace flexor {

inline constexpr double default_v_min = 0.95;
inline constexpr double default_v_max = 1.05;
inline constexpr double default_alpha = 0.95;

struct Bus {
  int id = 0;
  double p_demand = 0.0;
  double q_demand = 0.0;
  double v_min = default_v_min;
  double v_max = default_v_max;
  bool is_boundary = false;
};

struct Branch {
  int from = 0;
  int to = 0;
  double r = 0.0;
  double x = 0.0;
  bool is_interconnection = false;
};

struct Generator {
  int bus = 0;
  double f_max = 0.0;   // active feed-in capacity
  double s_max = 0.0;   // apparent power rating
  double alpha = default_alpha;
};

struct GridCase {
  std::string name;
  double base_mva = 0.0;
  std::vector<Bus> buses;          // sorted by id
  std::vector<Branch> branches;    // file order
  std::vector<Generator> generators;  // sorted by bus id

  int index_of(int bus_id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
      if (buses[i].id == bus_id) return static_cast<int>(i);
    throw_data("unknown bus id " + std::to_string(bus_id));
  }

  const Bus& bus(int bus_id) const { return buses[index_of(bus_id)]; }

  std::vector<int> boundary_ids() const {
    std::vector<int> ids;
    for (const Bus& b : buses)
      if (b.is_boundary) ids.push_back(b.id);
    return ids;
  }

  std::vector<Branch> interconnections() const {
    std::vector<Branch> out;
    for (const Branch& br : branches)
      if (br.is_interconnection) out.push_back(br);
    return out;
  }

  const Generator* generator_at(int bus_id) const {
    for (const Generator& g : generators)
      if (g.bus == bus_id) return &g;
    return nullptr;
  }
};

// Dense bus admittance matrix Y = G + jB over the case's bus ordering.
struct AdmittanceMatrix {
  Eigen::MatrixXd g;
  Eigen::MatrixXd b;
};

namespace detail {

inline void check_known_keys(const nlohmann::json& obj,
                             std::initializer_list<const char*> known,
                             const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known)
      if (it.key() == k) ok = true;
    if (!ok) throw_data("unknown key \"" + it.key() + "\" in " + where);
  }
}

inline double require_number(const nlohmann::json& obj, const char* key,
                             const std::string& where) {
  if (!obj.contains(key))
    throw_data("missing \"" + std::string(key) + "\" in " + where);
  if (!obj[key].is_number())
    throw_data("\"" + std::string(key) + "\" must be a number in " + where);
  return obj[key].get<double>();
}

inline double optional_number(const nlohmann::json& obj, const char* key,
                              double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number())
    throw_data("\"" + std::string(key) + "\" must be a number in " + where);
  return obj[key].get<double>();
}

inline int require_int(const nlohmann::json& obj, const char* key,
                       const std::string& where) {
  if (!obj.contains(key))
    throw_data("missing \"" + std::string(key) + "\" in " + where);
  if (!obj[key].is_number_integer())
    throw_data("\"" + std::string(key) + "\" must be an integer in " + where);
  return obj[key].get<int>();
}

inline bool optional_bool(const nlohmann::json& obj, const char* key,
                          bool fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_boolean())
    throw_data("\"" + std::string(key) + "\" must be a boolean in " + where);
  return obj[key].get<bool>();
}

}  // namespace detail

// Validates model invariants beyond the raw schema. Throws Error(data) with
// the offending element named.
inline void validate_case(const GridCase& gc) {
  if (gc.name.empty()) throw_data("case name must be non-empty");
  if (!(gc.base_mva > 0.0)) throw_data("base_mva must be positive");
  if (gc.buses.empty()) throw_data("case has no buses");

  std::set<int> ids;
  for (const Bus& b : gc.buses) {
    const std::string where = "bus " + std::to_string(b.id);
    if (!ids.insert(b.id).second) throw_data("duplicate " + where);
    if (!(b.v_min > 0.0)) throw_data(where + ": v_min must be positive");
    if (!(b.v_min <= b.v_max)) throw_data(where + ": v_min exceeds v_max");
    if (b.is_boundary && (b.p_demand != 0.0 || b.q_demand != 0.0))
      throw_data(where + ": boundary buses carry no demand");
  }

  std::vector<int> boundary = gc.boundary_ids();
  if (boundary.empty()) throw_data("case has no boundary bus");

  for (const Branch& br : gc.branches) {
    const std::string where =
        "branch (" + std::to_string(br.from) + "," + std::to_string(br.to) + ")";
    if (!ids.count(br.from) || !ids.count(br.to))
      throw_data(where + ": endpoint bus does not exist");
    if (br.from == br.to) throw_data(where + ": from and to coincide");
    if (br.r < 0.0) throw_data(where + ": negative resistance");
    if (br.r == 0.0 && br.x == 0.0) throw_data(where + ": zero series impedance");
    const bool from_b = gc.bus(br.from).is_boundary;
    const bool to_b = gc.bus(br.to).is_boundary;
    if (br.is_interconnection) {
      if (!from_b) throw_data(where + ": interconnection must start at a boundary bus");
      if (to_b) throw_data(where + ": interconnection must end inside the grid");
    } else if (from_b || to_b) {
      throw_data(where + ": only interconnection branches may touch boundary buses");
    }
  }

  for (const Generator& g : gc.generators) {
    const std::string where = "generator at bus " + std::to_string(g.bus);
    if (!ids.count(g.bus)) throw_data(where + ": bus does not exist");
    if (gc.bus(g.bus).is_boundary) throw_data(where + ": boundary buses carry no generation");
    if (g.f_max < 0.0) throw_data(where + ": negative f_max");
    if (g.s_max < g.f_max) throw_data(where + ": s_max below f_max");
    if (!(g.alpha > 0.0 && g.alpha <= 1.0)) throw_data(where + ": alpha outside (0, 1]");
  }
  std::set<int> gen_buses;
  for (const Generator& g : gc.generators)
    if (!gen_buses.insert(g.bus).second)
      throw_data("more than one generator at bus " + std::to_string(g.bus));

  // Connectivity: breadth-first search from the first bus.
  const int n = static_cast<int>(gc.buses.size());
  std::vector<std::vector<int>> adj(n);
  for (const Branch& br : gc.branches) {
    const int a = gc.index_of(br.from);
    const int b = gc.index_of(br.to);
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<bool> seen(n, false);
  std::vector<int> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const int k = stack.back();
    stack.pop_back();
    for (int l : adj[k])
      if (!seen[l]) {
        seen[l] = true;
        stack.push_back(l);
      }
  }
  std::vector<int> island;
  for (int k = 0; k < n; ++k)
    if (!seen[k]) island.push_back(gc.buses[k].id);
  if (!island.empty()) {
    std::string msg = "grid is not connected; island {";
    for (std::size_t i = 0; i < island.size(); ++i)
      msg += (i ? "," : "") + std::to_string(island[i]);
    throw_data(msg + "}");
  }
}

// Parses a case file from JSON text, applies defaults and validates.
inline GridCase parse_case(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw_data(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw_data("case file must be a JSON object");
  detail::check_known_keys(j, {"name", "base_mva", "buses", "branches", "generators"},
                           "case");
  GridCase gc;
  if (!j.contains("name") || !j["name"].is_string())
    throw_data("case requires a string \"name\"");
  gc.name = j["name"].get<std::string>();
  gc.base_mva = detail::require_number(j, "base_mva", "case");
  if (!j.contains("buses") || !j["buses"].is_array())
    throw_data("case requires a \"buses\" array");
  if (!j.contains("branches") || !j["branches"].is_array())
    throw_data("case requires a \"branches\" array");

  for (const auto& jb : j["buses"]) {
    if (!jb.is_object()) throw_data("bus entries must be objects");
    Bus b;
    b.id = detail::require_int(jb, "id", "bus entry");
    const std::string where = "bus " + std::to_string(b.id);
    detail::check_known_keys(
        jb, {"id", "p_demand", "q_demand", "v_min", "v_max", "is_boundary"}, where);
    b.p_demand = detail::optional_number(jb, "p_demand", 0.0, where);
    b.q_demand = detail::optional_number(jb, "q_demand", 0.0, where);
    b.v_min = detail::optional_number(jb, "v_min", default_v_min, where);
    b.v_max = detail::optional_number(jb, "v_max", default_v_max, where);
    b.is_boundary = detail::optional_bool(jb, "is_boundary", false, where);
    gc.buses.push_back(b);
  }
  std::sort(gc.buses.begin(), gc.buses.end(),
            [](const Bus& a, const Bus& b) { return a.id < b.id; });

  for (const auto& jb : j["branches"]) {
    if (!jb.is_object()) throw_data("branch entries must be objects");
    Branch br;
    br.from = detail::require_int(jb, "from", "branch entry");
    br.to = detail::require_int(jb, "to", "branch entry");
    const std::string where =
        "branch (" + std::to_string(br.from) + "," + std::to_string(br.to) + ")";
    detail::check_known_keys(jb, {"from", "to", "r", "x", "is_interconnection"}, where);
    br.r = detail::optional_number(jb, "r", 0.0, where);
    br.x = detail::require_number(jb, "x", where);
    br.is_interconnection = detail::optional_bool(jb, "is_interconnection", false, where);
    gc.branches.push_back(br);
  }

  if (j.contains("generators")) {
    if (!j["generators"].is_array()) throw_data("\"generators\" must be an array");
    for (const auto& jg : j["generators"]) {
      if (!jg.is_object()) throw_data("generator entries must be objects");
      Generator g;
      g.bus = detail::require_int(jg, "bus", "generator entry");
      const std::string where = "generator at bus " + std::to_string(g.bus);
      detail::check_known_keys(jg, {"bus", "f_max", "s_max", "alpha"}, where);
      g.f_max = detail::require_number(jg, "f_max", where);
      g.s_max = detail::require_number(jg, "s_max", where);
      g.alpha = detail::optional_number(jg, "alpha", default_alpha, where);
      gc.generators.push_back(g);
    }
    std::sort(gc.generators.begin(), gc.generators.end(),
              [](const Generator& a, const Generator& b) { return a.bus < b.bus; });
  }

  validate_case(gc);
  return gc;
}

// Serializes a case back to JSON text; parse_case(serialize_case(c)) restores
// every field.
inline std::string serialize_case(const GridCase& gc) {
  nlohmann::ordered_json j;
  j["name"] = gc.name;
  j["base_mva"] = gc.base_mva;
  j["buses"] = nlohmann::ordered_json::array();
  for (const Bus& b : gc.buses) {
    nlohmann::ordered_json jb;
    jb["id"] = b.id;
    jb["p_demand"] = b.p_demand;
    jb["q_demand"] = b.q_demand;
    jb["v_min"] = b.v_min;
    jb["v_max"] = b.v_max;
    jb["is_boundary"] = b.is_boundary;
    j["buses"].push_back(jb);
  }
  j["branches"] = nlohmann::ordered_json::array();
  for (const Branch& br : gc.branches) {
    nlohmann::ordered_json jb;
    jb["from"] = br.from;
    jb["to"] = br.to;
    jb["r"] = br.r;
    jb["x"] = br.x;
    jb["is_interconnection"] = br.is_interconnection;
    j["branches"].push_back(jb);
  }
  j["generators"] = nlohmann::ordered_json::array();
  for (const Generator& g : gc.generators) {
    nlohmann::ordered_json jg;
    jg["bus"] = g.bus;
    jg["f_max"] = g.f_max;
    jg["s_max"] = g.s_max;
    jg["alpha"] = g.alpha;
    j["generators"].push_back(jg);
  }
  return j.dump(2) + "\n";
}

// Series admittance of one branch: y = 1 / (r + jx).
inline std::pair<double, double> branch_admittance(const Branch& br) {
  const double denom = br.r * br.r + br.x * br.x;
  return {br.r / denom, -br.x / denom};
}

// Assembles the dense bus admittance matrix. Diagonal entries accumulate the
// incident branch admittances; off-diagonals carry their negatives, so the
// matrix is symmetric and has exact zero row sums.
inline AdmittanceMatrix build_admittance(const GridCase& gc) {
  const int n = static_cast<int>(gc.buses.size());
  AdmittanceMatrix y;
  y.g = Eigen::MatrixXd::Zero(n, n);
  y.b = Eigen::MatrixXd::Zero(n, n);
  for (const Branch& br : gc.branches) {
    const auto [gkl, bkl] = branch_admittance(br);
    const int k = gc.index_of(br.from);
    const int l = gc.index_of(br.to);
    y.g(k, k) += gkl;
    y.g(l, l) += gkl;
    y.g(k, l) -= gkl;
    y.g(l, k) -= gkl;
    y.b(k, k) += bkl;
    y.b(l, l) += bkl;
    y.b(k, l) -= bkl;
    y.b(l, k) -= bkl;
  }
  return y;
}

// Fuses all boundary buses into the lowest-id one. Branches re-target the
// fused bus; voltage bounds intersect; demands (all zero on boundary buses)
// accumulate. The result is validated before returning.
inline GridCase merge_boundary_buses(const GridCase& gc) {
  std::vector<int> boundary = gc.boundary_ids();
  if (boundary.empty()) throw_data("merge requires a boundary bus");
  const int fused = *std::min_element(boundary.begin(), boundary.end());

  GridCase out;
  out.name = gc.name + "_merged";
  out.base_mva = gc.base_mva;
  Bus fused_bus;
  fused_bus.id = fused;
  fused_bus.is_boundary = true;
  fused_bus.v_min = 0.0;
  fused_bus.v_max = 1e9;
  bool fused_init = false;
  for (const Bus& b : gc.buses) {
    if (!b.is_boundary) {
      out.buses.push_back(b);
      continue;
    }
    fused_bus.p_demand += b.p_demand;
    fused_bus.q_demand += b.q_demand;
    fused_bus.v_min = fused_init ? std::max(fused_bus.v_min, b.v_min) : b.v_min;
    fused_bus.v_max = fused_init ? std::min(fused_bus.v_max, b.v_max) : b.v_max;
    fused_init = true;
  }
  out.buses.push_back(fused_bus);
  std::sort(out.buses.begin(), out.buses.end(),
            [](const Bus& a, const Bus& b) { return a.id < b.id; });

  auto retarget = [&](int id) {
    return gc.bus(id).is_boundary ? fused : id;
  };
  for (Branch br : gc.branches) {
    br.from = retarget(br.from);
    br.to = retarget(br.to);
    out.branches.push_back(br);
  }
  out.generators = gc.generators;
  validate_case(out);
  return out;
}

}  // namespace flexor
