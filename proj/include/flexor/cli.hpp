#pragma once

// Command implementations behind the flexor executable. Each command is a
// pure function of (case file, config): artifacts are written with stable
// formatting so reruns are byte-identical.

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "flexor/sampler.hpp"
#include "flexor/svg.hpp"

namespace flexor {

struct RunConfig {
  std::string command;
  std::string case_path;
  std::string variant = "free";  // free|fixed_angle|fixed_all|merged_bus|
                                 // sum|sum_fixed_angle|sum_fixed_all
  std::string coupling;          // full7d|pq|merged (defaulted per command)
  std::string dims;              // "a,b" shadow coordinates
  std::string out_dir = ".";
  int n_grid = 15;
  double alpha = -1.0;  // < 0: keep case values
  double c1 = 1.0;
  double c2 = 1.0;
  double delta = -1.0;  // < 0: per-command default
  std::uint64_t seed = 12345;
  bool check_nesting = false;
};

namespace cli_detail {

inline GridCase load_case(const RunConfig& cfg) {
  if (cfg.case_path.empty()) throw_usage("--case is required");
  std::ifstream in(cfg.case_path, std::ios::binary);
  if (!in) throw_data("cannot read case file: " + cfg.case_path);
  std::stringstream ss;
  ss << in.rdbuf();
  GridCase gc = parse_case(ss.str());
  if (cfg.alpha > 0.0) {
    if (cfg.alpha >= 1.5707963267948966)
      throw_usage("--alpha must lie in (0, pi/2)");
    for (Generator& g : gc.generators) g.alpha = cfg.alpha;
  }
  return gc;
}

inline void write_text(const RunConfig& cfg, const std::string& name,
                       const std::string& content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  const fs::path path = fs::path(cfg.out_dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_data("cannot write artifact: " + path.string());
  out << content;
  if (!out) throw_data("failed writing artifact: " + path.string());
  FLEXOR_LOG_INFO("wrote %s", path.string().c_str());
}

struct VariantPlan {
  bool merge = false;            // fuse the boundary buses first
  bool sum = false;              // aggregated p_sum/q_sum region
  Variant variant = Variant::free;
  Variant table = Variant::free; // underlying case for sum regions
};

inline VariantPlan parse_variant(const std::string& v) {
  VariantPlan plan;
  if (v == "free") {
    plan.variant = Variant::free;
  } else if (v == "fixed_angle") {
    plan.variant = Variant::fixed_angle;
  } else if (v == "fixed_all") {
    plan.variant = Variant::fixed_all;
  } else if (v == "merged_bus") {
    plan.merge = true;
    plan.variant = Variant::merged_bus;
  } else if (v == "sum") {
    plan.sum = true;
    plan.variant = Variant::aggregated_sum;
    plan.table = Variant::free;
  } else if (v == "sum_fixed_angle") {
    plan.sum = true;
    plan.variant = Variant::aggregated_sum;
    plan.table = Variant::fixed_angle;
  } else if (v == "sum_fixed_all") {
    plan.sum = true;
    plan.variant = Variant::aggregated_sum;
    plan.table = Variant::fixed_all;
  } else {
    throw_usage("unknown variant \"" + v +
                "\" (expected free, fixed_angle, fixed_all, merged_bus, sum, "
                "sum_fixed_angle or sum_fixed_all)");
  }
  return plan;
}

inline CouplingSpec pick_coupling(const GridCase& gc, const std::string& name) {
  if (name == "full7d") return standard_coupling_7d(gc);
  if (name == "merged") return standard_coupling_merged(gc);
  if (name == "pq") return standard_coupling_pq(gc);
  throw_usage("unknown coupling \"" + name +
              "\" (expected full7d, pq or merged)");
}

inline std::pair<std::string, std::string> parse_dims(const std::string& dims) {
  const std::size_t comma = dims.find(',');
  if (dims.empty() || comma == std::string::npos || comma == 0 ||
      comma + 1 >= dims.size())
    throw_usage("--dims expects two labels, e.g. --dims p_1_2,q_1_2");
  return {dims.substr(0, comma), dims.substr(comma + 1)};
}

inline int dim_index(const HPolyhedron& poly, const std::string& label) {
  for (std::size_t j = 0; j < poly.vars.size(); ++j)
    if (poly.vars[j] == label) return static_cast<int>(j);
  std::string valid;
  for (std::size_t j = 0; j < poly.vars.size(); ++j)
    valid += (j ? ", " : "") + poly.vars[j];
  throw_data("unknown dimension label \"" + label + "\" (valid: " + valid +
             ")");
}

inline std::string operating_point_csv(const GridCase& gc,
                                       const OperatingPoint& op) {
  std::string out = "bus,v,theta,p,q\n";
  for (std::size_t k = 0; k < gc.buses.size(); ++k) {
    const int i = static_cast<int>(k);
    out += std::to_string(gc.buses[k].id) + "," + format_full(op.state.v(i)) +
           "," + format_full(op.state.theta(i)) + "," +
           format_full(op.injection.p(i)) + "," +
           format_full(op.injection.q(i)) + "\n";
  }
  return out;
}

inline std::string stats_json(const ForResult& res) {
  nlohmann::ordered_json j;
  j["variant"] = variant_name(res.variant);
  if (res.variant == Variant::aggregated_sum)
    j["table_case"] = variant_name(res.table_case);
  j["coupling"] = nlohmann::ordered_json::array();
  for (const std::string& v : res.poly.vars) j["coupling"].push_back(v);
  j["eq_rows_eliminated"] = res.stats.eq_rows_eliminated;
  j["ineq_rows_initial"] = res.stats.ineq_rows_initial;
  j["ineq_rows_final"] = res.stats.ineq_rows_final;
  j["fm_steps"] = res.stats.fm_steps;
  j["fm_max_rows"] = res.stats.fm_max_rows;
  j["rows"] = res.poly.num_ineq();
  j["equalities"] = res.poly.num_eq();
  j["warnings"] = nlohmann::ordered_json::array();
  for (const std::string& w : res.stats.warnings) j["warnings"].push_back(w);
  j["op_hash"] = res.op_hash;
  return j.dump(2) + "\n";
}

// The variant-tagged region used by compute-for and shadow: applies the
// boundary variant rows for the table cases and handles the merged topology.
inline ForResult region_for_plan(const GridCase& gc, const VariantPlan& plan,
                                 const RunConfig& cfg, GridCase* used_case) {
  GridCase work = plan.merge ? merge_boundary_buses(gc) : gc;
  const OperatingPoint op = compute_operating_point(work, cfg.c1, cfg.c2);
  const DsoFeasibleSet set = build_feasible_set(work, op);
  if (used_case != nullptr) *used_case = work;
  if (plan.sum) return compute_sum_for(set, plan.table);
  if (plan.merge)
    return compute_for(set, standard_coupling_merged(work), Variant::merged_bus);
  const std::string cname = cfg.coupling.empty() ? "full7d" : cfg.coupling;
  const DsoFeasibleSet varset = apply_boundary_variant(set, plan.variant);
  return compute_for(varset, pick_coupling(work, cname), plan.variant);
}

inline std::vector<std::array<double, 2>> shadow_outline(const Shadow2d& sh) {
  return sh.vertices;
}

}  // namespace cli_detail

// ---------------------------------------------------------------------------
// Commands

inline int cmd_validate(const RunConfig& cfg) {
  const GridCase gc = cli_detail::load_case(cfg);
  std::string line = std::to_string(gc.buses.size()) + " buses, boundary {";
  const std::vector<int> bids = gc.boundary_ids();
  for (std::size_t i = 0; i < bids.size(); ++i)
    line += (i ? "," : "") + std::to_string(bids[i]);
  line += "}, generators {";
  for (std::size_t i = 0; i < gc.generators.size(); ++i)
    line += (i ? "," : "") + std::to_string(gc.generators[i].bus);
  line += "}";
  std::printf("%s\n", line.c_str());
  std::printf("case %s: %zu branches, %zu interconnections, base %s MVA\n",
              gc.name.c_str(), gc.branches.size(),
              gc.interconnections().size(), format_full(gc.base_mva).c_str());
  return 0;
}

inline int cmd_compute_for(const RunConfig& cfg) {
  const GridCase gc = cli_detail::load_case(cfg);
  const cli_detail::VariantPlan plan = cli_detail::parse_variant(cfg.variant);
  GridCase used;
  const ForResult res = cli_detail::region_for_plan(gc, plan, cfg, &used);
  const OperatingPoint op = compute_operating_point(used, cfg.c1, cfg.c2);

  cli_detail::write_text(cfg, "for_" + cfg.variant + ".csv", write_for_csv(res));
  cli_detail::write_text(cfg, "op.csv", cli_detail::operating_point_csv(used, op));
  cli_detail::write_text(cfg, "stats.json", cli_detail::stats_json(res));
  std::printf("%s region: %d inequality rows, %d equality rows, %d coordinates\n",
              cfg.variant.c_str(), res.poly.num_ineq(), res.poly.num_eq(),
              res.poly.dim());
  return 0;
}

inline int cmd_shadow(const RunConfig& cfg) {
  const GridCase gc = cli_detail::load_case(cfg);
  const cli_detail::VariantPlan plan = cli_detail::parse_variant(cfg.variant);

  struct Entry {
    std::string label;
    std::string color;
    Shadow2d shadow;
  };
  std::vector<Entry> entries;
  std::string dim_x, dim_y;

  if (plan.sum) {
    // Overlay of the three aggregated table cases.
    std::tie(dim_x, dim_y) = cfg.dims.empty()
                                 ? std::pair<std::string, std::string>{"p_sum",
                                                                       "q_sum"}
                                 : cli_detail::parse_dims(cfg.dims);
    const OperatingPoint op = compute_operating_point(gc, cfg.c1, cfg.c2);
    const DsoFeasibleSet set = build_feasible_set(gc, op);
    const char* colors[3] = {"#1f6fb4", "#e07b39", "#4a9d4a"};
    const Variant tables[3] = {Variant::free, Variant::fixed_angle,
                               Variant::fixed_all};
    const char* labels[3] = {"free", "fixed_angle", "fixed_all"};
    for (int i = 0; i < 3; ++i) {
      const ForResult res = compute_sum_for(set, tables[i]);
      cli_detail::dim_index(res.poly, dim_x);
      cli_detail::dim_index(res.poly, dim_y);
      entries.push_back(
          {labels[i], colors[i], shadow_2d(res.poly, dim_x, dim_y)});
    }
  } else {
    if (cfg.dims.empty())
      throw_usage("--dims is required for shadow (e.g. --dims p_1_2,q_1_2)");
    std::tie(dim_x, dim_y) = cli_detail::parse_dims(cfg.dims);
    const ForResult res = cli_detail::region_for_plan(gc, plan, cfg, nullptr);
    cli_detail::dim_index(res.poly, dim_x);
    cli_detail::dim_index(res.poly, dim_y);
    entries.push_back(
        {cfg.variant, "#1f6fb4", shadow_2d(res.poly, dim_x, dim_y)});
  }

  std::string csv = "variant," + dim_x + "," + dim_y + "\n";
  SvgPlot plot;
  plot.title = "FOR shadow (" + dim_x + ", " + dim_y + ")";
  plot.x_label = dim_x + " [p.u.]";
  plot.y_label = dim_y + " [p.u.]";
  for (const Entry& e : entries) {
    for (const auto& v : e.shadow.vertices)
      csv += e.label + "," + format_full(v[0]) + "," + format_full(v[1]) + "\n";
    SvgSeries s;
    s.label = e.label;
    s.color = e.color;
    s.polygon = cli_detail::shadow_outline(e.shadow);
    plot.series.push_back(std::move(s));
  }

  const std::string stem = "shadow_" + dim_x + "_" + dim_y;
  cli_detail::write_text(cfg, stem + ".csv", csv);
  cli_detail::write_text(cfg, stem + ".svg", render_svg(plot));
  for (const Entry& e : entries)
    std::printf("%s shadow (%s, %s): %zu vertices\n", e.label.c_str(),
                dim_x.c_str(), dim_y.c_str(), e.shadow.vertices.size());
  return 0;
}

inline int cmd_sample_ac(const RunConfig& cfg) {
  const GridCase gc = cli_detail::load_case(cfg);
  const std::string cname = cfg.coupling.empty() ? "merged" : cfg.coupling;

  if (cname == "full7d") {
    // Coordinate-extreme sampling of the 7D region (overlay on the two
    // active-power coordinates).
    const CouplingSpec c7 = standard_coupling_7d(gc);
    const std::vector<AcSample> samples = sample_extremes_7d(gc, c7);
    const OperatingPoint op = compute_operating_point(gc, cfg.c1, cfg.c2);
    const DsoFeasibleSet set = build_feasible_set(gc, op);
    const ForResult res = compute_for(set, c7);

    const double delta = cfg.delta > 0.0 ? cfg.delta : 0.05;
    const Eigen::VectorXd ranges = coordinate_ranges(res.poly);
    const HPolyhedron grown = inflate(res.poly, delta * ranges);

    int p_first = -1, p_second = -1;
    for (std::size_t j = 0; j < c7.entries.size(); ++j)
      if (c7.entries[j].kind == CouplingKind::branch_p)
        (p_first < 0 ? p_first : p_second) = static_cast<int>(j);
    const std::string nx = c7.entries[static_cast<std::size_t>(p_first)].name();
    const std::string ny = c7.entries[static_cast<std::size_t>(p_second)].name();

    std::string csv = "label,converged,mismatch";
    for (const CouplingEntry& e : c7.entries) csv += "," + e.name();
    csv += "\n";
    int converged = 0, outside = 0;
    std::vector<std::array<double, 2>> pts;
    for (const AcSample& s : samples) {
      csv += s.objective + "," + (s.converged ? "1" : "0") + "," +
             format_full(s.mismatch);
      for (int j = 0; j < s.z.size(); ++j) csv += "," + format_full(s.z(j));
      csv += "\n";
      if (!s.converged) continue;
      ++converged;
      if (!contains(grown, s.z, tol::membership).inside) ++outside;
      pts.push_back({s.z(p_first), s.z(p_second)});
    }
    std::vector<std::array<double, 2>> hull = hull_2d(std::move(pts));

    std::string hull_csv = nx + "," + ny + "\n";
    for (const auto& v : hull)
      hull_csv += format_full(v[0]) + "," + format_full(v[1]) + "\n";

    SvgPlot plot;
    plot.title = "7D FOR extremes vs linearized region";
    plot.x_label = nx + " [p.u.]";
    plot.y_label = ny + " [p.u.]";
    SvgSeries lin;
    lin.label = "linearized region";
    lin.polygon = shadow_2d(res.poly, nx, ny).vertices;
    plot.series.push_back(std::move(lin));
    SvgSeries samp;
    samp.label = "AC extreme samples";
    samp.color = "#e07b39";
    samp.polygon = hull;
    for (const AcSample& s : samples)
      if (s.converged) samp.points.push_back({s.z(p_first), s.z(p_second)});
    plot.series.push_back(std::move(samp));

    cli_detail::write_text(cfg, "samples.csv", csv);
    cli_detail::write_text(cfg, "hull.csv", hull_csv);
    cli_detail::write_text(cfg, "samples.svg", render_svg(plot));
    std::printf(
        "7d extremes: %zu samples, %d converged, %d outside the %.3g-inflated "
        "region\n",
        samples.size(), converged, outside, delta);
    return 0;
  }

  if (cname != "merged")
    throw_usage("sample-ac supports --coupling merged or full7d");

  const GridCase merged = merge_boundary_buses(gc);
  const CouplingSpec mc = standard_coupling_merged(merged);
  const SampledFor sampled = sample_boundary(merged, mc, cfg.n_grid);
  const OperatingPoint op = compute_operating_point(merged, cfg.c1, cfg.c2);
  const DsoFeasibleSet set = build_feasible_set(merged, op);
  const ForResult res = compute_for(set, mc, Variant::merged_bus);

  const std::string nx = res.poly.vars[0], ny = res.poly.vars[1];
  std::string csv = "label,converged,pinned,mismatch," + nx + "," + ny + "\n";
  int converged = 0;
  for (const AcSample& s : sampled.samples) {
    csv += s.objective + "," + (s.converged ? "1" : "0") + "," +
           (s.pinned ? "1" : "0") + "," + format_full(s.mismatch) + "," +
           format_full(s.z(0)) + "," + format_full(s.z(1)) + "\n";
    converged += s.converged ? 1 : 0;
  }
  std::string hull_csv = nx + "," + ny + "\n";
  for (const auto& v : sampled.hull)
    hull_csv += format_full(v[0]) + "," + format_full(v[1]) + "\n";

  SvgPlot plot;
  plot.title = "Merged-bus FOR vs AC sampling";
  plot.x_label = nx + " [p.u.]";
  plot.y_label = ny + " [p.u.]";
  SvgSeries lin;
  lin.label = "linearized region";
  lin.polygon = shadow_2d(res.poly, nx, ny).vertices;
  plot.series.push_back(std::move(lin));
  SvgSeries samp;
  samp.label = "AC sampled hull";
  samp.color = "#e07b39";
  samp.polygon = sampled.hull;
  for (const AcSample& s : sampled.samples)
    if (s.converged) samp.points.push_back({s.z(0), s.z(1)});
  plot.series.push_back(std::move(samp));

  cli_detail::write_text(cfg, "samples.csv", csv);
  cli_detail::write_text(cfg, "hull.csv", hull_csv);
  cli_detail::write_text(cfg, "samples.svg", render_svg(plot));
  std::printf("merged sampling: %zu samples, %d converged, hull %zu vertices\n",
              sampled.samples.size(), converged, sampled.hull.size());
  return 0;
}

inline int cmd_compare(const RunConfig& cfg) {
  const GridCase gc = cli_detail::load_case(cfg);

  if (cfg.check_nesting) {
    // Table-case ordering: support functions must satisfy
    // fixed_all <= fixed_angle <= free in every direction.
    const OperatingPoint op = compute_operating_point(gc, cfg.c1, cfg.c2);
    const DsoFeasibleSet set = build_feasible_set(gc, op);
    const ForResult f1 = compute_sum_for(set, Variant::free);
    const ForResult f2 = compute_sum_for(set, Variant::fixed_angle);
    const ForResult f3 = compute_sum_for(set, Variant::fixed_all);

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> nd;
    double worst21 = 0.0, worst32 = 0.0;
    const int n_dirs = 100;
    for (int i = 0; i < n_dirs; ++i) {
      Eigen::VectorXd d(2);
      d << nd(rng), nd(rng);
      if (d.norm() < 1e-9) continue;
      d /= d.norm();
      const double h1 = support(f1.poly, d).value;
      const double h2 = support(f2.poly, d).value;
      const double h3 = support(f3.poly, d).value;
      worst21 = std::max(worst21, h2 - h1);
      worst32 = std::max(worst32, h3 - h2);
    }
    const double tolerance = 1e-6;
    const bool pass = worst21 <= tolerance && worst32 <= tolerance;

    nlohmann::ordered_json j;
    j["case"] = gc.name;
    j["mode"] = "nesting";
    j["directions"] = n_dirs;
    j["seed"] = cfg.seed;
    j["tolerance"] = tolerance;
    j["worst_fixed_angle_minus_free"] = worst21;
    j["worst_fixed_all_minus_fixed_angle"] = worst32;
    j["pass"] = pass;
    cli_detail::write_text(cfg, "compare.json", j.dump(2) + "\n");
    std::printf("fixed_angle <= free: %s (worst exceedance %s)\n",
                worst21 <= tolerance ? "PASS" : "FAIL",
                format_full(worst21).c_str());
    std::printf("fixed_all <= fixed_angle: %s (worst exceedance %s)\n",
                worst32 <= tolerance ? "PASS" : "FAIL",
                format_full(worst32).c_str());
    return pass ? 0 : 2;
  }

  const GridCase merged = merge_boundary_buses(gc);
  const CouplingSpec mc = standard_coupling_merged(merged);
  const OperatingPoint op = compute_operating_point(merged, cfg.c1, cfg.c2);
  const DsoFeasibleSet set = build_feasible_set(merged, op);
  const ForResult res = compute_for(set, mc, Variant::merged_bus);
  const SampledFor sampled = sample_boundary(merged, mc, cfg.n_grid);
  const double inflation = cfg.delta > 0.0 ? cfg.delta : 0.02;
  const CompareReport rep = compare_for(res, sampled, inflation);

  nlohmann::ordered_json j;
  j["case"] = gc.name;
  j["mode"] = "merged_bus";
  j["n_grid"] = cfg.n_grid;
  j["inflation_fraction"] = rep.inflation_fraction;
  j["samples_total"] = rep.samples_total;
  j["samples_converged"] = rep.samples_converged;
  j["samples_inside"] = rep.samples_inside;
  j["containment_fraction"] = rep.containment_fraction;
  j["area_linear"] = rep.area_linear;
  j["area_sampled"] = rep.area_sampled;
  j["area_ratio"] = rep.area_ratio;
  j["max_outward_distance"] = rep.max_outward_distance;
  j["hull_vertices_outside_inflated"] = rep.hull_vertices_outside_inflated;
  j["local_optimum_warnings"] = rep.local_optimum_warnings;
  cli_detail::write_text(cfg, "compare.json", j.dump(2) + "\n");
  std::printf(
      "containment %s (%d/%d converged inside), area ratio %s, max outward "
      "%s\n",
      format_full(rep.containment_fraction).c_str(), rep.samples_inside,
      rep.samples_converged, format_full(rep.area_ratio).c_str(),
      format_full(rep.max_outward_distance).c_str());
  return 0;
}

// Dispatch plus the exit-code contract: 0 success, 1 usage, 2 data,
// 3 numerical.
inline int run_cli(const RunConfig& cfg) {
  try {
    if (cfg.command == "validate") return cmd_validate(cfg);
    if (cfg.command == "compute-for") return cmd_compute_for(cfg);
    if (cfg.command == "shadow") return cmd_shadow(cfg);
    if (cfg.command == "sample-ac") return cmd_sample_ac(cfg);
    if (cfg.command == "compare") return cmd_compare(cfg);
    throw_usage("unknown command \"" + cfg.command + "\"");
  } catch (const Error& e) {
    std::fprintf(stderr, "flexor: error: %s\n", e.what());
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "flexor: internal error: %s\n", e.what());
    return 3;
  }
}

}  // namespace flexor
