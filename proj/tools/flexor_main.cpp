// flexor: feasible operational regions for distribution grids.

#include <CLI11.hpp>

#include "flexor/cli.hpp"

int main(int argc, char** argv) {
  flexor::RunConfig cfg;

  CLI::App app{
      "flexor: multidimensional feasible operational regions for "
      "distribution grids with transmission interconnections"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "expanded help for all commands");

  auto add_common = [&cfg](CLI::App* sub, bool needs_case = true) {
    CLI::Option* c = sub->add_option("--case", cfg.case_path,
                                     "grid case file (JSON)");
    if (needs_case) c->required();
    sub->add_option("--out", cfg.out_dir, "artifact output directory")
        ->capture_default_str();
    sub->add_option("--c1", cfg.c1, "active-power cost weight")
        ->capture_default_str();
    sub->add_option("--c2", cfg.c2, "reactive-power cost weight")
        ->capture_default_str();
    sub->add_option("--alpha", cfg.alpha,
                    "override the generator power-factor half-angle [rad]");
    sub->add_option("--seed", cfg.seed, "seed for randomized checks")
        ->capture_default_str();
  };

  CLI::App* validate =
      app.add_subcommand("validate", "parse a case and print its summary");
  add_common(validate);

  CLI::App* compute =
      app.add_subcommand("compute-for", "project the feasible operational region");
  add_common(compute);
  compute
      ->add_option("--variant", cfg.variant,
                   "free|fixed_angle|fixed_all|merged_bus|sum|"
                   "sum_fixed_angle|sum_fixed_all")
      ->capture_default_str();
  compute->add_option("--coupling", cfg.coupling,
                      "coupling set: full7d|pq|merged");

  CLI::App* shadow =
      app.add_subcommand("shadow", "2D shadow of a region (CSV and SVG)");
  add_common(shadow);
  shadow
      ->add_option("--variant", cfg.variant,
                   "region variant (sum overlays the three table cases)")
      ->capture_default_str();
  shadow->add_option("--coupling", cfg.coupling,
                     "coupling set: full7d|pq|merged");
  shadow->add_option("--dims", cfg.dims, "shadow coordinates, e.g. p_1_2,q_1_2");

  CLI::App* sample =
      app.add_subcommand("sample-ac", "sample the nonlinear AC boundary");
  add_common(sample);
  sample
      ->add_option("--coupling", cfg.coupling,
                   "merged (grid sweep) or full7d (coordinate extremes)");
  sample->add_option("--n-grid", cfg.n_grid, "boundary directions per sweep")
      ->capture_default_str();
  sample->add_option("--delta", cfg.delta,
                     "inflation fraction for the 7D membership check");

  CLI::App* compare = app.add_subcommand(
      "compare", "compare the linearized region against AC sampling");
  add_common(compare);
  compare->add_option("--n-grid", cfg.n_grid, "boundary directions per sweep")
      ->capture_default_str();
  compare->add_option("--delta", cfg.delta, "containment inflation fraction");
  compare->add_flag("--check-nesting", cfg.check_nesting,
                    "check the table-case nesting order instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;  // any parse failure is a usage error
  }

  cfg.command = app.get_subcommands().front()->get_name();
  return flexor::run_cli(cfg);
}
