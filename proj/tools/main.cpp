#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

namespace cli = momentlift::cli;

int main(int argc, char** argv) {
  CLI::App app{"momentlift: moment recovery from tomographic projections"};
  app.require_subcommand(1);

  cli::GenerateObjectOptions gen_obj;
  auto* c_obj = app.add_subcommand("generate-object", "Write a random isotropic Gaussian mixture as JSON");
  c_obj->add_option("--n", gen_obj.n, "Ambient dimension")->capture_default_str();
  c_obj->add_option("--components", gen_obj.components, "Number of components")->capture_default_str();
  c_obj->add_option("--seed", gen_obj.seed, "Random seed")->capture_default_str();
  c_obj->add_flag("--centered", gen_obj.centered, "Single centered unit Gaussian instead of a random mixture");
  c_obj->add_option("--out", gen_obj.out, "Output path (stdout when omitted)");

  cli::GenerateEnsembleOptions gen_ens;
  auto* c_ens = app.add_subcommand("generate-ensemble", "Write a seeded rotation ensemble as JSON");
  c_ens->add_option("--n", gen_ens.n, "Dimension")->capture_default_str();
  c_ens->add_option("--samples", gen_ens.samples, "Number of rotations")->capture_default_str();
  c_ens->add_option("--seed", gen_ens.seed, "Random seed")->capture_default_str();
  c_ens->add_option("--kappa", gen_ens.kappa, "Tilt exp(kappa tr R); 0 gives Haar")->capture_default_str();
  c_ens->add_option("--out", gen_ens.out, "Output path (stdout when omitted)");

  cli::GenerateQueriesOptions gen_q;
  auto* c_q = app.add_subcommand("generate-queries", "Write random frequency tuples as a query file");
  c_q->add_option("--d", gen_q.d, "Moment order")->capture_default_str();
  c_q->add_option("--n", gen_q.n, "Frequency dimension")->capture_default_str();
  c_q->add_option("--pairs", gen_q.pairs, "Number of tuples")->capture_default_str();
  c_q->add_option("--radius", gen_q.radius, "Frequencies are drawn uniformly from this ball")->capture_default_str();
  c_q->add_option("--seed", gen_q.seed, "Random seed")->capture_default_str();
  c_q->add_option("--out", gen_q.out, "Output path (stdout when omitted)");

  cli::SliceCheckOptions slice;
  auto* c_slice = app.add_subcommand("slice-check", "Check the Fourier-slice identity on random (R, eta) pairs");
  c_slice->add_option("--object", slice.object, "Object JSON")->required();
  c_slice->add_option("--m", slice.m, "Slice dimension (default n - 1)");
  c_slice->add_option("--trials", slice.trials, "Number of random pairs")->capture_default_str();
  c_slice->add_option("--seed", slice.seed, "Random seed")->capture_default_str();
  c_slice->add_option("--tolerance", slice.tolerance, "Maximum accepted relative residual")->capture_default_str();
  c_slice->add_option("--out", slice.out, "Per-trial residual CSV");

  cli::RecoverOptions rec;
  auto* c_rec = app.add_subcommand("recover", "Recover full moments from projected data");
  c_rec->add_option("--object", rec.object, "Object JSON")->required();
  c_rec->add_option("--queries", rec.queries, "Query JSON")->required();
  c_rec->add_option("--m", rec.m, "Slice dimension (default n - 1)");
  c_rec->add_option("--samples", rec.samples, "Monte Carlo sample count")->capture_default_str();
  c_rec->add_option("--nodes", rec.nodes, "Quadrature nodes (default 2048 on SO(2), 48 per axis on SO(3))");
  c_rec->add_option("--seed", rec.seed, "Random seed")->capture_default_str();
  c_rec->add_option("--reference", rec.reference, "Validation reference")
      ->check(CLI::IsMember({"none", "quadrature", "montecarlo"}))
      ->capture_default_str();
  c_rec->add_option("--tolerance", rec.tolerance, "Relative floor of the acceptance band")->capture_default_str();
  c_rec->add_option("--out", rec.out, "Output CSV (stdout when omitted)");

  cli::KamOptions kam;
  auto* c_kam = app.add_subcommand("kam", "Second-moment recovery for 3-D objects from 2-D projections");
  c_kam->add_option("--object", kam.object, "Object JSON (n = 3)")->required();
  c_kam->add_option("--pairs", kam.pairs, "Number of random frequency pairs")->capture_default_str();
  c_kam->add_option("--samples", kam.samples, "Monte Carlo sample count")->capture_default_str();
  c_kam->add_option("--nodes", kam.nodes, "SO(3) quadrature nodes per axis")->capture_default_str();
  c_kam->add_option("--seed", kam.seed, "Random seed")->capture_default_str();
  c_kam->add_option("--tolerance", kam.tolerance, "Relative floor of the acceptance band")->capture_default_str();
  c_kam->add_option("--out", kam.out, "Output prefix for CSV/JSON/plot files");

  cli::ReweightOptions rw;
  auto* c_rw = app.add_subcommand("reweight-demo", "Haar vs tilted vs reweighted projected moments");
  c_rw->add_option("--object", rw.object, "Object JSON")->required();
  c_rw->add_option("--queries", rw.queries, "Query JSON in slice coordinates (random when omitted)");
  c_rw->add_option("--kappa", rw.kappa, "Tilt strength")->capture_default_str();
  c_rw->add_option("--samples", rw.samples, "Sample count per ensemble")->capture_default_str();
  c_rw->add_option("--seed", rw.seed, "Random seed")->capture_default_str();
  c_rw->add_option("--m", rw.m, "Slice dimension (default n - 1)");
  c_rw->add_option("--d", rw.d, "Moment order of generated queries")->capture_default_str();
  c_rw->add_option("--pairs", rw.pairs, "Number of generated queries")->capture_default_str();
  c_rw->add_option("--out", rw.out, "Output CSV (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitParse;
  }

  if (*c_obj) return cli::cmd_generate_object(gen_obj, std::cout, std::cerr);
  if (*c_ens) return cli::cmd_generate_ensemble(gen_ens, std::cout, std::cerr);
  if (*c_q) return cli::cmd_generate_queries(gen_q, std::cout, std::cerr);
  if (*c_slice) return cli::cmd_slice_check(slice, std::cout, std::cerr);
  if (*c_rec) return cli::cmd_recover(rec, std::cout, std::cerr);
  if (*c_kam) return cli::cmd_kam_experiment(kam, std::cout, std::cerr);
  if (*c_rw) return cli::cmd_reweight_demo(rw, std::cout, std::cerr);
  return cli::kExitInternal;
}
