#include <iostream>

#include <CLI11.hpp>

#include "fraccond/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"fraccond: fractional conductivity inverse-problem laboratory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "fraccond 0.1.0");

  fraccond::CommandOptions opts;
  std::uint64_t seed = 0;
  int threads = 0;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", opts.config, "JSON configuration file");
    if (needs_config) c->required();
    sub->add_option("--out", opts.out, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "random seed (overrides the config)");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  };

  auto* verify = app.add_subcommand("verify", "run the discrete identity suite");
  add_common(verify, true);
  auto* sweep = app.add_subcommand("sweep", "stability sweep over an amplitude ladder");
  add_common(sweep, true);
  auto* fit = app.add_subcommand("fit", "fit a modulus of continuity to sweep records");
  add_common(fit, false);
  fit->add_option("--records", opts.records, "records CSV written by sweep")->required();
  fit->add_option("--model", opts.model, "log or loglog")->check(CLI::IsMember({"log", "loglog"}));
  auto* recon = app.add_subcommand("reconstruct", "regularized reconstruction from a DN block");
  add_common(recon, true);
  recon->add_option("--data", opts.data, "DN block CSV")->required();
  auto* dnmap = app.add_subcommand("dnmap", "assemble and export a DN map");
  add_common(dnmap, true);
  auto* ucp = app.add_subcommand("ucp-probe", "quantitative unique continuation probe");
  add_common(ucp, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return fraccond::kExitUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  if (chosen->count("--seed")) opts.seed = seed;
  if (chosen->count("--threads")) opts.threads = threads;
  return fraccond::run_command(chosen->get_name(), opts, std::cout, std::cerr);
}
