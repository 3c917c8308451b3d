// implab <subcommand> --config <path> --out <dir> [--threads N]
#include <iostream>

#include "CLI11.hpp"
#include "implab/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"parabolic implosion laboratory"};
  app.require_subcommand(1);
  implab::cli::Options opt;
  for (const auto& name : implab::cli::subcommands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", opt.config, "JSON experiment config")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory")->required();
    sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::Range(1, 1024));
    if (name == "render")
      sub->add_option("mode", opt.mode, "basin | convergence | fatou-phase")
          ->check(CLI::IsMember({"basin", "convergence", "fatou-phase"}));
    sub->callback([&opt, name] { opt.subcommand = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : implab::cli::kConfigError;
  }
  return implab::cli::run(opt, std::cerr);
}
