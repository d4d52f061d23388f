#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "chemokit/config.hpp"
#include "chemokit/experiments.hpp"

namespace {

int thread_count(int from_flag) {
  if (from_flag > 0) return from_flag;
  if (const char* env = std::getenv("CHEMOKIT_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw chemokit::ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chemokit: Keller-Segel chemotaxis solver and experiment driver"};
  app.require_subcommand(1);

  const char* kinds[] = {"run",           "convergence",        "asymptotic",
                         "energy",        "blowup_radial",      "blowup_cartesian",
                         "steady_subcritical", "two_species"};

  struct Args {
    std::string config;
    std::string out;
    int threads = 0;
  };
  Args args;

  for (const char* kind : kinds) {
    CLI::App* sub = app.add_subcommand(kind, std::string("run a [") + kind + "] experiment");
    sub->add_option("--config", args.config, "experiment config file")->required();
    sub->add_option("--out", args.out, "override the output directory");
    sub->add_option("--threads", args.threads, "concurrent runs (or CHEMOKIT_THREADS)");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string verb = app.get_subcommands().front()->get_name();

  chemokit::ExperimentSpec spec;
  try {
    spec = chemokit::parse_config(read_file(args.config));
    if (verb != chemokit::experiment_kind_name(spec.kind))
      throw chemokit::ConfigError("config section [" +
                                  std::string(chemokit::experiment_kind_name(spec.kind)) +
                                  "] does not match the '" + verb + "' command");
    if (!args.out.empty()) spec.out_dir = args.out;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  try {
    const chemokit::ExperimentResult res =
        chemokit::run_experiment(spec, thread_count(args.threads));
    std::cout << res.summary;
    if (!res.all_ok) {
      std::cerr << "some runs failed; see " << spec.out_dir << "/summary.txt\n";
      return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
