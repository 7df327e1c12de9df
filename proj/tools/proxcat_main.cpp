// proxcat: batch front-end for resolvent-family checks, proximal-point
// runs, resolvent-curve experiments and quantitative rate tables.
//
// Exit codes: 0 all checks passed, 1 a check failed, 2 configuration
// error, 3 numeric failure mid-run.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "proxcat/log.hpp"
#include "proxcat/scenario.hpp"

namespace {

struct SubArgs {
  std::string config;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
};

void attach_options(CLI::App* sub, SubArgs& args) {
  sub->add_option("--config", args.config, "scenario configuration (JSON)")->required();
  sub->add_option("--out", args.out_dir, "output directory for CSV and report files");
  sub->add_option("--seed", args.seed, "override the sampling seed from the config");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"jointly firmly nonexpansive resolvent families on CAT(0) spaces"};
  app.require_subcommand(1);

  SubArgs args;
  const char* commands[] = {"check", "ppa", "curve", "rates"};
  const char* descriptions[] = {
      "run sampled inequality checks for a resolvent family",
      "run the proximal point iteration and verify its rate",
      "sample the resolvent curve and verify limit/continuity",
      "evaluate quantitative bounds and witness sweeps"};
  for (int i = 0; i < 4; ++i) attach_options(app.add_subcommand(commands[i], descriptions[i]), args);

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    const proxcat::Json doc = proxcat::load_scenario(args.config);
    const std::string configured = proxcat::cfg::require_string(doc, "command");
    if (configured != command)
      throw proxcat::config_error("config: scenario declares command '" + configured +
                                  "' but subcommand '" + command + "' was invoked");
    const proxcat::RunReport report =
        proxcat::run_scenario(doc, args.out_dir, args.seed, &std::cout);
    return report.overall_pass ? 0 : 1;
  } catch (const proxcat::config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const proxcat::numeric_failure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const proxcat::insufficient_schedule& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const proxcat::error& e) {
    // remaining library errors signal unusable inputs
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
