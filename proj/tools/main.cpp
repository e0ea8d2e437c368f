#include <cstdlib>
#include <iostream>

#include "common.hpp"
#include "sras/error.hpp"

int main(int argc, char** argv) {
  sras::cli::RunConfig config;
  CLI::App app{"Sensitivity summaries and S-RAS comparison tools"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  app.add_option("--seed", config.seed, "Seed for every random choice");
  app.add_option("--eps-reg", config.eps_reg, "Trace-scaled SPD lift constant")->check(CLI::PositiveNumber);
  app.add_option("--eps-spd", config.eps_spd, "Covariance eigenvalue floor")->check(CLI::PositiveNumber);
  app.add_option("--threads", config.threads, "Worker cap (outputs do not depend on it)")
      ->envname("SRAS_THREADS")
      ->check(CLI::PositiveNumber);
  app.add_option("--chunk-size", config.chunk_size, "Samples per accumulation chunk")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", config.output_dir, "Directory for relative output paths")->envname("SRAS_OUTPUT_DIR");

  sras::cli::add_analysis_commands(app, config);
  sras::cli::add_grid_commands(app, config);
  sras::cli::add_synth_commands(app, config);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const sras::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
