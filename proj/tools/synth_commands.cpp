#include <iostream>
#include <memory>

#include "common.hpp"
#include "sras/io.hpp"
#include "sras/synthetic.hpp"

namespace sras::cli {

namespace {

struct BankArgs {
  Index n_models = 4;
  Index input_dim = 8;
  std::vector<Index> widths{32, 32, 32, 32};
  std::vector<double> gains{2.0};
  std::string activation = "relu";
  std::string out = "bank";
};

struct TrialsArgs {
  CohortSpec cohort;
  std::string out = "trials.csv";
  std::string grid_out;
};

}  // namespace

void add_synth_commands(CLI::App& app, RunConfig& config) {
  CLI::App* synth = app.add_subcommand("synth", "Synthetic inputs: model banks, datasets, families, trials");
  synth->require_subcommand(1);

  auto bank = std::make_shared<BankArgs>();
  CLI::App* bank_cmd = synth->add_subcommand("bank", "Random MLPs sharing per-depth weight statistics");
  bank_cmd->add_option("--models", bank->n_models, "Number of models")->check(CLI::PositiveNumber);
  bank_cmd->add_option("--input-dim", bank->input_dim, "Input dimension")->check(CLI::PositiveNumber);
  bank_cmd->add_option("--widths", bank->widths, "Hidden widths")->delimiter(',');
  bank_cmd->add_option("--gains", bank->gains, "Per-depth weight gains")->delimiter(',');
  bank_cmd->add_option("--activation", bank->activation, "relu|tanh|softplus|identity");
  bank_cmd->add_option("--out", bank->out, "Output directory");
  bank_cmd->callback([bank, &config] {
    MlpSpec spec;
    spec.input_dim = bank->input_dim;
    spec.widths = bank->widths;
    spec.gains = bank->gains;
    spec.fn = activation_from_string(bank->activation);
    const auto dir = output_path(config, bank->out);
    for (Index m = 0; m < bank->n_models; ++m) {
      const RepMap map = random_mlp(spec, config.seed * 1000 + static_cast<std::uint64_t>(m));
      write_output(dir / ("model_" + std::to_string(m) + ".json"), io::model_to_json(map));
    }
    std::cout << bank->n_models << " models -> " << dir.string() << "\n";
  });

  auto n = std::make_shared<Index>(64);
  auto dim = std::make_shared<Index>(8);
  auto classes = std::make_shared<int>(0);
  auto data_out = std::make_shared<std::string>("dataset.csv");
  CLI::App* data_cmd = synth->add_subcommand("dataset", "Standard normal samples with optional cyclic labels");
  data_cmd->add_option("--n", *n, "Samples")->check(CLI::NonNegativeNumber);
  data_cmd->add_option("--dim", *dim, "Dimension")->check(CLI::PositiveNumber);
  data_cmd->add_option("--classes", *classes, "Label count (0: unlabeled)");
  data_cmd->add_option("--out", *data_out, "Output CSV");
  data_cmd->callback([=, &config] {
    const auto path = output_path(config, *data_out);
    write_output(path, io::dataset_to_csv(gaussian_dataset(*n, *dim, config.seed, *classes)));
    std::cout << *n << " samples -> " << path.string() << "\n";
  });

  auto fam_dim = std::make_shared<Index>(8);
  auto fam_k = std::make_shared<Index>(4);
  auto fam_out = std::make_shared<std::string>("family.csv");
  CLI::App* fam_cmd = synth->add_subcommand("family", "Seeded random orthonormal family");
  fam_cmd->add_option("--dim", *fam_dim, "Ambient dimension")->check(CLI::PositiveNumber);
  fam_cmd->add_option("--k", *fam_k, "Family dimension")->check(CLI::PositiveNumber);
  fam_cmd->add_option("--out", *fam_out, "Output CSV");
  fam_cmd->callback([=, &config] {
    const auto path = output_path(config, *fam_out);
    write_output(path, io::matrix_to_csv(make_random_family(*fam_dim, *fam_k, config.seed).basis()));
    std::cout << "family " << *fam_dim << "x" << *fam_k << " -> " << path.string() << "\n";
  });

  auto grid_out = std::make_shared<std::string>("grid.json");
  CLI::App* grid_cmd = synth->add_subcommand("grid", "The 6x5x4 static-grating grid");
  grid_cmd->add_option("--out", *grid_out, "Output JSON");
  grid_cmd->callback([=, &config] {
    const auto path = output_path(config, *grid_out);
    write_output(path, io::grid_to_json(ConditionGrid::static_gratings()));
    std::cout << "grid -> " << path.string() << "\n";
  });

  auto trials = std::make_shared<TrialsArgs>();
  CLI::App* trials_cmd = synth->add_subcommand("trials", "Tuned populations with label-dependent noise correlations");
  trials_cmd->add_option("--donors", trials->cohort.n_donors, "Donors")->check(CLI::PositiveNumber);
  trials_cmd->add_option("--experiments", trials->cohort.experiments_per_donor, "Experiments per donor")
      ->check(CLI::PositiveNumber);
  trials_cmd->add_option("--cells", trials->cohort.n_cells, "Cells per experiment")->check(CLI::PositiveNumber);
  trials_cmd->add_option("--trials", trials->cohort.trials_per_condition, "Trials per condition")
      ->check(CLI::PositiveNumber);
  trials_cmd->add_option("--sigma", trials->cohort.sigma, "Private noise scale")->check(CLI::PositiveNumber);
  trials_cmd->add_option("--strength", trials->cohort.strength, "Differential correlation strength");
  trials_cmd->add_option("--out", trials->out, "Output CSV");
  trials_cmd->callback([trials, &config] {
    const ConditionGrid grid = ConditionGrid::static_gratings();
    const auto records = synthetic_cohort(grid, trials->cohort, config.seed);
    const auto path = output_path(config, trials->out);
    write_output(path, io::trials_to_csv(records));
    std::cout << records.size() << " experiments -> " << path.string() << "\n";
  });
}

}  // namespace sras::cli
