// qpt: simulate channel measurement data, reconstruct process matrices from
// reduced configuration sets, and emit analysis artifacts.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cqpt/serialize.hpp"

namespace {

using namespace cqpt;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitSolver = 4;

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

int qubits_of_basis(const BasisPtr& basis) {
  int n = 0;
  while ((1 << n) < basis->dim()) ++n;
  return n;
}

struct SimulateArgs {
  std::string scenario_path, out_path;
  long long shots = -1;
  std::int64_t seed = -1;
};

int run_simulate(const SimulateArgs& args) {
  ScenarioConfig config =
      scenario_from_json(Json::parse(read_text_file(args.scenario_path)));
  if (args.shots >= 0) config.shots = args.shots;
  if (args.seed >= 0) config.seed = std::uint64_t(args.seed);

  const ProcessMatrix chi = build_scenario_channel(config);
  const ConfigSet set = full_config_set(config.n_qubits);
  Dataset data = config.shots > 0
                     ? simulate_counts(chi, set, config.shots, config.seed)
                     : exact_dataset(chi, set);
  data.scenario = scenario_name(config);
  data.seed = config.seed;
  write_text_file(args.out_path, dataset_to_json(data).dump(2) + "\n");
  return kExitOk;
}

struct ReconstructArgs {
  std::string data_path, out_path;
  std::string select = "all";
  std::string basis_tag;  // defaults to the dataset basis
  std::string method = "cqpt";
  double epsilon = -1;
  double factor = 1.05;
  bool allow_unconverged = false;
};

int run_reconstruct(const ReconstructArgs& args) {
  const Dataset raw = dataset_from_json(Json::parse(read_text_file(args.data_path)));
  const Dataset data = normalize_counts(raw);
  const BasisPtr basis =
      basis_by_tag(args.basis_tag.empty() ? data.basis : args.basis_tag);
  const ConfigSet full = full_config_set(qubits_of_basis(basis));
  const ConfigSet sel = select_configs(full, args.select);

  double epsilon = std::max(args.epsilon, 0.0);
  if (args.epsilon < 0 && args.method != "ls") {
    const RecoveryResult full_fit = solve_constrained_ls(make_recovery_problem(
        dataset_values(data, full), build_phi(full, basis), 0.0));
    epsilon = calibrate_epsilon(full_fit, sel.size(), args.factor);
  }

  const RealVector y = dataset_values(data, sel);
  const auto problem = make_recovery_problem(y, build_phi(sel, basis), epsilon);
  const RecoveryResult result = args.method == "ls"
                                    ? solve_constrained_ls(problem)
                                    : solve_cqpt(problem);
  write_text_file(args.out_path, result_to_json(result).dump(2) + "\n");
  if (!result.converged && !args.allow_unconverged) {
    std::cerr << "solver did not converge (result written); "
                 "pass --allow-unconverged to accept\n";
    return kExitSolver;
  }
  return kExitOk;
}

ProcessMatrix load_chi(const std::string& path) {
  return result_from_json(Json::parse(read_text_file(path))).chi_star;
}

struct SpectrumArgs {
  std::string chi_path, out_path;
  std::string thresholds = "0.01,0.02";
};

int run_spectrum(const SpectrumArgs& args) {
  const ProcessMatrix chi = load_chi(args.chi_path);
  const SparsitySpectrum spec =
      sorted_spectrum(chi, parse_double_list(args.thresholds));
  write_text_file(args.out_path, spectrum_to_csv(spec));
  for (const auto& [threshold, count] : spec.threshold_counts)
    std::cout << "above " << threshold << ": " << count << "\n";
  return kExitOk;
}

struct FidelityArgs {
  std::string chi_path, against;
};

int run_fidelity(const FidelityArgs& args) {
  const ProcessMatrix chi = load_chi(args.chi_path);
  ProcessMatrix reference;
  if (args.against.rfind("ideal:", 0) == 0) {
    reference = chi_from_unitary(gate_by_label(args.against.substr(6)), chi.basis);
  } else if (args.against.rfind("file:", 0) == 0) {
    reference = load_chi(args.against.substr(5));
  } else {
    throw std::invalid_argument("--against expects ideal:<gate> or file:<path>");
  }
  std::cout << "fidelity " << process_fidelity(reference, chi) << "\n"
            << "purity " << purity(chi) << "\n";
  return kExitOk;
}

struct BoundArgs {
  std::string chi_path, out_path;
  int s = 1;
  double delta = 0;
  double epsilon = 0;
  double c0 = 1.0;
};

int run_bound(const BoundArgs& args) {
  const ProcessMatrix chi = load_chi(args.chi_path);
  const BoundReport report =
      recovery_bound(chi, args.s, args.epsilon, args.delta, args.c0);
  write_text_file(args.out_path, bound_to_json(report).dump(2) + "\n");
  return kExitOk;
}

struct ConvergenceArgs {
  std::string scenario_path, out_path;
  std::string m_list = "18,32,64,128";
  int trials = 50;
  long long shots = -1;
  std::int64_t seed = -1;
};

int run_convergence(const ConvergenceArgs& args) {
  ScenarioConfig config =
      scenario_from_json(Json::parse(read_text_file(args.scenario_path)));
  if (args.shots >= 0) config.shots = args.shots;
  if (args.seed >= 0) config.seed = std::uint64_t(args.seed);
  ExperimentOptions opts;
  opts.trials = args.trials;
  const ExperimentReport report =
      convergence_experiment(config, parse_int_list(args.m_list), opts);
  write_text_file(args.out_path, report_to_json(report).dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"compressive quantum process tomography toolkit"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand(
      "simulate", "write a dataset for the full configuration set");
  simulate->add_option("--scenario", sim.scenario_path, "scenario JSON file")
      ->required();
  simulate->add_option("--shots", sim.shots, "shots per measurement group");
  simulate->add_option("--seed", sim.seed, "RNG seed override");
  simulate->add_option("--out", sim.out_path, "output dataset path")->required();

  ReconstructArgs rec;
  auto* reconstruct =
      app.add_subcommand("reconstruct", "solve the recovery program on a dataset");
  reconstruct->add_option("--data", rec.data_path, "dataset JSON file")->required();
  reconstruct->add_option("--select", rec.select,
                          "random:m:seed | table1:<id> | all");
  reconstruct->add_option("--basis", rec.basis_tag,
                          "recovery basis tag, e.g. gate:CZ or pauli:2");
  reconstruct->add_option("--method", rec.method, "cqpt | ls")
      ->check(CLI::IsMember({"cqpt", "ls"}));
  reconstruct->add_option("--epsilon", rec.epsilon,
                          "residual bound (default: calibrated from the full fit)");
  reconstruct->add_option("--factor", rec.factor, "epsilon calibration factor");
  reconstruct->add_flag("--allow-unconverged", rec.allow_unconverged,
                        "exit 0 even when the solver hit max iterations");
  reconstruct->add_option("--out", rec.out_path, "output result path")->required();

  auto* analyze = app.add_subcommand("analyze", "inspect a reconstruction");
  analyze->require_subcommand(1);

  SpectrumArgs spec;
  auto* spectrum = analyze->add_subcommand(
      "spectrum", "sorted relative-magnitude spectrum CSV");
  spectrum->add_option("--chi", spec.chi_path, "result JSON file")->required();
  spectrum->add_option("--thresholds", spec.thresholds, "comma separated");
  spectrum->add_option("--out", spec.out_path, "output CSV path")->required();

  FidelityArgs fid;
  auto* fidelity = analyze->add_subcommand("fidelity", "fidelity and purity");
  fidelity->add_option("--chi", fid.chi_path, "result JSON file")->required();
  fidelity->add_option("--against", fid.against, "ideal:<gate> or file:<path>")
      ->required();

  BoundArgs bound;
  auto* bound_cmd = analyze->add_subcommand("bound", "recovery-bound report");
  bound_cmd->add_option("--chi", bound.chi_path, "result JSON file")->required();
  bound_cmd->add_option("--s", bound.s, "sparsity level")->required();
  bound_cmd->add_option("--delta", bound.delta, "isometry constant")->required();
  bound_cmd->add_option("--epsilon", bound.epsilon, "residual bound");
  bound_cmd->add_option("--c0", bound.c0, "reference constant");
  bound_cmd->add_option("--out", bound.out_path, "output JSON path")->required();

  auto* report = app.add_subcommand("report", "batch experiments");
  report->require_subcommand(1);

  ConvergenceArgs conv;
  auto* convergence = report->add_subcommand(
      "convergence", "fidelity vs configuration count over random selections");
  convergence->add_option("--scenario", conv.scenario_path, "scenario JSON file")
      ->required();
  convergence->add_option("--m", conv.m_list, "comma separated selection sizes");
  convergence->add_option("--trials", conv.trials, "random selections per m");
  convergence->add_option("--shots", conv.shots, "shots override");
  convergence->add_option("--seed", conv.seed, "seed override");
  convergence->add_option("--out", conv.out_path, "output JSON path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (simulate->parsed()) return run_simulate(sim);
    if (reconstruct->parsed()) return run_reconstruct(rec);
    if (spectrum->parsed()) return run_spectrum(spec);
    if (fidelity->parsed()) return run_fidelity(fid);
    if (bound_cmd->parsed()) return run_bound(bound);
    if (convergence->parsed()) return run_convergence(conv);
    std::cerr << "no command\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const InfeasibleError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const Json::parse_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}
