#include "cqpt/serialize.hpp"

#include <fstream>
#include <sstream>

namespace cqpt {

Json dataset_to_json(const Dataset& data) {
  Json records = Json::array();
  for (const auto& rec : data.records)
    records.push_back(Json{{"input", rec.input},
                           {"obs", rec.obs},
                           {"value", rec.value},
                           {"shots", rec.shots},
                           {"kind", rec.kind}});
  return Json{{"scenario", data.scenario},
              {"seed", data.seed},
              {"basis", data.basis},
              {"records", std::move(records)}};
}

Dataset dataset_from_json(const Json& j) {
  Dataset data;
  data.scenario = j.at("scenario").get<std::string>();
  data.seed = j.at("seed").get<std::uint64_t>();
  data.basis = j.at("basis").get<std::string>();
  for (const auto& rec : j.at("records"))
    data.records.push_back(DataRecord{rec.at("input").get<std::string>(),
                                      rec.at("obs").get<std::string>(),
                                      rec.at("value").get<double>(),
                                      rec.at("shots").get<long long>(),
                                      rec.at("kind").get<std::string>()});
  return data;
}

namespace {

Json matrix_part_to_json(const Matrix& m, bool imag) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row.push_back(imag ? m(i, j).imag() : m(i, j).real());
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& re, const Json& im) {
  const auto n = re.size();
  Matrix m(n, n);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      m(Eigen::Index(i), Eigen::Index(j)) =
          Complex(re[i][j].get<double>(), im[i][j].get<double>());
  return m;
}

}  // namespace

Json result_to_json(const RecoveryResult& result) {
  return Json{{"chi_re", matrix_part_to_json(result.chi_star.chi, false)},
              {"chi_im", matrix_part_to_json(result.chi_star.chi, true)},
              {"basis", result.chi_star.basis->tag},
              {"objective", result.objective},
              {"residual", result.residual},
              {"epsilon", result.epsilon},
              {"iterations", result.iterations},
              {"converged", result.converged}};
}

RecoveryResult result_from_json(const Json& j) {
  RecoveryResult result;
  const BasisPtr basis = basis_by_tag(j.at("basis").get<std::string>());
  result.chi_star = make_process_matrix(
      matrix_from_json(j.at("chi_re"), j.at("chi_im")), basis);
  result.objective = j.at("objective").get<double>();
  result.residual = j.at("residual").get<double>();
  result.epsilon = j.at("epsilon").get<double>();
  result.iterations = j.at("iterations").get<int>();
  result.converged = j.at("converged").get<bool>();
  const CptpReport rep = check_cptp(result.chi_star);
  result.min_eig = rep.min_eigenvalue;
  result.tp_residual = rep.tp_residual;
  return result;
}

namespace {

std::string kind_name(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::cz_mixture: return "cz_mixture";
    case ScenarioKind::qft_env: return "qft_env";
    case ScenarioKind::near_identity: return "near_identity";
  }
  throw std::logic_error("unreachable scenario kind");
}

ScenarioKind kind_from_name(const std::string& name) {
  if (name == "cz_mixture") return ScenarioKind::cz_mixture;
  if (name == "qft_env") return ScenarioKind::qft_env;
  if (name == "near_identity") return ScenarioKind::near_identity;
  throw std::invalid_argument("unknown scenario kind: " + name);
}

}  // namespace

Json scenario_to_json(const ScenarioConfig& config) {
  return Json{{"kind", kind_name(config.kind)},
              {"target_purity", config.target_purity},
              {"gamma", config.gamma},
              {"target_fidelity", config.target_fidelity},
              {"env_dim", config.env_dim},
              {"n", config.n_qubits},
              {"shots", config.shots},
              {"seed", config.seed}};
}

ScenarioConfig scenario_from_json(const Json& j) {
  ScenarioConfig config;
  config.kind = kind_from_name(j.at("kind").get<std::string>());
  config.target_purity = j.value("target_purity", config.target_purity);
  config.gamma = j.value("gamma", config.gamma);
  config.target_fidelity = j.value("target_fidelity", config.target_fidelity);
  config.env_dim = j.value("env_dim", config.env_dim);
  config.n_qubits = j.value("n", config.n_qubits);
  config.shots = j.value("shots", config.shots);
  config.seed = j.value("seed", config.seed);
  return config;
}

std::string scenario_name(const ScenarioConfig& config) {
  std::ostringstream name;
  name << kind_name(config.kind);
  switch (config.kind) {
    case ScenarioKind::cz_mixture: name << ":" << config.target_purity; break;
    case ScenarioKind::qft_env:
      name << ":" << (config.target_fidelity > 0 ? config.target_fidelity
                                                 : config.gamma);
      break;
    case ScenarioKind::near_identity: name << ":" << config.n_qubits; break;
  }
  return name.str();
}

Json report_to_json(const ExperimentReport& report) {
  Json rows = Json::array();
  for (const auto& row : report.rows)
    rows.push_back(Json{{"m", row.m},
                        {"trials", row.trials},
                        {"failed", row.failed},
                        {"f_full_mean", row.f_full_mean},
                        {"f_full_std", row.f_full_std},
                        {"f_ideal_mean", row.f_ideal_mean}});
  return Json{{"scenario", scenario_to_json(report.scenario)},
              {"rows", std::move(rows)}};
}

ExperimentReport report_from_json(const Json& j) {
  ExperimentReport report;
  report.scenario = scenario_from_json(j.at("scenario"));
  for (const auto& row : j.at("rows"))
    report.rows.push_back(ExperimentRow{row.at("m").get<int>(),
                                        row.at("trials").get<int>(),
                                        row.at("failed").get<int>(),
                                        row.at("f_full_mean").get<double>(),
                                        row.at("f_full_std").get<double>(),
                                        row.at("f_ideal_mean").get<double>()});
  return report;
}

Json bound_to_json(const BoundReport& report) {
  return Json{{"c1", report.c1},
              {"c2", report.c2},
              {"bound_value", report.bound_value},
              {"s", report.s},
              {"epsilon", report.epsilon},
              {"c0_reference", report.c0_reference},
              {"approx_error_l1", report.approx_error_l1},
              {"m_ref", report.m_ref}};
}

std::string spectrum_to_csv(const SparsitySpectrum& spectrum) {
  std::ostringstream out;
  out << "index,relative_magnitude\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < spectrum.magnitudes.size(); ++i)
    out << i << ',' << spectrum.magnitudes[i] << '\n';
  return out.str();
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (!in.good() && !in.eof()) throw IoError("read failure on " + path);
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  out.flush();
  if (!out.good()) throw IoError("write failure on " + path);
}

}  // namespace cqpt
