#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include <unsupported/Eigen/KroneckerProduct>

#include "cqpt/measmodel.hpp"
#include "cqpt/scenarios.hpp"

using namespace cqpt;

TEST_CASE("state library entries") {
  const StateLibrary& lib1 = state_library(1);
  Matrix d_state(2, 2);
  d_state << 0.5, 0.5, 0.5, 0.5;
  CHECK((lib1.state("D").rho - d_state).norm() < 1e-15);

  Matrix r_state(2, 2);
  r_state << 0.5, Complex(0, -0.5), Complex(0, 0.5), 0.5;
  CHECK((lib1.state("R").rho - r_state).norm() < 1e-15);

  const StateLibrary& lib2 = state_library(2);
  Matrix want = Matrix::Zero(4, 4);
  want(1, 1) = 1;  // |HV><HV|
  CHECK((lib2.state("HV").rho - want).norm() < 1e-15);

  const Observable& iz = lib2.observable("IZ");
  CHECK(iz.kind == ObservableKind::expectation);
  Matrix z(2, 2);
  z << 1, 0, 0, -1;
  CHECK((iz.matrix - Eigen::kroneckerProduct(Matrix::Identity(2, 2), z).eval())
            .norm() < 1e-15);

  const Observable& ri = lib2.observable("RI");
  CHECK(ri.kind == ObservableKind::projector);
  CHECK((ri.matrix * ri.matrix - ri.matrix).norm() < 1e-12);

  CHECK_THROWS_AS(lib2.state("Q"), std::invalid_argument);
  CHECK_THROWS_AS(lib2.observable("QQ"), std::invalid_argument);
}

TEST_CASE("full configuration sets") {
  const ConfigSet full = full_config_set(2);
  CHECK(full.size() == 576);
  CHECK(full.configs[0].input_label == "HH");
  CHECK(full.configs[0].obs_label == "HH");
  CHECK(full.configs[1].obs_label == "HV");
  CHECK(full.configs[35].input_label == "HH");  // observables inner loop
  CHECK(full.configs[35].obs_label == "LL");
  CHECK(full.configs[36].input_label == "HV");
  CHECK(full.configs[36].obs_label == "HH");

  CHECK(full_config_set(1).size() == 24);
}

TEST_CASE("observable groups") {
  CHECK(observable_group("RI") == std::vector<std::string>{"RI", "LI"});
  CHECK(observable_group("RR") ==
        std::vector<std::string>{"RR", "RL", "LR", "LL"});
  CHECK(group_setting("RV") == "YZ");
  CHECK(group_setting("DI") == "XI");
}

TEST_CASE("single sensing entry against a hand evaluation") {
  // n=1, rho = |H><H|, M = Z, Pauli basis: Tr((I/sqrt2) rho (I/sqrt2) Z) = 1/2
  const StateLibrary& lib = state_library(1);
  ConfigSet set;
  set.configs.push_back(
      Configuration{lib.state("H"), lib.observable("Z"), "H", "Z"});
  const SensingMatrix phi = build_phi(set, pauli_basis(1));
  CHECK(std::abs(phi.phi(0, 0) - Complex(0.5, 0)) < 1e-14);
}

TEST_CASE("identity channel expectations match direct traces") {
  const auto basis = pauli_basis(2);
  const ProcessMatrix chi = chi_identity(basis);
  const ConfigSet set = select_random(full_config_set(2), 40, 3);
  const SensingMatrix phi = build_phi(set, basis);
  const RealVector via_phi =
      (phi.phi * vec_chi(chi.chi)).real() * std::sqrt(double(set.size()));
  for (int i = 0; i < set.size(); ++i) {
    const Complex direct =
        (set.configs[size_t(i)].input.rho *
         set.configs[size_t(i)].observable.matrix)
            .trace();
    CHECK(std::abs(via_phi[i] - direct.real()) < 1e-12);
  }
}

TEST_CASE("oracle equivalence: Phi vec(chi) vs apply_channel route") {
  for (int rep = 0; rep < 6; ++rep) {
    const int n = 1 + rep % 2;
    const auto basis = rep % 2 ? gate_basis(cz_gate()) : pauli_basis(n);
    const ProcessMatrix chi = random_cptp(basis, 2 + rep, 900 + rep);
    const ConfigSet set =
        select_random(full_config_set(n), 20 + rep, std::uint64_t(rep));
    const SensingMatrix phi = build_phi(set, basis);

    const RealVector direct = predict_expectations(chi, set);
    const CVector via_phi = phi.phi * vec_chi(chi.chi);
    const double scale = 1.0 / std::sqrt(double(set.size()));
    CHECK((via_phi - (direct * scale).cast<Complex>()).cwiseAbs().maxCoeff() <
          1e-10);
  }
}

TEST_CASE("CZ channel on the full set matches the unitary oracle") {
  const auto basis = gate_basis(cz_gate());
  const ProcessMatrix chi = chi_from_unitary(cz_gate(), basis);
  const ConfigSet full = full_config_set(2);
  const RealVector y = predict_expectations(chi, full);
  const Matrix u = cz_gate().matrix;
  for (int i = 0; i < full.size(); ++i) {
    const Matrix out =
        u * full.configs[size_t(i)].input.rho * u.adjoint();
    const double direct =
        (out * full.configs[size_t(i)].observable.matrix).trace().real();
    CHECK(std::abs(y[i] - direct) < 1e-12);
  }
}

TEST_CASE("real sensing matrix agrees with the complex one") {
  const auto basis = gate_basis(qft_gate(4));
  const ConfigSet set = select_random(full_config_set(2), 25, 17);
  const SensingMatrix phi = build_phi(set, basis);
  const RealMatrix phi_u = real_sensing_matrix(phi);
  for (int rep = 0; rep < 5; ++rep) {
    const ProcessMatrix chi = random_cptp(basis, 3, 300 + rep);
    const RealVector lhs = phi_u * herm_to_real(chi.chi);
    const CVector rhs = phi.phi * vec_chi(chi.chi);
    CHECK((lhs.cast<Complex>() - rhs).cwiseAbs().maxCoeff() < 1e-11);
  }
}

TEST_CASE("predict_expectations special cases") {
  const auto basis1 = pauli_basis(1);
  const StateLibrary& lib1 = state_library(1);
  ConfigSet one;
  one.configs.push_back(
      Configuration{lib1.state("H"), lib1.observable("H"), "H", "H"});
  CHECK(predict_expectations(chi_identity(basis1), one)[0] ==
        doctest::Approx(1.0).epsilon(1e-12));

  const auto basis2 = pauli_basis(2);
  const StateLibrary& lib2 = state_library(2);
  ConfigSet vv;
  vv.configs.push_back(
      Configuration{lib2.state("VV"), lib2.observable("VV"), "VV", "VV"});
  CHECK(predict_expectations(chi_from_unitary(cz_gate(), basis2), vv)[0] ==
        doctest::Approx(1.0).epsilon(1e-12));

  // depolarizing: every rank-1 projector sees 1/d
  ConfigSet proj;
  proj.configs.push_back(
      Configuration{lib2.state("DR"), lib2.observable("HH"), "DR", "HH"});
  CHECK(predict_expectations(chi_depolarizing(basis2), proj)[0] ==
        doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("simulate_counts is deterministic and lands where it must") {
  const auto basis = pauli_basis(2);
  const ProcessMatrix chi = chi_identity(basis);
  const ConfigSet full = full_config_set(2);

  const Dataset a = simulate_counts(chi, full, 1000, 42);
  const Dataset b = simulate_counts(chi, full, 1000, 42);
  REQUIRE(a.records.size() == b.records.size());
  for (size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].value == b.records[i].value);
    CHECK(a.records[i].kind == "count");
  }

  // identity channel, input HH, Z x Z setting: every count on outcome HH
  for (const auto& rec : a.records) {
    if (rec.input != "HH" || group_setting(rec.obs) != "ZZ") continue;
    CHECK(rec.value == (rec.obs == "HH" ? 1000.0 : 0.0));
  }
}

TEST_CASE("multinomial frequencies track probabilities at large shots") {
  const auto basis = gate_basis(cz_gate());
  const ProcessMatrix chi = random_cptp(basis, 3, 5);
  const StateLibrary& lib = state_library(2);
  ConfigSet one_input;
  for (const char* ob : {"DD", "DA", "AD", "AA", "RR", "RL", "LR", "LL"})
    one_input.configs.push_back(
        Configuration{lib.state("DR"), lib.observable(ob), "DR", ob});

  const long long shots = 100000000;
  const Dataset counts = simulate_counts(chi, one_input, shots, 11);
  const RealVector p = predict_expectations(chi, one_input);
  for (int i = 0; i < one_input.size(); ++i) {
    const double freq = counts.records[size_t(i)].value / double(shots);
    const double sigma = std::sqrt(std::max(p[i] * (1 - p[i]), 1e-12) / shots);
    CHECK(std::abs(freq - p[i]) <= 3 * sigma + 1e-9);
  }
}

TEST_CASE("expectation observables receive Gaussian noise only") {
  const auto basis = pauli_basis(2);
  const ProcessMatrix chi = chi_identity(basis);
  const ConfigSet set = random_pauli_config_set(2, 4, 6, 9);
  const Dataset data = simulate_counts(chi, set, 10000, 3);
  const RealVector exact = predict_expectations(chi, set);
  for (int i = 0; i < set.size(); ++i) {
    CHECK(data.records[size_t(i)].kind == "expectation");
    CHECK(std::abs(data.records[size_t(i)].value - exact[i]) < 6.0 / 100.0);
  }
}

TEST_CASE("normalize_counts ratios and failure modes") {
  Dataset data;
  data.records = {
      {"HH", "RI", 60, 100, "count"},
      {"HH", "LI", 40, 100, "count"},
  };
  const Dataset norm = normalize_counts(data);
  CHECK(norm.records[0].value == doctest::Approx(0.6));
  CHECK(norm.records[1].value == doctest::Approx(0.4));
  CHECK(norm.records[0].kind == "probability");

  Dataset uniform;
  uniform.records = {
      {"DD", "RR", 25, 100, "count"},
      {"DD", "RL", 25, 100, "count"},
      {"DD", "LR", 25, 100, "count"},
      {"DD", "LL", 25, 100, "count"},
  };
  for (const auto& rec : normalize_counts(uniform).records)
    CHECK(rec.value == doctest::Approx(0.25));

  Dataset incomplete;
  incomplete.records = {{"HH", "RI", 60, 100, "count"}};
  CHECK_THROWS_AS(normalize_counts(incomplete), NormalizationError);

  Dataset zeros;
  zeros.records = {
      {"HH", "RI", 0, 100, "count"},
      {"HH", "LI", 0, 100, "count"},
  };
  CHECK_THROWS_AS(normalize_counts(zeros), NormalizationError);
}

TEST_CASE("round trip: simulate, normalize, resolve") {
  const ProcessMatrix chi = cz_decohered(0.86);
  const ConfigSet full = full_config_set(2);
  const Dataset norm = normalize_counts(simulate_counts(chi, full, 2000000, 8));
  const RealVector y = dataset_values(norm, full);
  const RealVector exact = predict_expectations(chi, full);
  CHECK((y - exact).cwiseAbs().maxCoeff() < 0.01);

  // marginal resolution: identity-padded projectors sum H/V records
  const ConfigSet named = select_named(full, "HVDR-RI-IR");
  const RealVector y_named = dataset_values(norm, named);
  const RealVector exact_named = predict_expectations(chi, named);
  CHECK((y_named - exact_named).cwiseAbs().maxCoeff() < 0.01);
}

TEST_CASE("select_random draws distinct rows, exhaustive draw permutes") {
  const ConfigSet full = full_config_set(2);
  const ConfigSet sel = select_random(full, 32, 7);
  CHECK(sel.size() == 32);
  std::set<int> uniq(sel.selection.begin(), sel.selection.end());
  CHECK(uniq.size() == 32);

  const ConfigSet all = select_random(full, 576, 7);
  std::set<int> perm(all.selection.begin(), all.selection.end());
  CHECK(int(perm.size()) == 576);
  CHECK(select_random(full, 32, 7).selection == sel.selection);  // deterministic

  CHECK_THROWS_AS(select_random(full, 577, 1), std::invalid_argument);
}

TEST_CASE("selection acts as row selection of the parent sensing matrix") {
  const auto basis = gate_basis(cz_gate());
  const ConfigSet full = full_config_set(2);
  const ConfigSet sel = select_random(full, 24, 99);
  const SensingMatrix g = build_phi(full, basis);
  const SensingMatrix phi = build_phi(sel, basis);
  const double renorm = std::sqrt(double(sel.size()) / double(full.size()));
  for (int i = 0; i < sel.size(); ++i)
    CHECK((phi.phi.row(i) * renorm - g.phi.row(sel.selection[size_t(i)]))
              .norm() < 1e-13);
}

TEST_CASE("named Table-style selections") {
  const ConfigSet full = full_config_set(2);
  CHECK(select_named(full, "HVDR-RI-IR").size() == 32);
  CHECK(select_named(full, "HVDR-DI-ID").size() == 32);
  CHECK(select_named(full, "HVDR-RL").size() == 64);
  CHECK(select_named(full, "HVDR-DAxDA").size() == 64);
  CHECK(select_named(full, "VDR-RI-IR").size() == 18);
  CHECK(select_named(full, "VDR-DI-ID").size() == 18);
  CHECK(select_named(full, "VDR-RL").size() == 36);
  CHECK(select_named(full, "VDR-DA").size() == 36);

  // the braced spelling resolves to the same rows
  CHECK(select_named(full, "HVDR x {RI,IR}").size() == 32);
  CHECK(select_named(full, "VDR x {RI,IR}").size() == 18);

  CHECK_THROWS_AS(select_named(full, "nope"), std::invalid_argument);

  const ConfigSet ri = select_named(full, "VDR-RI-IR");
  for (const auto& cfg : ri.configs) {
    CHECK(cfg.input_label.find('H') == std::string::npos);
    CHECK((cfg.obs_label == "RI" || cfg.obs_label == "IR"));
  }
}

TEST_CASE("select_configs string forms") {
  const ConfigSet full = full_config_set(2);
  CHECK(select_configs(full, "all").size() == 576);
  CHECK(select_configs(full, "random:18:3").size() == 18);
  CHECK(select_configs(full, "table1:HVDR-RI-IR").size() == 32);
  CHECK_THROWS_AS(select_configs(full, "bogus"), std::invalid_argument);
}

TEST_CASE("random Pauli configuration sets") {
  const ConfigSet set = random_pauli_config_set(2, 16, 4, 12);
  CHECK(set.size() == 64);
  std::set<std::string> obs;
  for (const auto& cfg : set.configs) {
    CHECK(cfg.observable.kind == ObservableKind::expectation);
    obs.insert(cfg.obs_label);
  }
  CHECK(obs.size() == 4);
  CHECK_THROWS_AS(random_pauli_config_set(2, 4, 7, 1), std::invalid_argument);

  const ConfigSet again = random_pauli_config_set(2, 16, 4, 12);
  for (int i = 0; i < set.size(); ++i)
    CHECK((set.configs[size_t(i)].input.rho -
           again.configs[size_t(i)].input.rho)
              .norm() == 0.0);
}

TEST_CASE("dataset_values rejects raw counts and unknown configs") {
  const ConfigSet full = full_config_set(2);
  Dataset counts;
  counts.records = {{"HH", "RI", 60, 100, "count"}};
  CHECK_THROWS_AS(dataset_values(counts, full), NormalizationError);

  Dataset empty;
  CHECK_THROWS_AS(dataset_values(empty, full), std::invalid_argument);
}
