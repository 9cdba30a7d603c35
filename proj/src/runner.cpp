#include "detona/runner.hpp"

#include <filesystem>
#include <random>

namespace detona {

Json run_pipeline(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  Json report;
  report["schema_version"] = kSchemaVersion;
  report["config"] = cfg.raw;

  std::shared_ptr<Profile> prof;
  if (cfg.model == "isentropic") {
    IsentropicLaw law{cfg.isentropic.value("K", 1.0), cfg.isentropic.value("gamma", 1.4)};
    prof = std::make_shared<Profile>(isentropic_profile(
        law, cfg.isentropic.value("rho_plus", 1.0), cfg.isentropic.value("r", 2.0),
        cfg.dissipation.nu_eff()));
  } else {
    auto eos = build_eos(cfg);
    WavePair pair = build_pair(cfg, *eos);
    DetonationClass dc = classify(pair, *eos);
    report["hugoniot"] = {
        {"class", dc.kind == DetonationKind::strong
                      ? "strong"
                      : dc.kind == DetonationKind::weak
                            ? "weak"
                            : dc.kind == DetonationKind::chapman_jouguet ? "chapman_jouguet"
                                                                         : "none"},
        {"mach_plus", dc.mach_plus},
        {"mach_minus", dc.mach_minus},
        {"rh_residuals", {rh_residuals(pair)[0], rh_residuals(pair)[1], rh_residuals(pair)[2]}},
        {"claim2", claim2_check(pair)}};
    if (cfg.model == "ns") {
      prof = std::make_shared<Profile>(ns_shock_profile(pair, cfg.dissipation.nu_eff(),
                                                        cfg.dissipation.theta_eff(), eos));
    } else {
      prof = std::make_shared<Profile>(
          detonation_profile_continued(pair, cfg.dissipation, cfg.ignition, eos));
    }
  }

  std::string stem = cfg.out_dir + "/profile";
  write_profile_csv(*prof, stem + ".csv");
  write_profile_sidecar(*prof, cfg.raw, stem + ".json");
  report["profile"] = profile_summary_json(*prof);

  ModelKind mk = cfg.model == "ns"
                     ? ModelKind::ns
                     : cfg.model == "detonation" ? ModelKind::reacting : ModelKind::isentropic;
  auto sys = std::make_shared<EvansSystem>(prof, mk);
  DPrimeReport dp = d_prime_zero(*sys);
  report["evans"] = {{"d_prime_formula", dp.formula},
                     {"d_prime_fd_sign", dp.fd > 0 ? 1 : -1},
                     {"d_prime_signs_agree", dp.signs_agree}};
  if (cfg.have_contour) {
    WindingResult w = winding_number(*sys, cfg.contour, {}, cfg.threads);
    report["evans"]["winding"] = winding_report_json(w, cfg.contour);
    write_evans_csv(w.lambdas,
                    [&] {
                      std::vector<ScaledComplex> d(w.d_mant.size());
                      for (size_t i = 0; i < d.size(); ++i)
                        d[i] = {w.d_mant[i], w.d_log10[i]};
                      return d;
                    }(),
                    cfg.out_dir + "/evans.csv");
  }

  IndexReport idx;
  if (cfg.model == "ns")
    idx = index_ns(*prof);
  else if (cfg.model == "isentropic")
    idx = index_isentropic(*prof);
  else
    idx = index_detonation(*sys);
  report["index"] = index_report_json(idx);
  report["dimension_check"] = dimension_check(*prof).ok();

  write_json(report, cfg.out_dir + "/report.json");
  return report;
}

namespace {

void add(SelfTestResult& r, const std::string& name, bool pass, const std::string& detail = "") {
  r.items.push_back({name, pass, detail});
}

}  // namespace

SelfTestResult selftest(std::uint64_t seed, int threads) {
  SelfTestResult res;
  std::mt19937_64 rng(seed ? seed : 1);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  IdealPolytropic ig(0.4, 1.0);

  // eigen identities on random states
  {
    bool ok = true;
    double worst = 0;
    for (int t = 0; t < 200; ++t) {
      GasState s = make_state(ig, 0.3 + 3 * u01(rng), -3 + 6 * u01(rng), 0.3 + 3 * u01(rng));
      Mat3 A = flux_jacobian(s, ig);
      auto tr = eigen_triples(s, ig);
      for (int j = 0; j < 3; ++j) {
        double err = (A * tr[j].r - tr[j].a * tr[j].r).norm() / tr[j].r.norm();
        worst = std::max(worst, err);
        for (int i = 0; i < 3; ++i)
          if (i != j) worst = std::max(worst, std::abs(tr[i].l.dot(tr[j].r)) /
                                                  (tr[i].l.norm() * tr[j].r.norm()));
      }
    }
    ok = worst < 1e-10;
    add(res, "euler eigenstructure identities", ok, "worst " + std::to_string(worst));
  }

  // Delta reduction + mutation canary
  {
    double worst = delta_identity_batch(ig, seed + 7, 100, ExecMode::serial);
    add(res, "Delta determinant vs reduced form", worst < 1e-10,
        "max rel " + std::to_string(worst));
    // canary: flipping the sign of l3 must be caught (the checker must not be a no-op)
    GasState plus = make_state(ig, 1.0, -2.4, 1.0);
    WavePair pair = make_pair(ig, plus, -2.4, 0.2, DetonationKind::strong);
    auto t = eigen_triples(pair.minus, ig);
    double norm3 = (Mat3() << t[0].r, t[1].r, t[2].r).finished().determinant() /
                   t[2].l.dot(t[2].r);
    double mutated = -norm3 * delta_detonation_reduced(pair, ig);  // injected sign flip
    double good = delta_detonation(pair, ig);
    add(res, "Delta mutation canary trips", std::abs(mutated - good) > 1e-3 * std::abs(good));
  }

  // splitting counts + conjugate symmetry on a moderate shock
  {
    GasState plus = make_state(ig, 1.0, -2.0, 1.0);
    WavePair pair = make_pair(ig, plus, -2.0, 0.0, DetonationKind::strong);
    auto prof = std::make_shared<Profile>(ns_shock_profile(pair, 0.3, 0.3,
        std::make_shared<IdealPolytropic>(ig)));
    EvansSystem sys(prof, ModelKind::ns);
    bool counts_ok = true;
    for (int t = 0; t < 25; ++t) {
      Cplx lam(0.05 + 900 * u01(rng), -400 + 800 * u01(rng));
      if (lam.real() <= 0) lam = Cplx(0.05, lam.imag());
      SplitCounts sc = splitting_counts(sys, lam);
      counts_ok = counts_ok && sc.plus.n_stable == 2 && sc.plus.n_unstable == 3 &&
                  sc.minus.n_stable == 2 && sc.minus.n_unstable == 3;
    }
    add(res, "NS consistent splitting (2,3)", counts_ok);
    double worst = 0;
    for (int t = 0; t < 5; ++t) {
      Cplx lam(0.2 + 2 * u01(rng), 0.2 + 2 * u01(rng));
      ScaledComplex a = evans_eval(sys, lam);
      ScaledComplex b = evans_eval(sys, std::conj(lam));
      worst = std::max(worst, std::abs(b.mant * std::pow(10.0, b.log10 - a.log10) -
                                       std::conj(a.mant)) /
                                  std::abs(a.mant));
    }
    add(res, "conjugate symmetry D(conj) = conj(D)", worst < 1e-8,
        "worst rel " + std::to_string(worst));
    DimensionCheck dc = dimension_check(*prof);
    add(res, "dimension lemma n-i = r-d", dc.ok());
  }

  // Serre lemma randomized + NS instantiation
  {
    std::normal_distribution<double> gauss;
    bool ok = true;
    for (int t = 0; t < 40; ++t) {
      int n = 3 + int(u01(rng) * 4);
      Mat Q(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) Q(i, j) = gauss(rng);
      Mat A = 0.5 * (Q + Q.transpose());
      if (std::abs(A.determinant()) < 1e-3) continue;
      int r = 1 + int(u01(rng) * (n - 1));
      Mat M(n, r);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < r; ++j) M(i, j) = gauss(rng);
      Mat B = M * M.transpose();
      ok = ok && serre_transversality_check(A, B) > 1e-6;
    }
    GasState s = make_state(ig, 1.2, -1.7, 0.9);
    ok = ok && serre_ns_instance(s, ig, 0.2, 0.3) > 1e-6;
    add(res, "modified Serre lemma transversality", ok);
  }

  // kernel determinism: serial vs parallel sweeps bitwise equal
  {
    std::vector<double> rs{1.2, 2.0, 3.5}, Ms{0.2, 0.5, 0.8};
    ScanGrid a = delta_majda_scan(ig, rs, Ms, ExecMode::serial);
    ScanGrid b = delta_majda_scan(ig, rs, Ms, ExecMode::parallel, threads);
    bool same = (a.delta - b.delta).cwiseAbs().maxCoeff() == 0 &&
                (a.majda - b.majda).cwiseAbs().maxCoeff() == 0;
    add(res, "parallel kernels match serial reference", same);
  }

  return res;
}

}  // namespace detona
