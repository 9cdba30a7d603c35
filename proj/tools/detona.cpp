#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "detona/runner.hpp"

using namespace detona;

namespace {

int g_threads = 0;

int log_level() {
  const char* v = std::getenv("DETONA_LOG");
  if (!v) return 0;
  std::string s(v);
  if (s == "debug") return 2;
  if (s == "info") return 1;
  return 0;
}

void info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[detona] " << msg << "\n";
}

ContourSpec parse_contour(const std::string& s) {
  ContourSpec c;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw ConfigError("bad contour spec: " + s);
    std::string key = tok.substr(0, eq);
    double val = std::stod(tok.substr(eq + 1));
    if (key == "R")
      c.R = val;
    else if (key == "delta")
      c.delta = val;
    else if (key == "n")
      c.n = int(val);
    else
      throw ConfigError("bad contour key: " + key);
  }
  return c;
}

std::vector<double> parse_range(const std::string& s) {  // lo:hi:n
  auto a = s.find(':'), b = s.rfind(':');
  if (a == std::string::npos || a == b) throw ConfigError("bad range (lo:hi:n): " + s);
  double lo = std::stod(s.substr(0, a)), hi = std::stod(s.substr(a + 1, b - a - 1));
  int n = std::stoi(s.substr(b + 1));
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(lo + (hi - lo) * double(i) / std::max(1, n - 1));
  return v;
}

ModelKind model_of(const Profile& p) {
  switch (p.kind) {
    case ProfileKind::ns_shock:
      return ModelKind::ns;
    case ProfileKind::detonation:
      return ModelKind::reacting;
    default:
      return ModelKind::isentropic;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"viscous shock / detonation stability toolbox"};
  app.require_subcommand(1);
  app.add_option("--threads", g_threads, "worker threads for sweeps (0 = all)");

  // hugoniot
  auto* hug = app.add_subcommand("hugoniot", "end-state algebra for a given flux");
  std::string hug_eos = "ideal";
  double hug_gamma = 0.4, hug_cv = 1.0, hug_q = 0.0, hug_m = 0.0;
  double hug_rho = 1.0, hug_e = 1.0;
  std::string hug_sweep, hug_table;
  hug->add_option("--eos", hug_eos, "ideal|table");
  hug->add_option("--gamma", hug_gamma, "Gruneisen coefficient");
  hug->add_option("--cv", hug_cv, "specific heat");
  hug->add_option("--table", hug_table, "CSV table for table EOS");
  hug->add_option("--q", hug_q, "heat release")->required();
  hug->add_option("--m", hug_m, "mass flux (m < 0)")->required();
  hug->add_option("--rho-plus", hug_rho);
  hug->add_option("--e-plus", hug_e);
  hug->add_option("--sweep", hug_sweep, "m_min:m_max:n -> CSV intersection diagram");

  // profile
  auto* prof_cmd = app.add_subcommand("profile", "traveling-wave profile from a config");
  std::string prof_cfg, prof_out = "profile.csv";
  prof_cmd->add_option("--config", prof_cfg)->required();
  prof_cmd->add_option("--out", prof_out);

  // evans
  auto* ev = app.add_subcommand("evans", "Evans function sweeps on a stored profile");
  std::string ev_prof, ev_contour, ev_ray, ev_out = "evans.csv";
  ev->add_option("--profile", ev_prof)->required();
  ev->add_option("--contour", ev_contour, "R=10,delta=1e-3,n=512");
  ev->add_option("--real-ray", ev_ray, "lo:hi:n real-axis samples");
  ev->add_option("--out", ev_out);

  // index
  auto* ix = app.add_subcommand("index", "stability index from a stored profile");
  std::string ix_model, ix_prof, ix_out = "report.json";
  ix->add_option("--model", ix_model, "ns|isentropic|detonation");
  ix->add_option("--profile", ix_prof)->required();
  ix->add_option("--out", ix_out);

  // scan
  auto* sc = app.add_subcommand("scan", "Delta / Majda scan over an (r, M) grid");
  std::string sc_grid, sc_out = "scan.csv";
  double sc_gamma = 0.4;
  sc->add_option("--grid", sc_grid, "r=lo:hi:n,M=lo:hi:n")->required();
  sc->add_option("--gamma", sc_gamma, "Gruneisen coefficient");
  sc->add_option("--out", sc_out);

  // run
  auto* rn = app.add_subcommand("run", "full pipeline from a config");
  std::string rn_cfg;
  rn->add_option("--config", rn_cfg)->required();

  // selftest
  auto* st = app.add_subcommand("selftest", "property battery");
  std::uint64_t st_seed = 1;
  st->add_option("--seed", st_seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*hug) {
      std::shared_ptr<const Eos> eos;
      if (hug_eos == "ideal")
        eos = std::make_shared<IdealPolytropic>(hug_gamma, hug_cv);
      else if (hug_eos == "table")
        eos = std::make_shared<TableEos>(TableEos::from_csv(hug_table));
      else
        throw ConfigError("unknown EOS: " + hug_eos);
      GasState plus = make_state(*eos, hug_rho, hug_m / hug_rho, hug_e);
      if (!hug_sweep.empty()) {
        std::cout << "m,branch,inv_rho,p\n";
        for (double m : parse_range(hug_sweep)) {
          if (m >= 0) continue;
          for (int i = 0; i <= 200; ++i) {
            double rho = plus.rho * (1.0 + 7.0 * i / 200.0);
            double p_ray = plus.p - m * m * (1.0 / rho - 1.0 / plus.rho);
            std::cout << m << ",rayleigh," << 1.0 / rho << ',' << p_ray << '\n';
          }
        }
        // Hugoniot curve (flux-independent): solve e from the Hugoniot relation
        for (int i = 0; i <= 400; ++i) {
          double rho = plus.rho * (1.0 + 7.0 * i / 400.0);
          // e + q*0 - (e+ + q) + (p(e)+p+)/2 (1/rho - 1/rho+) = 0, ideal: linear in e
          const auto* ig = dynamic_cast<const IdealPolytropic*>(eos.get());
          if (!ig) break;
          double dinv = 1.0 / rho - 1.0 / plus.rho;
          double coef = 1.0 + 0.5 * ig->gruneisen() * rho * dinv;
          if (coef <= 0) continue;
          double e = (plus.e + hug_q - 0.5 * plus.p * dinv) / coef;
          std::cout << 0.0 << ",hugoniot," << 1.0 / rho << ',' << ig->p(rho, e) << '\n';
        }
        return 0;
      }
      EndstateRoots roots = solve_endstates(plus, hug_m, hug_q, *eos);
      Json out;
      auto state_json = [](const GasState& s) {
        return Json{{"rho", s.rho}, {"u", s.u}, {"e", s.e}, {"p", s.p}, {"T", s.T}};
      };
      out["strong"] = roots.strong ? state_json(*roots.strong) : Json(nullptr);
      out["weak"] = roots.weak ? state_json(*roots.weak) : Json(nullptr);
      if (roots.strong) {
        WavePair pair{plus, *roots.strong, hug_m, hug_q};
        auto dc = classify(pair, *eos);
        out["class"] = dc.kind == DetonationKind::strong ? "strong"
                       : dc.kind == DetonationKind::chapman_jouguet ? "chapman_jouguet"
                                                                    : "weak";
      } else {
        out["class"] = "none";
      }
      std::cout << out.dump(2) << "\n";
      return 0;
    }

    if (*prof_cmd) {
      RunConfig cfg = load_config(prof_cfg);
      cfg.threads = g_threads;
      info("solving profile");
      std::shared_ptr<Profile> p;
      if (cfg.model == "isentropic") {
        IsentropicLaw law{cfg.isentropic.value("K", 1.0), cfg.isentropic.value("gamma", 1.4)};
        p = std::make_shared<Profile>(isentropic_profile(law,
                                                         cfg.isentropic.value("rho_plus", 1.0),
                                                         cfg.isentropic.value("r", 2.0),
                                                         cfg.dissipation.nu_eff()));
      } else {
        auto eos = build_eos(cfg);
        WavePair pair = build_pair(cfg, *eos);
        if (cfg.model == "ns")
          p = std::make_shared<Profile>(ns_shock_profile(pair, cfg.dissipation.nu_eff(),
                                                         cfg.dissipation.theta_eff(), eos));
        else
          p = std::make_shared<Profile>(
              detonation_profile_continued(pair, cfg.dissipation, cfg.ignition, eos));
      }
      write_profile_csv(*p, prof_out);
      std::string side = prof_out.substr(0, prof_out.rfind('.')) + ".json";
      write_profile_sidecar(*p, cfg.raw, side);
      std::cout << profile_summary_json(*p).dump(2) << "\n";
      return 0;
    }

    if (*ev) {
      auto p = std::make_shared<Profile>(load_profile(ev_prof));
      EvansSystem sys(p, model_of(*p));
      Json rep;
      if (!ev_contour.empty()) {
        ContourSpec spec = parse_contour(ev_contour);
        WindingResult w = winding_number(sys, spec, {}, g_threads);
        std::vector<ScaledComplex> d(w.d_mant.size());
        for (size_t i = 0; i < d.size(); ++i) d[i] = {w.d_mant[i], w.d_log10[i]};
        write_evans_csv(w.lambdas, d, ev_out);
        rep["winding"] = winding_report_json(w, spec);
      }
      if (!ev_ray.empty()) {
        auto range = parse_range(ev_ray);
        RaySweep sw = evans_real_ray(sys, range.front(), range.back(), int(range.size()), {},
                                     ExecMode::parallel, g_threads);
        write_evans_csv(sw.lambdas, sw.d, ev_out);
        rep["real_ray"] = {{"lo", range.front()}, {"hi", range.back()}, {"n", range.size()}};
      }
      if (rep.is_null()) throw ConfigError("evans: need --contour or --real-ray");
      std::cout << rep.dump(2) << "\n";
      return 0;
    }

    if (*ix) {
      auto p = std::make_shared<Profile>(load_profile(ix_prof));
      IndexReport rep;
      std::string model = ix_model.empty()
                              ? (p->kind == ProfileKind::ns_shock
                                     ? "ns"
                                     : p->kind == ProfileKind::detonation ? "detonation"
                                                                          : "isentropic")
                              : ix_model;
      if (model == "ns")
        rep = index_ns(*p);
      else if (model == "isentropic")
        rep = index_isentropic(*p);
      else {
        EvansSystem sys(p, ModelKind::reacting);
        rep = index_detonation(sys);
      }
      Json out = index_report_json(rep);
      write_json(out, ix_out);
      std::cout << out.dump(2) << "\n";
      return 0;
    }

    if (*sc) {
      // --grid r=lo:hi:n,M=lo:hi:n
      std::vector<double> rs, Ms;
      std::stringstream ss(sc_grid);
      std::string part;
      while (std::getline(ss, part, ',')) {
        auto eq = part.find('=');
        if (eq == std::string::npos) throw ConfigError("bad grid: " + sc_grid);
        auto vals = parse_range(part.substr(eq + 1));
        if (part.substr(0, eq) == "r")
          rs = vals;
        else if (part.substr(0, eq) == "M")
          Ms = vals;
      }
      if (rs.empty() || Ms.empty()) throw ConfigError("scan grid needs r= and M=");
      IdealPolytropic ig(sc_gamma, 1.0);
      ScanGrid g = delta_majda_scan(ig, rs, Ms, ExecMode::parallel, g_threads);
      std::ofstream out(sc_out);
      out << std::setprecision(17) << "r,M,delta,majda\n";
      for (size_t i = 0; i < rs.size(); ++i)
        for (size_t j = 0; j < Ms.size(); ++j)
          out << rs[i] << ',' << Ms[j] << ',' << g.delta(i, j) << ',' << g.majda(i, j) << '\n';
      std::cout << "{\"rows\": " << rs.size() * Ms.size() << "}\n";
      return 0;
    }

    if (*rn) {
      RunConfig cfg = load_config(rn_cfg);
      if (g_threads) cfg.threads = g_threads;
      Json rep = run_pipeline(cfg);
      std::cout << rep["index"].dump(2) << "\n";
      return 0;
    }

    if (*st) {
      SelfTestResult r = selftest(st_seed, g_threads);
      for (const auto& it : r.items)
        std::cout << (it.pass ? "[PASS] " : "[FAIL] ") << it.name
                  << (it.detail.empty() ? "" : "  (" + it.detail + ")") << "\n";
      return r.all_pass() ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IndeterminateSign& e) {
    std::cerr << "indeterminate sign: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
