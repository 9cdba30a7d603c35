#include "detona/json_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace detona {

namespace {

double need_num(const Json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_number())
    throw ConfigError("config: missing numeric field '" + key + "'");
  return j[key].get<double>();
}

}  // namespace

RunConfig parse_config(const Json& j) {
  RunConfig cfg;
  cfg.raw = j;
  if (!j.is_object() || j.empty()) throw ConfigError("config: empty or not an object");
  if (j.contains("schema_version") && j["schema_version"].get<int>() != kSchemaVersion)
    throw ConfigError("config: unsupported schema_version");
  if (!j.contains("model")) throw ConfigError("config: missing 'model'");
  cfg.model = j["model"].get<std::string>();
  if (cfg.model != "ns" && cfg.model != "isentropic" && cfg.model != "detonation")
    throw ConfigError("config: model must be ns|isentropic|detonation");
  cfg.seed = j.value("seed", std::uint64_t(1));
  if (j.contains("eos")) cfg.eos = j["eos"];
  if (j.contains("endstates")) cfg.endstates = j["endstates"];
  if (j.contains("isentropic")) cfg.isentropic = j["isentropic"];
  if (j.contains("dissipation")) {
    const Json& d = j["dissipation"];
    cfg.dissipation.nu = d.value("nu", 0.1);
    cfg.dissipation.theta = d.value("theta", 0.1);
    cfg.dissipation.d = d.value("d", 0.1);
    cfg.dissipation.k = d.value("k", 1.0);
    cfg.dissipation.epsilon = d.value("epsilon", 1.0);
    if (d.contains("hat_ratios")) {
      auto hr = d["hat_ratios"];
      if (!hr.is_array() || hr.size() != 3) throw ConfigError("config: hat_ratios = [nu,theta,d]");
      cfg.dissipation.nu *= hr[0].get<double>();
      cfg.dissipation.theta *= hr[1].get<double>();
      cfg.dissipation.d *= hr[2].get<double>();
    }
    cfg.dissipation.validate();
  }
  if (j.contains("ignition")) {
    cfg.ignition.T_i = need_num(j["ignition"], "T_i");
    cfg.ignition.T_on = need_num(j["ignition"], "T_on");
    if (!(cfg.ignition.T_on > cfg.ignition.T_i))
      throw ConfigError("config: need T_on > T_i");
  }
  if (j.contains("evans") && j["evans"].contains("contour")) {
    const Json& c = j["evans"]["contour"];
    cfg.have_contour = true;
    cfg.contour.R = c.value("R", 10.0);
    cfg.contour.delta = c.value("delta", 1e-3);
    cfg.contour.n = c.value("n", 256);
    if (cfg.contour.R <= 0 || cfg.contour.delta <= 0)
      throw ConfigError("config: contour R, delta must be positive");
  }
  if (j.contains("out") && j["out"].contains("dir")) cfg.out_dir = j["out"]["dir"];
  cfg.threads = j.value("threads", 0);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

std::shared_ptr<const Eos> build_eos(const RunConfig& cfg) {
  if (cfg.eos.is_null()) throw ConfigError("config: missing 'eos'");
  std::string type = cfg.eos.value("eos", cfg.eos.value("type", "ideal"));
  if (type == "ideal") {
    double G = need_num(cfg.eos, "gamma_gruneisen");
    double cv = need_num(cfg.eos, "c_v");
    return std::make_shared<IdealPolytropic>(G, cv);
  }
  if (type == "table") {
    if (!cfg.eos.contains("csv")) throw ConfigError("config: table EOS needs 'csv'");
    return std::make_shared<TableEos>(TableEos::from_csv(cfg.eos["csv"].get<std::string>()));
  }
  throw ConfigError("config: unknown eos type '" + type + "'");
}

WavePair build_pair(const RunConfig& cfg, const Eos& eos) {
  const Json& es = cfg.endstates;
  if (es.is_null() || !es.contains("plus")) throw ConfigError("config: missing endstates.plus");
  const Json& pl = es["plus"];
  double rho = need_num(pl, "rho");
  double e = pl.contains("e") ? need_num(pl, "e")
                              : eos.e_from_T(rho, need_num(pl, "T"));
  double s_shift = es.value("s", 0.0);
  double u = need_num(pl, "u") - s_shift;  // Galilean normalization to s = 0
  double q = es.value("q", 0.0);
  if (q < 0) throw ConfigError("config: q must be >= 0");

  // normalize rho_+ = 1 at ingestion (ideal EOS scaling; tables are used as-is)
  double scale = 1.0;
  if (eos.is_ideal() && std::abs(rho - 1.0) > 1e-14) scale = 1.0 / rho;
  GasState plus = make_state(eos, rho * scale, u, e);

  double m;
  if (es.contains("m"))
    m = need_num(es, "m") * scale;
  else
    m = plus.rho * plus.u;
  if (m >= 0) throw ConfigError("config: 3-shock frame requires m < 0");

  if (es.contains("minus")) {
    const Json& mi = es["minus"];
    GasState minus = make_state(eos, need_num(mi, "rho") * scale, need_num(mi, "u") - s_shift,
                                mi.contains("e") ? need_num(mi, "e")
                                                 : eos.e_from_T(need_num(mi, "rho") * scale,
                                                                need_num(mi, "T")));
    WavePair pair;
    pair.plus = plus;
    pair.minus = minus;
    pair.m = m;
    pair.q = q;
    Vec3 rh = rh_residuals(pair);
    if (rh.cwiseAbs().maxCoeff() > 1e-6)
      throw ConfigError("config: explicit minus state violates Rankine-Hugoniot");
    return pair;
  }
  if (es.contains("r")) {
    const auto& ig = dynamic_cast<const IdealPolytropic&>(eos);
    return pair_from_compression(ig, plus, need_num(es, "r"), q);
  }
  return make_pair(eos, plus, m, q, DetonationKind::strong);
}

void write_profile_csv(const Profile& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << std::setprecision(17);
  out << "x,u,T,Y,Z,rho,m,E\n";
  for (size_t i = 0; i < p.xs.size(); ++i) {
    double x = p.xs[i];
    if (p.kind == ProfileKind::isentropic) {
      double rho = p.ys[i][0];
      out << x << ',' << p.pair.m / rho << ",0,0,0," << rho << ',' << p.pair.m << ",0\n";
      continue;
    }
    double u = p.ys[i][0], e = p.ys[i][1];
    double rho = p.pair.m / u;
    double T = p.eos->T(rho, e);
    double Y = p.kind == ProfileKind::detonation ? p.ys[i][2] : 0.0;
    double Z = p.kind == ProfileKind::detonation ? p.ys[i][3] : 0.0;
    double En = rho * (0.5 * u * u + e);
    out << x << ',' << u << ',' << T << ',' << Y << ',' << Z << ',' << rho << ',' << p.pair.m
        << ',' << En << '\n';
  }
}

Json profile_summary_json(const Profile& p) {
  Json j;
  j["kind"] = p.kind == ProfileKind::ns_shock
                  ? "ns_shock"
                  : (p.kind == ProfileKind::detonation ? "detonation" : "isentropic");
  j["x_min"] = p.x_min();
  j["x_max"] = p.x_max();
  j["nodes"] = p.xs.size();
  j["tail_rates"] = {{"alpha_minus", p.alpha_minus}, {"alpha_plus", p.alpha_plus}};
  j["znd_composite"] = p.znd_composite;
  Json tv;
  tv["shoot_angle"] = p.shoot_angle;
  tv["leave_dir_minus"] = std::vector<double>(p.tail_dir_minus.data(),
                                              p.tail_dir_minus.data() + p.tail_dir_minus.size());
  tv["arrive_dir_plus"] = std::vector<double>(p.tail_dir_plus.data(),
                                              p.tail_dir_plus.data() + p.tail_dir_plus.size());
  j["transversality"] = tv;
  j["params"] = {{"nu", p.nu}, {"theta", p.theta}, {"d", p.d}, {"k", p.k}, {"q", p.q}};
  j["pair"] = {{"m", p.pair.m},
               {"q", p.pair.q},
               {"plus", {{"rho", p.pair.plus.rho}, {"u", p.pair.plus.u}, {"e", p.pair.plus.e}}},
               {"minus",
                {{"rho", p.pair.minus.rho}, {"u", p.pair.minus.u}, {"e", p.pair.minus.e}}}};
  return j;
}

void write_profile_sidecar(const Profile& p, const Json& config, const std::string& path) {
  Json j = profile_summary_json(p);
  j["schema_version"] = kSchemaVersion;
  j["config"] = config;
  j["ignition"] = {{"T_i", p.ign.T_i}, {"T_on", p.ign.T_on}};
  if (p.kind == ProfileKind::isentropic)
    j["law"] = {{"K", p.law.K}, {"gamma", p.law.g}};
  write_json(j, path);
}

Profile load_profile(const std::string& csv_path) {
  std::string side = csv_path;
  auto dot = side.rfind('.');
  side = (dot == std::string::npos ? side : side.substr(0, dot)) + ".json";
  std::ifstream sj(side);
  if (!sj) throw ConfigError("profile sidecar not found: " + side);
  Json meta;
  sj >> meta;

  RunConfig cfg = parse_config(meta["config"]);
  Profile p;
  std::string kind = meta["kind"].get<std::string>();
  p.kind = kind == "ns_shock" ? ProfileKind::ns_shock
                              : (kind == "detonation" ? ProfileKind::detonation
                                                      : ProfileKind::isentropic);
  p.nu = meta["params"]["nu"].get<double>();
  p.theta = meta["params"]["theta"].get<double>();
  p.d = meta["params"]["d"].get<double>();
  p.k = meta["params"]["k"].get<double>();
  p.q = meta["params"]["q"].get<double>();
  p.znd_composite = meta.value("znd_composite", false);
  if (meta.contains("ignition")) {
    p.ign.T_i = meta["ignition"]["T_i"].get<double>();
    p.ign.T_on = meta["ignition"]["T_on"].get<double>();
  }
  if (p.kind == ProfileKind::isentropic) {
    p.law.K = meta["law"]["K"].get<double>();
    p.law.g = meta["law"]["gamma"].get<double>();
  } else {
    p.eos = build_eos(cfg);
  }
  const Json& pr = meta["pair"];
  p.pair.m = pr["m"].get<double>();
  p.pair.q = pr["q"].get<double>();
  if (p.kind == ProfileKind::isentropic) {
    double rp = pr["plus"]["rho"].get<double>(), rm = pr["minus"]["rho"].get<double>();
    p.pair.plus.rho = rp;
    p.pair.plus.u = p.pair.m / rp;
    p.pair.plus.p = p.law.p(rp);
    p.pair.plus.c = p.law.c(rp);
    p.pair.plus.m = p.pair.m;
    p.pair.minus.rho = rm;
    p.pair.minus.u = p.pair.m / rm;
    p.pair.minus.p = p.law.p(rm);
    p.pair.minus.c = p.law.c(rm);
    p.pair.minus.m = p.pair.m;
  } else {
    p.pair.plus = make_state(*p.eos, pr["plus"]["rho"].get<double>(),
                             pr["plus"]["u"].get<double>(), pr["plus"]["e"].get<double>());
    p.pair.minus = make_state(*p.eos, pr["minus"]["rho"].get<double>(),
                              pr["minus"]["u"].get<double>(), pr["minus"]["e"].get<double>());
  }

  std::ifstream in(csv_path);
  if (!in) throw ConfigError("cannot open " + csv_path);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<double> v;
    std::string tok;
    while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
    p.xs.push_back(v[0]);
    if (p.kind == ProfileKind::isentropic) {
      p.ys.push_back(Vec{{v[1]}});  // core state is u
    } else if (p.kind == ProfileKind::ns_shock) {
      p.ys.push_back(Vec{{v[1], p.eos->e_from_T(v[5], v[2])}});
    } else {
      p.ys.push_back(Vec{{v[1], p.eos->e_from_T(v[5], v[2]), v[3], v[4]}});
    }
  }
  if (p.xs.size() < 4) throw ConfigError("profile CSV too short");

  // rebuild endstates, node derivatives and tails from the ODE
  if (p.kind == ProfileKind::isentropic) {
    p.end_minus = Vec{{p.pair.m / p.pair.minus.rho}};
    p.end_plus = Vec{{p.pair.m / p.pair.plus.rho}};
  } else if (p.kind == ProfileKind::ns_shock) {
    p.end_minus = Vec{{p.pair.minus.u, p.pair.minus.e}};
    p.end_plus = Vec{{p.pair.plus.u, p.pair.plus.e}};
  } else {
    p.end_minus = Vec{{p.pair.minus.u, p.pair.minus.e, 0.0, 0.0}};
    p.end_plus = Vec{{p.pair.plus.u, p.pair.plus.e, 1.0, 1.0}};
  }
  for (size_t i = 0; i < p.xs.size(); ++i) p.dys.push_back(p.rhs(p.ys[i]));

  auto f = [&](const Vec& y) { return p.rhs(y); };
  auto fd_jac = [&](const Vec& y) {
    Vec f0 = f(y);
    Mat J(f0.size(), y.size());
    for (Eigen::Index jx = 0; jx < y.size(); ++jx) {
      double h = 1e-7 * std::max(1.0, std::abs(y[jx]));
      Vec yp = y, ym = y;
      yp[jx] += h;
      ym[jx] -= h;
      J.col(jx) = (f(yp) - f(ym)) / (2 * h);
    }
    return J;
  };
  auto make_tail = [&](const Mat& J, const Vec& dev, bool keep_unstable) {
    EigPairs ep = eig(J);
    Profile::TailData t;
    t.mu = ep.values;
    t.V = ep.vectors;
    t.coef = ep.vectors.fullPivLu().solve(CVec(dev.cast<Cplx>()));
    for (Eigen::Index i = 0; i < t.coef.size(); ++i) {
      double re = ep.values[i].real();
      bool wrong = keep_unstable ? (re < -1e-9) : (re > 1e-9);
      if (wrong) t.coef[i] = 0;
    }
    return t;
  };
  p.tail_minus = make_tail(fd_jac(p.end_minus), Vec(p.ys.front() - p.end_minus), true);
  p.tail_plus = make_tail(fd_jac(p.end_plus), Vec(p.ys.back() - p.end_plus), false);
  Vec dm = p.ys.front() - p.end_minus, dp = p.ys.back() - p.end_plus;
  p.tail_dir_minus = dm / std::max(dm.norm(), 1e-300);
  p.tail_dir_plus = dp / std::max(dp.norm(), 1e-300);
  p.alpha_minus = meta["tail_rates"]["alpha_minus"].get<double>();
  p.alpha_plus = meta["tail_rates"]["alpha_plus"].get<double>();
  return p;
}

void write_evans_csv(const std::vector<Cplx>& lambdas, const std::vector<ScaledComplex>& d,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << std::setprecision(17);
  out << "re_lambda,im_lambda,re_d,im_d,log10_scale\n";
  for (size_t i = 0; i < lambdas.size(); ++i)
    out << lambdas[i].real() << ',' << lambdas[i].imag() << ',' << d[i].mant.real() << ','
        << d[i].mant.imag() << ',' << d[i].log10 << '\n';
}

Json index_report_json(const IndexReport& rep) {
  Json j;
  j["model"] = rep.model;
  j["gamma_tilde"] = rep.gamma_tilde;
  j["parity"] = rep.parity_even ? "even (consistent with stability)" : "odd (unstable)";
  j["delta"] = rep.delta;
  if (rep.model == "detonation") {
    j["majda_value"] = rep.majda_value;
    j["gamma_ns"] = rep.gamma_ns;
    j["gamma_d"] = rep.gamma_d;
    j["z3_plus"] = rep.z3_plus;
    j["z7_minus"] = rep.z7_minus;
    j["det_u6"] = rep.det_u6;
  }
  Json f = Json::array();
  for (const auto& fac : rep.factors)
    f.push_back({{"name", fac.name}, {"value", fac.value}, {"sign", fac.sign}});
  j["factors"] = f;
  j["orientation"] = rep.orientation_note;
  j["recomposed"] = rep.recompose();
  return j;
}

Json winding_report_json(const WindingResult& w, const ContourSpec& spec) {
  Json j;
  j["winding"] = w.winding;
  j["contour"] = {{"R", spec.R}, {"delta", spec.delta}, {"n_initial", spec.n}};
  j["n_points_final"] = w.n_points;
  j["refinement_rounds"] = w.rounds;
  return j;
}

Json small_q_report_json(const SmallQReport& rep) {
  Json j;
  j["applicable"] = rep.applicable;
  j["base_winding"] = rep.base_winding;
  j["reaction_spectrum_max_re"] = rep.reaction_max_re;
  j["rayleigh_max_re"] = rep.rayleigh_max_re;
  j["d0_variant_unstable_growth"] = rep.d0_unstable_growth;
  j["q"] = rep.qs;
  j["windings"] = rep.windings;
  j["verdict"] = rep.verdict;
  return j;
}

void write_json(const Json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace detona
