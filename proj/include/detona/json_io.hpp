#pragma once

#include <json.hpp>
#include <string>

#include "detona/index.hpp"

namespace detona {

using Json = nlohmann::json;

constexpr int kSchemaVersion = 1;

struct RunConfig {
  std::string model;  // "ns" | "isentropic" | "detonation"
  std::uint64_t seed = 1;
  Json eos;                       // {"type":"ideal","gamma_gruneisen":..,"c_v":..} or table
  Json endstates;                 // {"plus":{rho,u,e}, "m":.., "q":..} or {"plus", "r", "q"}
  Json isentropic;                // {"K","gamma","rho_plus","r"}
  DissipationParams dissipation;  // includes epsilon for ZND continuation
  IgnitionFunction ignition;
  bool have_contour = false;
  ContourSpec contour;
  std::string out_dir = ".";
  int threads = 0;
  Json raw;  // the exact config as parsed, embedded in every report
};

RunConfig parse_config(const Json& j);
RunConfig load_config(const std::string& path);

std::shared_ptr<const Eos> build_eos(const RunConfig& cfg);
WavePair build_pair(const RunConfig& cfg, const Eos& eos);

// Artifact writers (no timestamps; reports are reproducible byte-for-byte).
void write_profile_csv(const Profile& p, const std::string& path);
void write_profile_sidecar(const Profile& p, const Json& config, const std::string& path);
Profile load_profile(const std::string& csv_path);  // uses the sidecar next to the CSV

void write_evans_csv(const std::vector<Cplx>& lambdas, const std::vector<ScaledComplex>& d,
                     const std::string& path);

Json index_report_json(const IndexReport& rep);
Json winding_report_json(const WindingResult& w, const ContourSpec& spec);
Json small_q_report_json(const SmallQReport& rep);
Json profile_summary_json(const Profile& p);

void write_json(const Json& j, const std::string& path);

}  // namespace detona
