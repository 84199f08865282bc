#include "flexsense/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "flexsense/array.hpp"
#include "flexsense/errors.hpp"
#include "flexsense/subspace_foc.hpp"
#include "flexsense/subspace_soc.hpp"

namespace flexsense {

namespace {

using json = nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr std::pair<EstimatorKind, std::string_view> kEstimatorTags[] = {
    {EstimatorKind::SocMusic, "soc_music"},
    {EstimatorKind::SocNewton, "soc_newton"},
    {EstimatorKind::FocMusic, "foc_music"},
    {EstimatorKind::FocNewton, "foc_newton"},
    {EstimatorKind::ConventionalLs, "conventional_ls"},
    {EstimatorKind::SensingSocMusic, "sensing_assisted_soc_music"},
    {EstimatorKind::SensingSocNewton, "sensing_assisted_soc_newton"},
    {EstimatorKind::SensingFocMusic, "sensing_assisted_foc_music"},
    {EstimatorKind::SensingFocNewton, "sensing_assisted_foc_newton"},
    {EstimatorKind::SensingOracle, "sensing_assisted_oracle"},
};

bool uses_soc(EstimatorKind k) {
  return k == EstimatorKind::SocMusic || k == EstimatorKind::SocNewton || k == EstimatorKind::SensingSocMusic ||
         k == EstimatorKind::SensingSocNewton;
}

bool uses_foc(EstimatorKind k) {
  return k == EstimatorKind::FocMusic || k == EstimatorKind::FocNewton || k == EstimatorKind::SensingFocMusic ||
         k == EstimatorKind::SensingFocNewton;
}

bool is_sensing_assisted(EstimatorKind k) {
  return k == EstimatorKind::SensingSocMusic || k == EstimatorKind::SensingSocNewton ||
         k == EstimatorKind::SensingFocMusic || k == EstimatorKind::SensingFocNewton ||
         k == EstimatorKind::SensingOracle;
}

// DOA estimator behind a DOA-producing tag.
EstimatorKind doa_stage(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::SensingSocMusic: return EstimatorKind::SocMusic;
    case EstimatorKind::SensingSocNewton: return EstimatorKind::SocNewton;
    case EstimatorKind::SensingFocMusic: return EstimatorKind::FocMusic;
    case EstimatorKind::SensingFocNewton: return EstimatorKind::FocNewton;
    default: return k;
  }
}

// ---------------------------------------------------------------------------
// Presets

std::vector<EstimatorKind> tags(std::initializer_list<EstimatorKind> list) { return list; }

const std::vector<ScenarioInfo> kScenarios = {
    {"los_ula", "K=2 uncorrelated QPSK users at -20/-25 deg (+-0.5 deg jitter), N=40 ports, ULA {1,2,3,4}; "
                "DOA RMSE and channel NMSE versus SNR with a 40-pilot budget"},
    {"coherent_mra", "K=3 at -45/0/40 deg (+-0.5 deg jitter) with s2 = 0.9 s1 coherent, MRA {1,2,5,7}; "
                     "NLOS multipath robustness"},
    {"underdetermined_mra", "K=6 at -55/-32/-10/10/32/55 deg (+-0.5 deg jitter), MRA {1,2,5,7}; "
                            "more sources than RF chains"},
    {"random_sep", "K=2 uniform DOAs in [-60, 60] deg with minimum separation 20 deg, ULA {1,2,3,4}"},
    {"random_sep_narrow", "K=2 uniform DOAs in [-60, 60] deg with minimum separation 3 deg, ULA {1,2,3,4}"},
    {"pilot_overhead", "K=2 at -20/-25 deg, N=40, M=4, T_p=40, 0 dB: conventional LS versus calibration "
                       "with true DOAs (theoretical NMSE check)"},
};

// ---------------------------------------------------------------------------
// JSON helpers

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::Parse, path + ": " + what);
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) schema_error(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      schema_error(path.empty() ? key : path + "." + key, "unknown field");
    }
  }
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) schema_error(path, "expected a number");
  return j.get<double>();
}

int as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) schema_error(path, "expected an integer");
  const auto v = j.get<long long>();
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) schema_error(path, "out of range");
  return static_cast<int>(v);
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) schema_error(path, "expected true or false");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) schema_error(path, "expected a string");
  return j.get<std::string>();
}

std::vector<double> as_number_list(const json& j, const std::string& path) {
  if (!j.is_array()) schema_error(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<int> as_int_list(const json& j, const std::string& path) {
  if (!j.is_array()) schema_error(path, "expected an array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_int(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

cd as_complex(const json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  schema_error(path, "expected a number or [re, im]");
}

void apply_geometry(const json& j, GeometrySpec& g) {
  check_keys(j, "geometry", {"n_ports", "omega", "spacing"});
  if (j.contains("n_ports")) g.n_ports = as_int(j["n_ports"], "geometry.n_ports");
  if (j.contains("omega")) g.omega = as_int_list(j["omega"], "geometry.omega");
  if (j.contains("spacing")) g.spacing = as_number(j["spacing"], "geometry.spacing");
}

void apply_sources(const json& j, SourceSpec& s) {
  check_keys(j, "sources",
             {"k", "doas_deg", "random", "perturbation_deg", "coherence", "modulation", "gain_ratio_max"});
  if (j.contains("k")) s.n_sources = as_int(j["k"], "sources.k");
  if (j.contains("doas_deg")) {
    s.doas_deg = as_number_list(j["doas_deg"], "sources.doas_deg");
    s.random.reset();
  }
  if (j.contains("random")) {
    const json& r = j["random"];
    if (r.is_null()) {
      s.random.reset();
    } else {
      check_keys(r, "sources.random", {"min_deg", "max_deg", "min_separation_deg"});
      RandomDoaSpec spec = s.random.value_or(RandomDoaSpec{});
      if (r.contains("min_deg")) spec.min_deg = as_number(r["min_deg"], "sources.random.min_deg");
      if (r.contains("max_deg")) spec.max_deg = as_number(r["max_deg"], "sources.random.max_deg");
      if (r.contains("min_separation_deg")) {
        spec.min_separation_deg = as_number(r["min_separation_deg"], "sources.random.min_separation_deg");
      }
      s.random = spec;
      s.doas_deg.clear();
    }
  }
  if (j.contains("perturbation_deg")) s.perturbation_deg = as_number(j["perturbation_deg"], "sources.perturbation_deg");
  if (j.contains("coherence")) {
    const json& c = j["coherence"];
    if (!c.is_array()) schema_error("sources.coherence", "expected an array");
    s.coherence.clear();
    for (std::size_t i = 0; i < c.size(); ++i) {
      const std::string path = "sources.coherence[" + std::to_string(i) + "]";
      check_keys(c[i], path, {"target", "source", "alpha"});
      if (!c[i].contains("target") || !c[i].contains("source")) schema_error(path, "needs target and source");
      Coherence coh;
      coh.target = as_int(c[i]["target"], path + ".target") - 1;
      coh.source = as_int(c[i]["source"], path + ".source") - 1;
      coh.alpha = c[i].contains("alpha") ? as_complex(c[i]["alpha"], path + ".alpha") : cd{1.0, 0.0};
      s.coherence.push_back(coh);
    }
  }
  if (j.contains("modulation")) {
    const std::string m = as_string(j["modulation"], "sources.modulation");
    if (m == "qpsk") {
      s.modulation = Modulation::Qpsk;
    } else if (m == "gaussian") {
      s.modulation = Modulation::Gaussian;
    } else {
      schema_error("sources.modulation", "unknown modulation '" + m + "'");
    }
  }
  if (j.contains("gain_ratio_max")) s.gain_ratio_max = as_number(j["gain_ratio_max"], "sources.gain_ratio_max");
}

void apply_search(const json& j, SearchConfig& s) {
  check_keys(j, "search",
             {"min_deg", "max_deg", "dense_step_deg", "coarse_step_deg", "max_iter", "tolerance", "trust_radius_deg"});
  if (j.contains("min_deg")) s.min_deg = as_number(j["min_deg"], "search.min_deg");
  if (j.contains("max_deg")) s.max_deg = as_number(j["max_deg"], "search.max_deg");
  if (j.contains("dense_step_deg")) s.dense_step_deg = as_number(j["dense_step_deg"], "search.dense_step_deg");
  if (j.contains("coarse_step_deg")) s.coarse_step_deg = as_number(j["coarse_step_deg"], "search.coarse_step_deg");
  if (j.contains("max_iter")) s.max_iter = as_int(j["max_iter"], "search.max_iter");
  if (j.contains("tolerance")) s.tolerance = as_number(j["tolerance"], "search.tolerance");
  if (j.contains("trust_radius_deg")) {
    s.trust_radius = deg_to_rad(as_number(j["trust_radius_deg"], "search.trust_radius_deg"));
  }
}

// ---------------------------------------------------------------------------
// Trial evaluation

struct TrialAccumulator {
  double rmse = 0.0;
  double nmse = 0.0;
  double miss = 0.0;
  double iters = 0.0;
  double runtime = 0.0;
};

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 10);
  return std::string(buf, res.ptr);
}

double mean_iterations(const DoaEstimate& est) {
  if (est.iterations.empty()) return 0.0;
  double s = 0.0;
  for (int it : est.iterations) s += it;
  return s / static_cast<double>(est.iterations.size());
}

}  // namespace

std::string_view to_string(EstimatorKind kind) {
  for (const auto& [k, tag] : kEstimatorTags) {
    if (k == kind) return tag;
  }
  return "unknown";
}

std::optional<EstimatorKind> estimator_from_string(std::string_view tag) {
  for (const auto& [k, t] : kEstimatorTags) {
    if (t == tag) return k;
  }
  return std::nullopt;
}

const std::vector<ScenarioInfo>& builtin_scenarios() { return kScenarios; }

BenchConfig scenario_preset(std::string_view name) {
  BenchConfig c;
  c.scenario = std::string(name);
  using E = EstimatorKind;
  if (name == "los_ula") {
    c.estimators = tags({E::SocMusic, E::SocNewton, E::ConventionalLs, E::SensingSocMusic, E::SensingSocNewton,
                         E::SensingOracle});
  } else if (name == "coherent_mra") {
    c.geometry.omega = {1, 2, 5, 7};
    c.sources.n_sources = 3;
    c.sources.doas_deg = {-45.0, 0.0, 40.0};
    c.sources.coherence = {Coherence{1, 0, cd{0.9, 0.0}}};
    c.estimators = tags({E::SocMusic, E::SocNewton, E::FocMusic, E::FocNewton});
  } else if (name == "underdetermined_mra") {
    c.geometry.omega = {1, 2, 5, 7};
    c.sources.n_sources = 6;
    c.sources.doas_deg = {-55.0, -32.0, -10.0, 10.0, 32.0, 55.0};
    c.estimators = tags({E::FocMusic, E::FocNewton});
  } else if (name == "random_sep" || name == "random_sep_narrow") {
    c.sources.doas_deg.clear();
    c.sources.random = RandomDoaSpec{-60.0, 60.0, name == "random_sep" ? 20.0 : 3.0};
    c.estimators = tags({E::SocMusic, E::SocNewton, E::FocMusic, E::FocNewton});
  } else if (name == "pilot_overhead") {
    c.snr_db = {0.0};
    c.estimators = tags({E::ConventionalLs, E::SensingOracle});
  } else {
    throw Error(ErrorKind::Parse, "scenario: unknown built-in scenario '" + std::string(name) + "'");
  }
  return c;
}

BenchConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("<document>: ") + e.what());
  }
  check_keys(doc, "",
             {"scenario", "geometry", "sources", "snr_db", "snapshots", "trials", "estimators", "pilots",
              "noise_power", "search", "seed", "output", "threads", "timing", "miss_penalty_deg"});
  if (!doc.contains("scenario")) schema_error("scenario", "required field missing");

  const std::string name = as_string(doc["scenario"], "scenario");
  const bool builtin = std::any_of(kScenarios.begin(), kScenarios.end(),
                                   [&](const ScenarioInfo& s) { return s.name == name; });
  BenchConfig c;
  if (builtin) {
    c = scenario_preset(name);
  } else {
    if (!doc.contains("geometry") || !doc.contains("sources")) {
      schema_error("scenario", "'" + name + "' is not built in; geometry and sources are required");
    }
    c.scenario = name;
  }

  if (doc.contains("geometry")) apply_geometry(doc["geometry"], c.geometry);
  if (doc.contains("sources")) apply_sources(doc["sources"], c.sources);
  if (doc.contains("snr_db")) c.snr_db = as_number_list(doc["snr_db"], "snr_db");
  if (doc.contains("snapshots")) c.snapshots = as_int(doc["snapshots"], "snapshots");
  if (doc.contains("trials")) c.trials = as_int(doc["trials"], "trials");
  if (doc.contains("estimators")) {
    const json& e = doc["estimators"];
    if (!e.is_array()) schema_error("estimators", "expected an array of estimator tags");
    c.estimators.clear();
    for (std::size_t i = 0; i < e.size(); ++i) {
      const std::string path = "estimators[" + std::to_string(i) + "]";
      const std::string tag = as_string(e[i], path);
      const auto kind = estimator_from_string(tag);
      if (!kind) schema_error(path, "unknown estimator '" + tag + "'");
      c.estimators.push_back(*kind);
    }
  }
  if (doc.contains("pilots")) c.pilots = as_int(doc["pilots"], "pilots");
  if (doc.contains("noise_power")) c.noise_power = as_number(doc["noise_power"], "noise_power");
  if (doc.contains("search")) apply_search(doc["search"], c.search);
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) schema_error("seed", "expected a non-negative integer");
    c.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("output")) c.output = as_string(doc["output"], "output");
  if (doc.contains("threads")) c.threads = as_int(doc["threads"], "threads");
  if (doc.contains("timing")) c.timing = as_bool(doc["timing"], "timing");
  if (doc.contains("miss_penalty_deg")) c.miss_penalty_deg = as_number(doc["miss_penalty_deg"], "miss_penalty_deg");

  validate_config(c);
  return c;
}

BenchConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void validate_config(const BenchConfig& c) {
  auto fail = [](const std::string& rule) { throw Error(ErrorKind::Validation, rule); };

  ArrayGeometry geometry;
  try {
    geometry = build_geometry(c.geometry.n_ports, c.geometry.omega, c.geometry.spacing);
  } catch (const Error& e) {
    fail(std::string("geometry: ") + e.what());
  }
  const int k = c.sources.n_sources;
  const int m = geometry.n_active();
  if (k < 1) fail("K must be >= 1");
  if (c.trials < 1) fail("trials must be >= 1");
  if (c.snapshots < 2) fail("snapshots must be >= 2");
  if (c.snr_db.empty()) fail("snr_db sweep is empty");
  if (c.estimators.empty()) fail("no estimators configured");
  if (!(c.noise_power > 0.0)) fail("noise_power must be > 0");
  if (!(c.sources.gain_ratio_max >= 1.0)) fail("gain_ratio_max must be >= 1");
  if (c.threads < 1) fail("threads must be >= 1");
  if (c.search.dense_step_deg <= 0.0 || c.search.coarse_step_deg <= 0.0) fail("grid steps must be > 0");
  if (c.search.min_deg < -90.0 || c.search.max_deg > 90.0 || c.search.min_deg >= c.search.max_deg) {
    fail("search range must lie within [-90, 90] deg");
  }
  if (c.search.max_iter < 1) fail("max_iter must be >= 1");

  if (c.sources.random) {
    const auto& r = *c.sources.random;
    if (!(r.min_deg > -90.0 && r.max_deg < 90.0 && r.min_deg < r.max_deg)) {
      fail("random DOA range must lie inside (-90, 90) deg");
    }
    if (r.min_separation_deg < 0.0) fail("min_separation_deg must be >= 0");
    if (static_cast<double>(k - 1) * r.min_separation_deg > r.max_deg - r.min_deg) {
      fail("K DOAs cannot fit in the random range with the requested separation");
    }
  } else {
    if (static_cast<int>(c.sources.doas_deg.size()) != k) fail("doas_deg must list exactly K angles");
    std::vector<double> sorted = c.sources.doas_deg;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (std::abs(sorted[i]) + c.sources.perturbation_deg >= 90.0) fail("DOAs must stay inside (-90, 90) deg");
      if (i > 0 && sorted[i] == sorted[i - 1]) fail("DOAs must be distinct");
    }
  }
  try {
    validate_coherence(k, c.sources.coherence);
  } catch (const Error& e) {
    fail(e.what());
  }

  const int dof = virtual_geometry(geometry).dof;
  for (EstimatorKind e : c.estimators) {
    if (uses_soc(e) && k >= m) {
      fail("SOC requires K < M (estimator " + std::string(to_string(e)) + ", K = " + std::to_string(k) +
           ", M = " + std::to_string(m) + ")");
    }
    if (uses_foc(e) && (k > dof || k >= m * m)) {
      fail("FOC requires K <= dof (estimator " + std::string(to_string(e)) + ", K = " + std::to_string(k) +
           ", dof = " + std::to_string(dof) + ")");
    }
    if (is_sensing_assisted(e) && c.pilots < k) fail("calibration requires T_p >= K");
    if (e == EstimatorKind::ConventionalLs && pilots_per_subset(c.pilots, geometry.n_ports, m) < k) {
      fail("conventional LS requires T_p / ceil(N/M) >= K");
    }
  }
}

TrialRealization draw_realization(const BenchConfig& c, const ArrayGeometry& geometry, double snr_db, Rng& rng) {
  const int k = c.sources.n_sources;
  const int m = geometry.n_active();
  TrialRealization tr;

  std::vector<double> doas_deg;
  if (c.sources.random) {
    const auto& r = *c.sources.random;
    doas_deg = draw_separated_doas(k, r.min_deg, r.max_deg, r.min_separation_deg, rng);
  } else {
    doas_deg = perturb_doas(c.sources.doas_deg, c.sources.perturbation_deg, rng);
  }
  for (double d : doas_deg) tr.doas.push_back(deg_to_rad(d));

  tr.gains = gen_gains(k, snr_db, c.noise_power, c.sources.gain_ratio_max, rng);
  tr.symbols = gen_sources(k, c.snapshots, c.sources.modulation, c.sources.coherence, rng);
  tr.snapshots = synthesize_snapshots(geometry, tr.doas, tr.gains, tr.symbols, c.noise_power, rng);

  // Calibration pilots on the activated subset.
  const CMatrix a_active = steering_matrix(geometry.selected_positions, tr.doas);
  const int tp = std::max(c.pilots, k);
  tr.pilots = gen_pilot_matrix(k, tp);
  tr.pilot_block = a_active * tr.gains.asDiagonal() * tr.pilots;
  tr.pilot_block += complex_noise(m, tp, c.noise_power, rng);

  // Conventional sounding: the same budget split over consecutive port blocks.
  tr.conv_subsets = tile_subsets(geometry.n_ports, m);
  const int t_sub = pilots_per_subset(c.pilots, geometry.n_ports, m);
  tr.conv_pilots = t_sub >= k ? gen_pilot_matrix(k, t_sub) : CMatrix::Zero(k, std::max(t_sub, 0));
  for (const auto& ports : tr.conv_subsets) {
    RVector pos(static_cast<Eigen::Index>(ports.size()));
    for (std::size_t i = 0; i < ports.size(); ++i) pos[static_cast<Eigen::Index>(i)] = geometry.positions[ports[i] - 1];
    CMatrix block = steering_matrix(pos, tr.doas) * tr.gains.asDiagonal() * tr.conv_pilots;
    block += complex_noise(block.rows(), block.cols(), c.noise_power, rng);
    tr.conv_blocks.push_back(std::move(block));
  }

  tr.channel = steering_matrix(geometry.positions, tr.doas) * tr.gains.asDiagonal();
  return tr;
}

std::vector<MetricRecord> run_trial(const BenchConfig& c, const ArrayGeometry& geometry, const TrialRealization& tr,
                                    double snr_db, long trial_id, std::vector<std::string>* diagnostics) {
  const int k = c.sources.n_sources;
  using Clock = std::chrono::steady_clock;

  std::map<EstimatorKind, DoaEstimate> doa_cache;
  std::map<EstimatorKind, double> doa_runtime;
  auto estimate = [&](EstimatorKind kind) -> const DoaEstimate& {
    auto it = doa_cache.find(kind);
    if (it != doa_cache.end()) return it->second;
    const auto start = Clock::now();
    DoaEstimate est;
    switch (kind) {
      case EstimatorKind::SocMusic:
        est = estimate_doa_soc(tr.snapshots, k, geometry, SearchMethod::Grid, c.search);
        break;
      case EstimatorKind::SocNewton:
        est = estimate_doa_soc(tr.snapshots, k, geometry, SearchMethod::Newton, c.search);
        break;
      case EstimatorKind::FocMusic:
        est = estimate_doa_foc(tr.snapshots, k, geometry, SearchMethod::Grid, c.search);
        break;
      case EstimatorKind::FocNewton:
        est = estimate_doa_foc(tr.snapshots, k, geometry, SearchMethod::Newton, c.search);
        break;
      default:
        throw Error(ErrorKind::Validation, "not a DOA estimator");
    }
    doa_runtime[kind] = c.timing ? std::chrono::duration<double, std::milli>(Clock::now() - start).count() : 0.0;
    return doa_cache.emplace(kind, std::move(est)).first->second;
  };

  std::vector<MetricRecord> out;
  for (EstimatorKind kind : c.estimators) {
    MetricRecord rec;
    rec.estimator = std::string(to_string(kind));
    rec.snr_db = snr_db;
    rec.trial_id = trial_id;
    rec.rmse_deg = kNaN;
    rec.nmse = kNaN;
    rec.miss_rate = kind == EstimatorKind::ConventionalLs ? kNaN : 0.0;
    double iters = 0.0;
    const auto start = Clock::now();
    try {
      if (kind == EstimatorKind::ConventionalLs) {
        const ChannelEstimate h = conventional_ls(tr.conv_blocks, tr.conv_pilots, tr.conv_subsets, geometry.n_ports);
        rec.nmse = nmse(tr.channel, h.h_full);
      } else if (kind == EstimatorKind::SensingOracle) {
        const UserDoas truth = all_detected(tr.doas);
        const CVector p = calibrate_gains(tr.pilot_block, truth, geometry, tr.pilots);
        rec.nmse = nmse(tr.channel, reconstruct_channel(truth, p, geometry).h_full);
        rec.rmse_deg = 0.0;
      } else {
        const DoaEstimate& est = estimate(doa_stage(kind));
        rec.rmse_deg = rmse_doa(est.angles, tr.doas, c.miss_penalty_deg);
        rec.miss_rate = static_cast<double>(est.misses) / k;
        iters = mean_iterations(est);
        if (is_sensing_assisted(kind)) {
          const UserDoas users = assign_doas_to_users(tr.pilot_block, est.angles, geometry, tr.pilots);
          const CVector p = calibrate_gains(tr.pilot_block, users, geometry, tr.pilots);
          rec.nmse = nmse(tr.channel, reconstruct_channel(users, p, geometry).h_full);
        }
      }
    } catch (const Error& e) {
      if (diagnostics) {
        std::ostringstream msg;
        msg << rec.estimator << " snr=" << format_number(snr_db) << " trial=" << trial_id << ": " << e.what();
        diagnostics->push_back(msg.str());
      }
      // Nothing estimated: every source missed, channel estimate zero.
      if (kind != EstimatorKind::ConventionalLs) {
        rec.rmse_deg = c.miss_penalty_deg;
        rec.miss_rate = 1.0;
      }
      if (kind == EstimatorKind::ConventionalLs || is_sensing_assisted(kind)) rec.nmse = 1.0;
    }
    rec.runtime_ms = c.timing ? std::chrono::duration<double, std::milli>(Clock::now() - start).count() : 0.0;
    if (c.timing && !is_sensing_assisted(kind) && doa_runtime.count(kind)) rec.runtime_ms = doa_runtime[kind];
    rec.iterations = iters;
    out.push_back(std::move(rec));
  }
  return out;
}

RunReport run_scenario(const BenchConfig& c) {
  validate_config(c);
  const ArrayGeometry geometry = build_geometry(c.geometry.n_ports, c.geometry.omega, c.geometry.spacing);
  const std::size_t n_snr = c.snr_db.size();
  const auto n_trials = static_cast<std::size_t>(c.trials);
  const std::size_t n_items = n_snr * n_trials;

  std::vector<std::vector<MetricRecord>> results(n_items);
  std::vector<std::vector<std::string>> diags(n_items);
  std::atomic<std::size_t> next{0};

  // Each (snr, trial) item owns its random stream, so the schedule never
  // changes the numbers.
  auto worker = [&]() {
    for (std::size_t item = next++; item < n_items; item = next++) {
      const std::size_t si = item / n_trials;
      const std::size_t ti = item % n_trials;
      Rng rng = derive_stream(c.seed, si, ti);
      try {
        const TrialRealization tr = draw_realization(c, geometry, c.snr_db[si], rng);
        results[item] = run_trial(c, geometry, tr, c.snr_db[si], static_cast<long>(ti), &diags[item]);
      } catch (const Error& e) {
        diags[item].push_back("snr=" + format_number(c.snr_db[si]) + " trial=" + std::to_string(ti) + ": " +
                              e.what());
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(c.threads, static_cast<int>(n_items)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  RunReport report;
  for (auto& d : diags) {
    for (auto& line : d) report.diagnostics.push_back(std::move(line));
  }
  for (std::size_t si = 0; si < n_snr; ++si) {
    for (std::size_t e = 0; e < c.estimators.size(); ++e) {
      TrialAccumulator acc;
      int count = 0;
      for (std::size_t ti = 0; ti < n_trials; ++ti) {
        const auto& recs = results[si * n_trials + ti];
        if (recs.size() != c.estimators.size()) continue;
        const MetricRecord& r = recs[e];
        acc.rmse += r.rmse_deg;
        acc.nmse += r.nmse;
        acc.miss += r.miss_rate;
        acc.iters += r.iterations;
        acc.runtime += r.runtime_ms;
        ++count;
      }
      ResultRow row;
      row.scenario = c.scenario;
      row.estimator = std::string(to_string(c.estimators[e]));
      row.snr_db = c.snr_db[si];
      row.trials = count;
      row.seed = c.seed;
      const double inv = count > 0 ? 1.0 / count : kNaN;
      row.rmse_deg = acc.rmse * inv;
      row.nmse = acc.nmse * inv;
      row.miss_rate = acc.miss * inv;
      row.iterations = acc.iters * inv;
      row.runtime_ms = acc.runtime * inv;
      report.rows.push_back(std::move(row));
    }
  }
  std::stable_sort(report.rows.begin(), report.rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.estimator != b.estimator) return a.estimator < b.estimator;
    return a.snr_db < b.snr_db;
  });
  return report;
}

std::string format_csv(std::vector<ResultRow> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.estimator != b.estimator) return a.estimator < b.estimator;
    return a.snr_db < b.snr_db;
  });
  std::string out = "scenario,estimator,snr_db,rmse_deg,nmse,miss_rate,iters,runtime_ms,trials,seed\n";
  for (const auto& r : rows) {
    out += r.scenario;
    out += ',' + r.estimator;
    out += ',' + format_number(r.snr_db);
    out += ',' + format_number(r.rmse_deg);
    out += ',' + format_number(r.nmse);
    out += ',' + format_number(r.miss_rate);
    out += ',' + format_number(r.iterations);
    out += ',' + format_number(r.runtime_ms);
    out += ',' + std::to_string(r.trials);
    out += ',' + std::to_string(r.seed);
    out += '\n';
  }
  return out;
}

void write_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out << format_csv(rows);
  if (!out) throw Error(ErrorKind::Io, "write to '" + path.string() + "' failed");
}

std::string theory_csv(const BenchConfig& c) {
  validate_config(c);
  const int m = static_cast<int>(c.geometry.omega.size());
  std::string out = "snr_db,e_conv,e_prop,eta\n";
  for (double snr : c.snr_db) {
    const double power = c.noise_power * std::pow(10.0, snr / 10.0);
    const TheoryPoint t =
        theoretical_nmse(c.geometry.n_ports, m, c.sources.n_sources, c.pilots, c.noise_power, power);
    out += format_number(snr) + ',' + format_number(t.e_conv) + ',' + format_number(t.e_prop) + ',' +
           format_number(t.eta) + '\n';
  }
  return out;
}

}  // namespace flexsense
