#include "qlab/lab.hpp"

#include "qlab/efi2owsg.hpp"
#include "qlab/extractors.hpp"
#include "qlab/facts.hpp"
#include "qlab/flattening.hpp"
#include "qlab/owsg.hpp"
#include "qlab/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace qlab {

namespace {

const std::vector<std::string> kSuites = {"facts", "flattening", "extractors", "pipeline", "efi2owsg"};

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream o;
  o << std::setprecision(17) << v;
  return o.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

// Non-finite doubles are stored as strings so reports stay valid JSON.
json jnum(double v) { return std::isfinite(v) ? json(v) : json(num(v)); }
double from_jnum(const json& j) {
  if (j.is_number()) return j.get<double>();
  const std::string s = j.get<std::string>();
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  return std::nan("");
}

json resolve(const json& v, const std::string& base_dir) {
  if (!v.is_string()) return v;
  const std::filesystem::path p = std::filesystem::path(base_dir) / v.get<std::string>();
  return load_json_file(p.string());
}

template <class T>
T opt(const json& o, const char* key, T def) {
  try {
    return o.value(key, def);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("option ") + key + ": " + e.what());
  }
}

void facts_suite(const ExperimentConfig& cfg, std::vector<CheckRecord>& out) {
  const int trials = opt(cfg.options, "trials", 20);
  const auto dims = opt(cfg.options, "dims", std::vector<std::size_t>{2, 4});
  std::size_t idx = 0;
  for (const auto& f : fact_registry()) {
    auto r = verify_fact(f.id, trials, dims, cfg.seed);
    json in = {{"fact", f.id}, {"trials", trials}, {"dims", dims}, {"seed", cfg.seed}};
    auto rec = make_record("facts/" + f.id, f.description, in, r.min_slack, -1e-7, ">=", 0.0);
    rec.metric = "slack", rec.series = "facts", rec.x = static_cast<double>(idx++);
    out.push_back(rec);
  }
}

void flattening_suite(const ExperimentConfig& cfg, std::vector<CheckRecord>& out) {
  const FlatteningParams fp{opt(cfg.options, "bin_count", 16), opt(cfg.options, "brother_budget", 16)};
  std::vector<std::vector<double>> spectra = opt(cfg.options, "spectra", std::vector<std::vector<double>>{});
  const int random = opt(cfg.options, "random", 10);
  Rng rng(cfg.seed);
  for (int k = 0; k < random; ++k) {
    std::uniform_real_distribution<double> u(0.0, 2.0 * fp.bin_count);
    std::vector<double> p(2 + k % 15);
    double t = 0.0;
    for (auto& x : p) t += (x = std::exp2(-u(rng)));
    for (auto& x : p) x /= t;
    spectra.push_back(p);
  }
  for (std::size_t k = 0; k < spectra.size(); ++k) {
    auto f = flatten(diagonal_state(spectra[k], reg("X", spectra[k].size())), fp);
    auto rep = verify_flatness_claim(f);
    json in = {{"spectrum", spectra[k]}, {"bin_count", fp.bin_count}, {"brother_budget", fp.brother_budget}};
    char id[32];
    std::snprintf(id, sizeof id, "%03zu", k);
    auto e = make_record(std::string("flattening/") + id + "/excess", "S(XQJB) <= S2(X|QJB) + S(QJB) + 2", in,
                         rep.excess, 2.0, "<=", 1e-6);
    e.metric = "excess", e.series = "flattening", e.x = static_cast<double>(k);
    out.push_back(e);
    out.push_back(make_record(std::string("flattening/") + id + "/ratio", "J != 0 sector is 2-flat", in,
                              f.nonzero_sector_ratio(), 2.0, "<=", 1e-12));
  }
}

void extractors_suite(const ExperimentConfig& cfg, std::vector<CheckRecord>& out) {
  const std::size_t n = opt(cfg.options, "n", std::size_t{3});
  const int states = opt(cfg.options, "states", 4);
  Rng rng(cfg.seed);
  for (int k = 0; k < states; ++k) {
    auto s = random_cq_state(rng, std::size_t{1} << n, reg("Q", 2), "X", 1 + k % 2);
    const std::size_t l_out = leftover_hash_audit(s, 0).l_out;
    for (std::size_t lp = 1; lp <= l_out; ++lp) {
      auto r = leftover_hash_audit(s, lp, 10000, derive_seed(cfg.seed, k, lp));
      json in = {{"state", k}, {"n", n}, {"l_prime", lp}, {"seed", cfg.seed}};
      out.push_back(make_record("extractors/hash/" + std::to_string(k) + "_" + std::to_string(lp),
                                "||Ext(X) Q H - U Q H||_1 <= 2^{-(l - l')/2}", in, r.measured_distance, r.bound, "<=",
                                0.0));
    }
  }
  const std::size_t qn = opt(cfg.options, "input_qubits", std::size_t{3});
  const std::size_t o = opt(cfg.options, "output_len", qn + 1);
  const auto kappas = opt(cfg.options, "kappas", std::vector<double>{0, 1, 2, 3, 4});
  const int samples = opt(cfg.options, "samples", 8);
  auto sw = quantum_extractor_seed_sweep(maximally_mixed(qubits("R", static_cast<int>(qn))), o, 0.0, kappas, samples,
                                         0.0, cfg.seed);
  json in = {{"input_qubits", qn}, {"output_len", o}, {"kappas", kappas}, {"samples", samples}, {"seed", cfg.seed}};
  for (const auto& row : sw.rows) {
    char id[48];
    std::snprintf(id, sizeof id, "extractors/sweep/kappa_%05.2f", row.kappa);
    auto d = make_record(std::string(id) + "/distance", "mean ||Ext_Q - U||_1", in, row.mean_distance, 2.0, "<=",
                         0.0, false);
    d.metric = "distance", d.series = "mean", d.x = row.kappa;
    out.push_back(d);
    out.push_back(make_record(std::string(id) + "/rank", "S0(Ext_Q) <= S0(psi) + s", in, row.rank_slack, 0.0, ">=",
                              1e-9));
  }
  out.push_back(make_record("extractors/sweep/monotone", "mean distance nonincreasing in kappa", in,
                            sw.monotone ? 1.0 : 0.0, 1.0, ">=", 0.0));
}

PipelineParams params_of(const ExperimentConfig& cfg) {
  PipelineParams p = cfg.params.is_null() ? PipelineParams{} : PipelineParams::from_json(cfg.params);
  if (!cfg.params.contains("seed")) p.seed = cfg.seed;
  return p;
}

OwsgInstance instance_of(const ExperimentConfig& cfg) {
  if (cfg.instance.is_null()) throw SchemaError("suite " + cfg.suite + " needs an instance");
  try {
    return instance_from_json(cfg.instance);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("instance: ") + e.what());
  }
}

void pipeline_suite(const ExperimentConfig& cfg, std::vector<CheckRecord>& out) {
  auto inst = instance_of(cfg);
  auto p = params_of(cfg);
  auto r = entropy_gap_audit(inst, p);
  json in = {{"instance", cfg.instance}, {"params", p.to_json()}};
  for (const auto& l : r.lines)
    out.push_back(make_record("pipeline/line/" + l.id, l.id, in, l.lhs, l.rhs, "<=", tol().opt, l.asserted));
  for (std::size_t i = 0; i < r.istar.gaps.size(); ++i) {
    auto g = make_record("pipeline/istar/gap_" + std::to_string(i), "S2(X|Q^i) - S2(X|Q^{i+1})", in,
                         r.istar.gaps[i], r.istar.threshold, "<=", 1e-6, false);
    g.metric = "gap", g.series = "S2 gap", g.x = static_cast<double>(i);
    out.push_back(g);
  }
  out.push_back(make_record("pipeline/istar/telescoping", "sum of gaps = S2(X) - S2(X|Q^m)", in,
                            r.istar.telescoping_residual, 0.0, "<=", 1e-6));
  out.push_back(make_record("pipeline/istar/gap", "gap at i* <= c' log n", in, r.istar.gap, r.istar.threshold, "<=",
                            1e-6, r.istar.found));
  out.push_back(make_record("pipeline/visible_marginals", "tau_0 and tau_1 agree on Q H Z", in,
                            r.block.visible_marginal_diff, 0.0, "<=", 1e-10));
}

void efi2owsg_suite(const ExperimentConfig& cfg, std::vector<CheckRecord>& out) {
  if (cfg.pair.is_null()) throw SchemaError("suite efi2owsg needs a pair");
  EfiPair pair = [&] {
    try {
      return pair_from_json(cfg.pair);
    } catch (const json::exception& e) {
      throw SchemaError(std::string("pair: ") + e.what());
    }
  }();
  const std::size_t n = opt(cfg.options, "n", std::size_t{4});
  const std::size_t t = opt(cfg.options, "t", std::size_t{1});
  const int trials = opt(cfg.options, "trials", 10000);
  const double q = opt(cfg.options, "q", 0.2);
  auto ow = build_owsg_from_efi(pair, n);
  json in = {{"pair", cfg.pair}, {"n", n}, {"t", t}, {"trials", trials}, {"q", q}, {"seed", cfg.seed}};
  out.push_back(make_record("efi2owsg/helstrom", "Helstrom advantage = 1/2 ||rho_0 - rho_1||_1", in,
                            std::abs(ow.h.advantage() - pair.half_l1()), 0.0, "<=", 1e-9));
  out.push_back(make_record("efi2owsg/correctness", "correctness >= 1 - n err", in, ow.correctness(),
                            ow.union_bound(), ">=", tol().num));
  auto inv = mixed_inverter(helstrom_majority_inverter(ow.h), q, n);
  const std::size_t advice = find_advice(inv, pair, n, t, std::max(1, trials / 2), cfg.seed);
  auto red = inverter_to_distinguisher(inv, pair, n, t, advice, trials, derive_seed(cfg.seed, 1));
  json rin = in;
  rin["advice"] = advice;
  out.push_back(make_record("efi2owsg/reduction/composed", "Pr[A' = B] = p c + (1 - p)/2", rin,
                            std::abs(red.success - red.composed), 3.0 * red.std_error, "<=", 0.0));
  out.push_back(make_record("efi2owsg/reduction/bound", "Pr[A' = B] >= 1/2 + delta/4", rin, red.success,
                            red.bound - 3.0 * red.std_error, ">=", 0.0, red.three_quarters));
  out.push_back(make_record("efi2owsg/reduction/three_quarters", "conditional rate at the advice >= 3/4", rin,
                            red.conditional, 0.75, ">=", 0.0, false));
}

}  // namespace

std::string digest(const json& j) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : j.dump()) h = (h ^ c) * 1099511628211ULL;
  std::ostringstream o;
  o << std::hex << std::setw(16) << std::setfill('0') << h;
  return o.str();
}

json load_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw SchemaError("cannot open " + path);
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

CheckRecord make_record(std::string id, std::string anchor, const json& inputs, double measured, double bound,
                        const std::string& relation, double tol, bool asserted) {
  CheckRecord r;
  r.id = std::move(id);
  r.anchor = std::move(anchor);
  r.inputs_digest = digest(inputs);
  r.measured = measured;
  r.bound = bound;
  r.relation = relation;
  r.slack = relation == "<=" ? bound - measured : measured - bound;
  r.asserted = asserted;
  r.pass = !asserted || r.slack >= -tol;
  return r;
}

json CheckRecord::to_json() const {
  json j = {{"id", id},         {"anchor", anchor},     {"inputs_digest", inputs_digest},
            {"measured", jnum(measured)}, {"bound", jnum(bound)}, {"relation", relation},
            {"slack", jnum(slack)},       {"asserted", asserted}, {"pass", pass}};
  if (!metric.empty()) j["plot"] = {{"metric", metric}, {"series", series}, {"x", x}};
  return j;
}

CheckRecord CheckRecord::from_json(const json& j) {
  try {
    CheckRecord r;
    r.id = j.at("id");
    r.anchor = j.at("anchor");
    r.inputs_digest = j.at("inputs_digest");
    r.measured = from_jnum(j.at("measured"));
    r.bound = from_jnum(j.at("bound"));
    r.relation = j.at("relation");
    r.slack = from_jnum(j.at("slack"));
    r.asserted = j.at("asserted");
    r.pass = j.at("pass");
    if (j.contains("plot")) {
      r.metric = j["plot"].at("metric");
      r.series = j["plot"].at("series");
      r.x = j["plot"].at("x");
    }
    return r;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("record: ") + e.what());
  }
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const std::string& base_dir) {
  if (!j.is_object()) throw SchemaError("config must be an object");
  static const std::vector<std::string> keys = {"schema_version", "suite", "seed", "instance",
                                                "params",         "pair",  "options", "output"};
  for (const auto& [k, v] : j.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw SchemaError("unknown config key " + k);
  if (j.contains("schema_version") && j["schema_version"] != kSchemaVersion)
    throw SchemaError("unsupported schema_version");
  if (!j.contains("suite") || !j["suite"].is_string()) throw SchemaError("config needs a suite name");
  ExperimentConfig c;
  c.suite = j["suite"];
  if (std::find(kSuites.begin(), kSuites.end(), c.suite) == kSuites.end())
    throw SchemaError("unknown suite " + c.suite);
  try {
    c.seed = j.value("seed", std::uint64_t{1});
    c.output = j.value("output", std::string{});
  } catch (const json::exception& e) {
    throw SchemaError(e.what());
  }
  c.instance = resolve(j.value("instance", json()), base_dir);
  c.params = resolve(j.value("params", json()), base_dir);
  c.pair = resolve(j.value("pair", json()), base_dir);
  c.options = j.value("options", json::object());
  if (!c.options.is_object()) throw SchemaError("options must be an object");
  return c;
}

json ExperimentConfig::to_json() const {
  return {{"schema_version", kSchemaVersion}, {"suite", suite},     {"seed", seed},     {"instance", instance},
          {"params", params},                 {"pair", pair},       {"options", options}, {"output", output}};
}

bool ExperimentReport::pass() const {
  return std::all_of(records.begin(), records.end(), [](const CheckRecord& r) { return r.pass; });
}

json ExperimentReport::to_json() const {
  json rec = json::array();
  for (const auto& r : records) rec.push_back(r.to_json());
  int failing = 0;
  for (const auto& r : records) failing += !r.pass;
  return {{"schema_version", kSchemaVersion},
          {"suite", suite},
          {"environment", {{"version", kLabVersion}, {"seed", seed}}},
          {"records", rec},
          {"summary", {{"records", records.size()}, {"failing", failing}, {"pass", pass()}}}};
}

ExperimentReport ExperimentReport::from_json(const json& j) {
  if (!j.is_object() || j.value("schema_version", 0) != kSchemaVersion || !j.contains("records"))
    throw SchemaError("not a report of schema version " + std::to_string(kSchemaVersion));
  ExperimentReport r;
  r.suite = j.value("suite", std::string{});
  if (j.contains("environment")) r.seed = j["environment"].value("seed", std::uint64_t{0});
  for (const auto& x : j["records"]) r.records.push_back(CheckRecord::from_json(x));
  return r;
}

ExperimentReport run_suite(const ExperimentConfig& cfg) {
  ExperimentReport r;
  r.suite = cfg.suite;
  r.seed = cfg.seed;
  if (cfg.suite == "facts")
    facts_suite(cfg, r.records);
  else if (cfg.suite == "flattening")
    flattening_suite(cfg, r.records);
  else if (cfg.suite == "extractors")
    extractors_suite(cfg, r.records);
  else if (cfg.suite == "pipeline")
    pipeline_suite(cfg, r.records);
  else if (cfg.suite == "efi2owsg")
    efi2owsg_suite(cfg, r.records);
  else
    throw SchemaError("unknown suite " + cfg.suite);
  std::stable_sort(r.records.begin(), r.records.end(),
                   [](const CheckRecord& a, const CheckRecord& b) { return a.id < b.id; });
  return r;
}

std::string records_csv(const ExperimentReport& r) {
  std::string s = "id,anchor,inputs_digest,measured,bound,relation,slack,asserted,pass\n";
  for (const auto& c : r.records)
    s += csv_field(c.id) + "," + csv_field(c.anchor) + "," + c.inputs_digest + "," + num(c.measured) + "," +
         num(c.bound) + "," + csv_field(c.relation) + "," + num(c.slack) + "," + (c.asserted ? "true" : "false") +
         "," + (c.pass ? "true" : "false") + "\n";
  return s;
}

std::string emit_plot_data(const ExperimentReport& r, const std::string& metric) {
  std::string s = "x,y,series\n";
  if (r.records.empty()) return s;
  bool any = false;
  for (const auto& c : r.records) {
    if (c.metric != metric) continue;
    any = true;
    s += num(c.x) + "," + num(c.measured) + "," + csv_field(c.series) + "\n";
  }
  if (!any) throw SchemaError("unknown metric " + metric);
  return s;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream o;
  o << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return o.str();
}

void write_report(const ExperimentReport& r, const std::string& dir, const std::string& started,
                  const std::string& finished) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path d(dir);
  std::ofstream(d / "report.json") << r.to_json().dump(2) << "\n";
  std::ofstream(d / "report.csv") << records_csv(r);
  json meta = {{"schema_version", kSchemaVersion},
               {"version", kLabVersion},
               {"started", started},
               {"finished", finished},
               {"report", "report.json"}};
  std::ofstream(d / "report.meta.json") << meta.dump(2) << "\n";
}

void write_json_with_sidecar(const json& j, const std::string& path, const std::string& started) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream(p) << j.dump(2) << "\n";
  json meta = {{"schema_version", kSchemaVersion},
               {"version", kLabVersion},
               {"started", started},
               {"finished", utc_timestamp()},
               {"report", p.filename().string()}};
  std::ofstream(path + ".meta.json") << meta.dump(2) << "\n";
}

int guarded_main(const std::function<int()>& body) {
  try {
    return body();
  } catch (const DimensionCapError& e) {
    std::cerr << "dimension cap: " << e.what() << "\n";
    return kExitDimCap;
  } catch (const NonConvergenceError& e) {
    std::cerr << "non-convergence: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const json::exception& e) {
    std::cerr << "schema: " << e.what() << "\n";
    return kExitSchema;
  } catch (const std::invalid_argument& e) {
    std::cerr << "schema: " << e.what() << "\n";
    return kExitSchema;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
}

}  // namespace qlab
