#include "fnet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fnet/correlate.hpp"
#include "fnet/error.hpp"
#include "fnet/parallel.hpp"
#include "fnet/svg.hpp"
#include "fnet/text.hpp"
#include "json.hpp"

namespace fnet {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ValidationError("config: '" + where + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ValidationError("config: unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
T get(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError("config: bad value for '" + std::string(key) + "' in " + where);
  }
}

double get_dof(const json& obj, double fallback) {
  if (!obj.contains("tail_dof")) return fallback;
  const auto& v = obj.at("tail_dof");
  if (v.is_null()) return std::numeric_limits<double>::infinity();
  if (v.is_string()) {
    auto s = v.get<std::string>();
    if (s == "inf" || s == "gaussian") return std::numeric_limits<double>::infinity();
    throw ValidationError("config: tail_dof must be a number, \"inf\" or \"gaussian\"");
  }
  if (!v.is_number()) throw ValidationError("config: tail_dof must be a number");
  return v.get<double>();
}

std::vector<GroupCount> parse_groups(const json& arr, const std::string& where) {
  if (!arr.is_array()) throw ValidationError("config: '" + where + "' must be a list");
  std::vector<GroupCount> out;
  for (const auto& g : arr) {
    reject_unknown(g, {"label", "count"}, where);
    out.push_back({get<std::string>(g, "label", "", where), get<std::size_t>(g, "count", 0, where)});
  }
  return out;
}

FactorModelSpec synth_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() != "default") throw ValidationError("config: synth must be an object or \"default\"");
    return FactorModelSpec::desk_default();
  }
  reject_unknown(j,
                 {"sectors", "countries", "days", "beta_market", "beta_sector", "beta_country", "idio_scale",
                  "tail_dof", "vol_scale", "regime", "seed", "start_date"},
                 "synth");
  auto spec = FactorModelSpec::desk_default();
  if (j.contains("sectors")) spec.sectors = parse_groups(j.at("sectors"), "synth.sectors");
  if (j.contains("countries")) spec.countries = parse_groups(j.at("countries"), "synth.countries");
  spec.days = get<std::size_t>(j, "days", spec.days, "synth");
  spec.beta_market = get<double>(j, "beta_market", spec.beta_market, "synth");
  spec.beta_sector = get<double>(j, "beta_sector", spec.beta_sector, "synth");
  spec.beta_country = get<double>(j, "beta_country", spec.beta_country, "synth");
  spec.idio_scale = get<double>(j, "idio_scale", spec.idio_scale, "synth");
  spec.tail_dof = get_dof(j, spec.tail_dof);
  spec.vol_scale = get<double>(j, "vol_scale", spec.vol_scale, "synth");
  spec.seed = get<std::uint64_t>(j, "seed", spec.seed, "synth");
  spec.start_date = get<std::string>(j, "start_date", spec.start_date, "synth");
  if (j.contains("regime") && !j.at("regime").is_null()) {
    const auto& r = j.at("regime");
    reject_unknown(r, {"change_day", "beta_country_post", "countries"}, "synth.regime");
    RegimeChange rc;
    rc.change_day = get<std::size_t>(r, "change_day", 0, "synth.regime");
    rc.beta_country_post = get<double>(r, "beta_country_post", spec.beta_country, "synth.regime");
    rc.countries = get<std::vector<std::string>>(r, "countries", {}, "synth.regime");
    spec.regime = rc;
  }
  spec.validate();
  return spec;
}

json synth_to_json(const FactorModelSpec& s) {
  json j;
  j["sectors"] = json::array();
  for (const auto& g : s.sectors) j["sectors"].push_back({{"label", g.label}, {"count", g.count}});
  j["countries"] = json::array();
  for (const auto& g : s.countries) j["countries"].push_back({{"label", g.label}, {"count", g.count}});
  j["days"] = s.days;
  j["beta_market"] = s.beta_market;
  j["beta_sector"] = s.beta_sector;
  j["beta_country"] = s.beta_country;
  j["idio_scale"] = s.idio_scale;
  if (s.gaussian()) {
    j["tail_dof"] = "inf";
  } else {
    j["tail_dof"] = s.tail_dof;
  }
  j["vol_scale"] = s.vol_scale;
  j["seed"] = s.seed;
  j["start_date"] = s.start_date;
  if (s.regime) {
    j["regime"] = {{"change_day", s.regime->change_day},
                   {"beta_country_post", s.regime->beta_country_post},
                   {"countries", s.regime->countries}};
  }
  return j;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_absolute() || base.empty()) return path;
  return base / path;
}

// Runs one pipeline stage, prefixing any error with the stage name.
template <typename Fn>
auto in_stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    throw ValidationError(name + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(name + ": " + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(name + ": " + e.what());
  }
}

void emit(ArtifactSet& artifacts, const std::filesystem::path& dir, const std::string& name, const std::string& content) {
  auto path = dir / name;
  text::write_file(path, content);
  artifacts.files.push_back(path);
}

void write_manifest(ArtifactSet& artifacts, const PipelineConfig& config, const std::string& mode) {
  json m;
  m["tool"] = "fnet";
  m["version"] = kVersion;
  m["mode"] = mode;
  m["seed"] = config.seed;
  m["config"] = json::parse(config_to_json(config));
  m["dropped_companies"] = artifacts.dropped;
  json outputs = json::array();
  for (const auto& f : artifacts.files) outputs.push_back(f.filename().string());
  m["outputs"] = outputs;
  m["warnings"] = artifacts.warnings;
  emit(artifacts, config.output_dir, "manifest.json", m.dump(2) + "\n");
}

}  // namespace

void PipelineConfig::validate() const {
  const bool has_inputs = prices.has_value() || metadata.has_value() || fx.has_value();
  if (has_inputs && synth) throw ValidationError("config: give either input files or a synth spec, not both");
  if (!has_inputs && !synth) throw ValidationError("config: need input files or a synth spec");
  if (has_inputs && (!prices || !metadata)) throw ValidationError("config: input needs both prices and metadata");
  if (synth) synth->validate();
  if (!(lambda > 0.0 && lambda < 1.0)) throw ValidationError("config: lambda must lie in (0, 1)");
  if (replicates < 1) throw ValidationError("config: replicates must be at least 1");
  if (score.empty()) throw ValidationError("config: score needs at least one grouping");
  for (auto g : score) {
    if (g == Grouping::all) throw ValidationError("config: cannot score the 'all' grouping");
  }
  if (dynamic_grouping == Grouping::all) throw ValidationError("config: cannot score the 'all' grouping");
  if (mds.max_iters < 1 || !(mds.tol > 0.0)) throw ValidationError("config: mds needs max_iters >= 1 and tol > 0");
}

PipelineConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  reject_unknown(j, {"input", "synth", "defactor", "score", "dynamic", "replicates", "seed", "mds", "output"}, "config");

  PipelineConfig c;
  if (j.contains("input") && !j.at("input").is_null()) {
    const auto& in = j.at("input");
    reject_unknown(in, {"prices", "metadata", "fx", "base_currency"}, "input");
    if (in.contains("prices")) c.prices = resolve(base_dir, get<std::string>(in, "prices", "", "input"));
    if (in.contains("metadata")) c.metadata = resolve(base_dir, get<std::string>(in, "metadata", "", "input"));
    if (in.contains("fx") && !in.at("fx").is_null()) c.fx = resolve(base_dir, get<std::string>(in, "fx", "", "input"));
    c.base_currency = get<std::string>(in, "base_currency", c.base_currency, "input");
  }
  if (j.contains("synth") && !j.at("synth").is_null()) c.synth = synth_from_json(j.at("synth"));
  if (j.contains("defactor")) {
    const auto& arr = j.at("defactor");
    if (!arr.is_array()) throw ValidationError("config: 'defactor' must be a list");
    for (const auto& s : arr) {
      reject_unknown(s, {"grouping", "index", "fit", "leave_one_out"}, "defactor");
      DefactorStage stage;
      stage.grouping = parse_grouping(get<std::string>(s, "grouping", "sector", "defactor"));
      stage.index_method = parse_index_method(get<std::string>(s, "index", "median", "defactor"));
      stage.fit_method = parse_fit_method(get<std::string>(s, "fit", "theil_sen", "defactor"));
      stage.leave_one_out = get<bool>(s, "leave_one_out", false, "defactor");
      c.stages.push_back(stage);
    }
  }
  if (j.contains("score")) {
    c.score.clear();
    for (const auto& g : get<std::vector<std::string>>(j, "score", {}, "config")) c.score.push_back(parse_grouping(g));
  }
  if (j.contains("dynamic")) {
    const auto& d = j.at("dynamic");
    reject_unknown(d, {"enabled", "lambda", "burn_in", "grouping"}, "dynamic");
    c.dynamic = get<bool>(d, "enabled", c.dynamic, "dynamic");
    c.lambda = get<double>(d, "lambda", c.lambda, "dynamic");
    if (d.contains("burn_in") && !d.at("burn_in").is_null()) c.burn_in = get<std::size_t>(d, "burn_in", 0, "dynamic");
    c.dynamic_grouping = parse_grouping(get<std::string>(d, "grouping", "country", "dynamic"));
  }
  c.replicates = get<std::size_t>(j, "replicates", c.replicates, "config");
  c.seed = get<std::uint64_t>(j, "seed", c.seed, "config");
  if (j.contains("mds")) {
    const auto& m = j.at("mds");
    reject_unknown(m, {"max_iters", "tol"}, "mds");
    c.mds.max_iters = get<std::size_t>(m, "max_iters", c.mds.max_iters, "mds");
    c.mds.tol = get<double>(m, "tol", c.mds.tol, "mds");
  }
  if (j.contains("output")) {
    const auto& o = j.at("output");
    reject_unknown(o, {"dir", "svg"}, "output");
    c.output_dir = resolve(base_dir, get<std::string>(o, "dir", "out", "output"));
    c.svg = get<bool>(o, "svg", c.svg, "output");
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

FactorModelSpec parse_synth_spec(const std::string& json_text) {
  try {
    return synth_from_json(json::parse(json_text));
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("synth spec: ") + e.what());
  }
}

std::string config_to_json(const PipelineConfig& c) {
  json j;
  if (c.prices || c.metadata) {
    j["input"] = {{"prices", c.prices ? c.prices->string() : ""},
                  {"metadata", c.metadata ? c.metadata->string() : ""},
                  {"base_currency", c.base_currency}};
    if (c.fx) j["input"]["fx"] = c.fx->string();
  }
  if (c.synth) j["synth"] = synth_to_json(*c.synth);
  j["defactor"] = json::array();
  for (const auto& s : c.stages) {
    j["defactor"].push_back({{"grouping", to_string(s.grouping)},
                             {"index", to_string(s.index_method)},
                             {"fit", to_string(s.fit_method)},
                             {"leave_one_out", s.leave_one_out}});
  }
  j["score"] = json::array();
  for (auto g : c.score) j["score"].push_back(to_string(g));
  j["dynamic"] = {{"enabled", c.dynamic}, {"lambda", c.lambda}, {"grouping", to_string(c.dynamic_grouping)}};
  if (c.burn_in) j["dynamic"]["burn_in"] = *c.burn_in;
  j["replicates"] = c.replicates;
  j["seed"] = c.seed;
  j["mds"] = {{"max_iters", c.mds.max_iters}, {"tol", c.mds.tol}};
  j["output"] = {{"dir", c.output_dir.string()}, {"svg", c.svg}};
  return j.dump(2);
}

void apply_override(PipelineConfig& config, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ValidationError("override must look like key=value: '" + assignment + "'");
  std::string key = assignment.substr(0, eq);
  std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json j = json::parse(config_to_json(config));
  if (key == "synth" && value.is_string() && value.get<std::string>() == "default") {
    j.erase("input");
  }
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    auto dot = key.find('.', start);
    std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ValidationError("bad override key '" + key + "'");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
  config = parse_config(j.dump());
}

ReturnsPanel prepare_returns(const PipelineConfig& config, std::vector<std::string>* dropped) {
  ReturnsPanel panel = in_stage("ingest", [&] {
    if (config.synth) return generate(*config.synth);
    auto loaded = load_prices(*config.prices, *config.metadata);
    if (dropped) *dropped = loaded.dropped;
    PricePanel prices = std::move(loaded.panel);
    if (config.fx) prices = convert_currency(prices, read_fx(*config.fx), config.base_currency);
    return to_log_returns(prices);
  });
  ResidualPanel current{panel, {}};
  for (std::size_t k = 0; k < config.stages.size(); ++k) {
    current = in_stage("defactor[" + std::to_string(k) + "]", [&] { return residualize(current, config.stages[k]); });
  }
  return current.panel;
}

namespace {

std::string provenance_comment(const PipelineConfig& config) {
  if (config.stages.empty()) return "log returns";
  ResidualPanel p;
  p.provenance = config.stages;
  return p.provenance_comment();
}

}  // namespace

ArtifactSet run_static(const PipelineConfig& config) {
  config.validate();
  ArtifactSet out;
  const auto& dir = config.output_dir;
  auto panel = prepare_returns(config, &out.dropped);
  emit(out, dir, "returns.csv", format_returns(panel, provenance_comment(config)));
  emit(out, dir, "metadata.csv", format_metadata(panel.labels, std::vector<std::string>(panel.size(), config.base_currency)));

  auto dist = in_stage("correlate", [&] { return to_distance(pearson(panel)); });
  emit(out, dir, "distance.csv", format_square(dist.companies, dist.w));

  auto tree = in_stage("cluster", [&] { return average_link(dist); });
  emit(out, dir, "merges.csv", format_merge_table(tree));
  emit(out, dir, "tree.nwk", to_newick(tree) + "\n");

  std::string csv = "grouping,label,M,purity,p_value,B\n";
  std::string table;
  for (std::size_t k = 0; k < config.score.size(); ++k) {
    auto grouping = config.score[k];
    auto report = in_stage("purity", [&] {
      return purity_report(tree, panel.labels, grouping, config.replicates, mix_seed(config.seed + k));
    });
    csv += format_report_csv(report, false);
    table += format_report_table(report) + "\n";
    out.reports.push_back(std::move(report));
  }
  emit(out, dir, "purity.csv", csv);
  emit(out, dir, "purity.txt", table);

  auto embedding = in_stage("mds", [&] { return smacof(dist, classical_mds_init(dist), config.mds); });
  emit(out, dir, "embedding.csv", format_embedding_csv(embedding, panel.labels));
  if (config.svg) {
    for (auto grouping : {Grouping::sector, Grouping::country}) {
      std::vector<std::string> labels;
      for (const auto& m : panel.labels) labels.push_back(group_label(m, grouping));
      emit(out, dir, "mds_" + to_string(grouping) + ".svg",
           embedding_svg(embedding, labels, "MDS embedding coloured by " + to_string(grouping)));
    }
  }
  write_manifest(out, config, "static");
  return out;
}

std::vector<PurityPoint> dynamic_purity(const ReturnsPanel& panel, Grouping grouping, double lambda,
                                        std::size_t burn_in) {
  std::map<std::string, std::vector<std::uint8_t>> masks;
  for (std::size_t i = 0; i < panel.size(); ++i) {
    auto& mask = masks[group_label(panel.labels.at(i), grouping)];
    mask.resize(panel.size(), 0);
    mask[i] = 1;
  }
  for (auto it = masks.begin(); it != masks.end();) {
    if (std::count(it->second.begin(), it->second.end(), 1) < 2) {
      it = masks.erase(it);
    } else {
      ++it;
    }
  }

  std::vector<PurityPoint> series;
  struct Day {
    std::string date;
    Matrix w;
  };
  std::vector<Day> batch;
  auto flush = [&] {
    std::vector<std::vector<PurityPoint>> results(batch.size());
    parallel_for(batch.size(), [&](std::size_t k) {
      auto tree = average_link(DistanceMatrix{panel.companies, std::move(batch[k].w)});
      TreeIndex index(tree);
      for (const auto& [label, mask] : masks) results[k].push_back({batch[k].date, label, purity(index, mask)});
    });
    for (auto& r : results) series.insert(series.end(), r.begin(), r.end());
    batch.clear();
  };
  ew_distance_for_each(panel, lambda, burn_in, [&](std::size_t, const std::string& date, const Matrix& w) {
    batch.push_back({date, w});
    if (batch.size() == 64) flush();
  });
  flush();
  return series;
}

ArtifactSet run_dynamic(const PipelineConfig& config) {
  config.validate();
  ArtifactSet out;
  const auto& dir = config.output_dir;
  auto panel = prepare_returns(config, &out.dropped);
  emit(out, dir, "returns.csv", format_returns(panel, provenance_comment(config)));
  emit(out, dir, "metadata.csv", format_metadata(panel.labels, std::vector<std::string>(panel.size(), config.base_currency)));
  const std::size_t burn_in = config.burn_in ? *config.burn_in : default_burn_in(config.lambda);
  if (burn_in >= panel.days()) {
    out.warnings.push_back("burn_in " + std::to_string(burn_in) + " >= " + std::to_string(panel.days()) +
                           " days: purity series is empty");
  }
  out.series = in_stage("dynamic", [&] { return dynamic_purity(panel, config.dynamic_grouping, config.lambda, burn_in); });
  emit(out, dir, "purity_series.csv", format_purity_series(out.series));
  if (config.svg) {
    emit(out, dir, "purity_series.svg",
         purity_series_svg(out.series, "Dynamic " + to_string(config.dynamic_grouping) + " purity"));
  }
  write_manifest(out, config, "dynamic");
  return out;
}

ArtifactSet run(const PipelineConfig& config) { return config.dynamic ? run_dynamic(config) : run_static(config); }

std::string format_purity_series(const std::vector<PurityPoint>& series) {
  std::string out = "date,label,purity\n";
  for (const auto& p : series) out += p.date + "," + p.label + "," + text::format_double(p.purity) + "\n";
  return out;
}

std::vector<PurityPoint> parse_purity_series(std::string_view content, const std::string& source) {
  auto lines = text::split_lines(content);
  if (lines.empty() || text::split_csv(lines.front().text) != std::vector<std::string>{"date", "label", "purity"}) {
    throw ParseError(source, lines.empty() ? 1 : lines.front().number, "header must be 'date,label,purity'");
  }
  std::vector<PurityPoint> out;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    auto cells = text::split_csv(lines[k].text);
    if (cells.size() != 3) throw ParseError(source, lines[k].number, "expected 3 fields");
    out.push_back({cells[0], cells[1], text::parse_double(cells[2], source, lines[k].number)});
  }
  return out;
}

std::string purity_series_svg(const std::vector<PurityPoint>& series, const std::string& title) {
  std::map<std::string, std::size_t> day_index;
  std::map<std::string, std::vector<std::pair<double, double>>> lines;
  for (const auto& p : series) day_index.emplace(p.date, 0);
  std::size_t k = 0;
  for (auto& [date, idx] : day_index) idx = k++;
  for (const auto& p : series) lines[p.label].emplace_back(static_cast<double>(day_index[p.date]), p.purity);
  svg::Canvas canvas(800, 480, title);
  canvas.set_bounds(0.0, std::max<double>(1.0, static_cast<double>(day_index.size()) - 1.0), 0.0, 1.0);
  std::string first = day_index.empty() ? "" : day_index.begin()->first;
  std::string last = day_index.empty() ? "" : day_index.rbegin()->first;
  canvas.axis_labels(first + " .. " + last, "purity");
  std::size_t c = 0;
  for (const auto& [label, pts] : lines) {
    canvas.polyline(pts, svg::color(c));
    canvas.legend(label, svg::color(c));
    ++c;
  }
  return canvas.finish();
}

}  // namespace fnet
