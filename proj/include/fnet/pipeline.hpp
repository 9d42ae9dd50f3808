#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fnet/defactor.hpp"
#include "fnet/embed.hpp"
#include "fnet/evaluate.hpp"
#include "fnet/hcluster.hpp"
#include "fnet/synth.hpp"

namespace fnet {

struct PipelineConfig {
  // Exactly one of (prices + metadata) or synth.
  std::optional<std::filesystem::path> prices;
  std::optional<std::filesystem::path> metadata;
  std::optional<std::filesystem::path> fx;
  std::string base_currency = "EUR";
  std::optional<FactorModelSpec> synth;

  std::vector<DefactorStage> stages;
  std::vector<Grouping> score = {Grouping::sector, Grouping::country};

  bool dynamic = false;
  double lambda = 0.01;
  std::optional<std::size_t> burn_in;  // default ceil(3 / lambda)
  Grouping dynamic_grouping = Grouping::country;

  std::size_t replicates = 999;
  std::uint64_t seed = 1;
  SmacofOptions mds;

  std::filesystem::path output_dir = "out";
  bool svg = true;

  void validate() const;
};

/// Parses the JSON config document. Relative input paths resolve against `base_dir`.
PipelineConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

/// Applies `key=value` overrides using dotted config keys (e.g. `dynamic.lambda=0.02`).
void apply_override(PipelineConfig& config, const std::string& assignment);

/// Normalised config as JSON text (used in the run manifest).
std::string config_to_json(const PipelineConfig& config);

/// Parses the `synth` section grammar on its own (also used by `fnet synth`).
FactorModelSpec parse_synth_spec(const std::string& json_text);

struct PurityPoint {
  std::string date;
  std::string label;
  double purity = 0.0;
};

struct ArtifactSet {
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
  std::vector<PurityReport> reports;
  std::vector<PurityPoint> series;
  std::vector<std::string> dropped;
};

/// Loads (or generates) returns and applies the configured defactor stages in order.
ReturnsPanel prepare_returns(const PipelineConfig& config, std::vector<std::string>* dropped = nullptr);

ArtifactSet run_static(const PipelineConfig& config);
ArtifactSet run_dynamic(const PipelineConfig& config);

/// Dispatches on config.dynamic.
ArtifactSet run(const PipelineConfig& config);

/// Re-clusters the exponentially weighted distance matrix of every emitted day and scores each
/// label with at least two members.
std::vector<PurityPoint> dynamic_purity(const ReturnsPanel& panel, Grouping grouping, double lambda,
                                        std::size_t burn_in);

/// `date,label,purity` with header.
std::string format_purity_series(const std::vector<PurityPoint>& series);
std::vector<PurityPoint> parse_purity_series(std::string_view content, const std::string& source);

/// One line per label over time.
std::string purity_series_svg(const std::vector<PurityPoint>& series, const std::string& title);

}  // namespace fnet
