#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "claimcheck/types.hpp"
#include "claimcheck/verdict.hpp"

namespace claimcheck {

// ---------------------------------------------------------------------------
// Agreement across sources
// ---------------------------------------------------------------------------

enum class AgreementRegime { AllAgree, TwoAgree, NoneAgree };

std::string to_string(AgreementRegime regime);  // "all", "two", "none"
std::optional<AgreementRegime> parse_regime(std::string_view text);

/// Exactly three labels; throws WrongArity otherwise.
AgreementRegime agreement_regime(std::span<const std::string> labels);

/// Sample standard deviation. Throws TooFewSamples for n < 2 and
/// std::invalid_argument for non-finite input.
double dispersion(std::span<const double> values);

struct SourceConfidenceProfile {
  std::string claim_id;
  std::map<std::string, VeracityVerdict> verdicts;  // by source name, merged excluded
  std::optional<AgreementRegime> regime;  // only with exactly three answering sources
  std::optional<double> dispersion;       // only with at least two answering sources
};

/// Abstentions are excluded from regime and dispersion.
SourceConfidenceProfile build_profile(const std::string& claim_id, std::span<const VeracityVerdict> per_source);

// ---------------------------------------------------------------------------
// Kernel density estimation
// ---------------------------------------------------------------------------

struct KdeCurve {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
  size_t n_samples = 0;
};

/// Silverman's rule: 0.9 * min(sd, IQR / 1.34) * n^(-1/5), falling back to
/// sd when the IQR is zero. Quartiles use linear interpolation.
double silverman_bandwidth(std::span<const double> samples);

/// Gaussian KDE (1/(n h)) sum phi((x - s_i) / h) at one point.
double kde_density_at(std::span<const double> samples, double bandwidth, double x);

/// Gaussian KDE on linspace(min - 4h, max + 4h, grid_points). Without an
/// explicit bandwidth, needs at least two samples that are not all equal
/// (DegenerateSamples otherwise). With one, a single sample is accepted.
KdeCurve kde(std::span<const double> samples, size_t grid_points = 512,
             std::optional<double> bandwidth = std::nullopt);

double trapezoid_integral(std::span<const double> grid, std::span<const double> values);

// ---------------------------------------------------------------------------
// Classification metrics
// ---------------------------------------------------------------------------

struct ClassMetrics {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  size_t support = 0;    // gold count
  size_t predicted = 0;  // predicted count
};

struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;  // macro over classes with gold support
  double recall = 0.0;
  double f1 = 0.0;
  size_t total = 0;
  size_t correct = 0;
  std::vector<ClassMetrics> per_class;  // scheme order
};

/// `predictions` are (gold, predicted) pairs. Predicted labels outside the
/// scheme (e.g. abstentions) are allowed and count as wrong. Unknown gold
/// labels throw UnknownGoldLabel. 0/0 is taken as 0.
MetricsReport compute_metrics(std::span<const std::pair<std::string, std::string>> predictions,
                              const LabelScheme& scheme);

nlohmann::json to_json(const MetricsReport& report);

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

/// One row of confidences.csv.
struct ConfidenceRow {
  std::string claim_id;
  std::string source;
  std::string label;  // empty for abstentions
  double confidence = 0.0;
  std::string regime;                 // "all" / "two" / "none" / "" when undefined
  std::optional<double> dispersion;   // empty cell when undefined

  friend bool operator==(const ConfidenceRow&, const ConfidenceRow&) = default;
};

/// Rows for one claim: each per-source verdict plus the merged one, all
/// carrying the claim's regime and dispersion.
std::vector<ConfidenceRow> confidence_rows(const SourceConfidenceProfile& profile,
                                           const std::optional<VeracityVerdict>& merged);

void write_confidences_csv(const std::filesystem::path& path, std::span<const ConfidenceRow> rows);
std::vector<ConfidenceRow> read_confidences_csv(const std::filesystem::path& path);

struct RegimeCurve {
  std::string regime;
  std::string source;
  KdeCurve curve;
};

/// One curve per (regime, source) with at least two usable samples. Groups
/// that cannot be estimated are reported in `skipped` as "regime/source: why".
std::vector<RegimeCurve> kde_by_regime(std::span<const ConfidenceRow> rows, size_t grid_points,
                                       std::vector<std::string>* skipped = nullptr);

void write_kde_csv(const std::filesystem::path& path, std::span<const RegimeCurve> curves);
/// Static line chart of the curves, one panel per regime.
void write_kde_svg(const std::filesystem::path& path, std::span<const RegimeCurve> curves);

/// Shortest round-trip decimal form; the single number format in artifacts.
std::string format_double(double value);

/// RFC 4180 CSV helpers.
std::string csv_escape(std::string_view field);
std::vector<std::string> csv_split(std::string_view line);

}  // namespace claimcheck
