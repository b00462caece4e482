#include "claimcheck/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "claimcheck/errors.hpp"

namespace claimcheck {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Agreement
// ---------------------------------------------------------------------------

std::string to_string(AgreementRegime regime) {
  switch (regime) {
    case AgreementRegime::AllAgree: return "all";
    case AgreementRegime::TwoAgree: return "two";
    case AgreementRegime::NoneAgree: return "none";
  }
  return "none";
}

std::optional<AgreementRegime> parse_regime(std::string_view text) {
  if (text == "all") return AgreementRegime::AllAgree;
  if (text == "two") return AgreementRegime::TwoAgree;
  if (text == "none") return AgreementRegime::NoneAgree;
  return std::nullopt;
}

AgreementRegime agreement_regime(std::span<const std::string> labels) {
  if (labels.size() != 3) {
    throw WrongArity("agreement_regime needs exactly 3 labels, got " + std::to_string(labels.size()));
  }
  const size_t distinct = std::set<std::string>(labels.begin(), labels.end()).size();
  if (distinct == 1) return AgreementRegime::AllAgree;
  if (distinct == 2) return AgreementRegime::TwoAgree;
  return AgreementRegime::NoneAgree;
}

double dispersion(std::span<const double> values) {
  if (values.size() < 2) throw TooFewSamples("dispersion needs at least 2 values");
  double mean = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("dispersion: non-finite value");
    mean += v;
  }
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

SourceConfidenceProfile build_profile(const std::string& claim_id, std::span<const VeracityVerdict> per_source) {
  SourceConfidenceProfile profile;
  profile.claim_id = claim_id;
  std::vector<std::string> labels;
  std::vector<double> confidences;
  for (const auto& verdict : per_source) {
    if (verdict.source == kMergedSource) continue;
    profile.verdicts[verdict.source] = verdict;
    if (verdict.abstained) continue;
    labels.push_back(verdict.label);
    confidences.push_back(verdict.confidence);
  }
  if (labels.size() == 3) profile.regime = agreement_regime(labels);
  if (confidences.size() >= 2) profile.dispersion = dispersion(confidences);
  return profile;
}

// ---------------------------------------------------------------------------
// KDE
// ---------------------------------------------------------------------------

namespace {

double quantile_sorted(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double normal_pdf(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

double silverman_bandwidth(std::span<const double> samples) {
  if (samples.size() < 2) throw DegenerateSamples("bandwidth selection needs at least 2 samples");
  const double sd = dispersion(samples);
  if (sd == 0.0) throw DegenerateSamples("all samples are equal");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (spread <= 0.0) spread = sd;
  return 0.9 * spread * std::pow(static_cast<double>(samples.size()), -0.2);
}

double kde_density_at(std::span<const double> samples, double bandwidth, double x) {
  double sum = 0.0;
  for (double s : samples) sum += normal_pdf((x - s) / bandwidth);
  return sum / (static_cast<double>(samples.size()) * bandwidth);
}

KdeCurve kde(std::span<const double> samples, size_t grid_points, std::optional<double> bandwidth) {
  if (samples.empty()) throw DegenerateSamples("kde needs at least one sample");
  for (double s : samples) {
    if (!std::isfinite(s)) throw std::invalid_argument("kde: non-finite sample");
  }
  if (grid_points < 2) throw std::invalid_argument("kde: grid needs at least 2 points");

  KdeCurve curve;
  curve.n_samples = samples.size();
  if (bandwidth) {
    if (!(*bandwidth > 0.0) || !std::isfinite(*bandwidth)) throw std::invalid_argument("kde: bandwidth must be > 0");
    curve.bandwidth = *bandwidth;
  } else {
    curve.bandwidth = silverman_bandwidth(samples);
  }

  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *lo_it - 4.0 * curve.bandwidth;
  const double hi = *hi_it + 4.0 * curve.bandwidth;
  const double step = (hi - lo) / static_cast<double>(grid_points - 1);
  curve.grid.reserve(grid_points);
  curve.density.reserve(grid_points);
  for (size_t i = 0; i < grid_points; ++i) {
    const double x = i + 1 == grid_points ? hi : lo + step * static_cast<double>(i);
    curve.grid.push_back(x);
    curve.density.push_back(kde_density_at(samples, curve.bandwidth, x));
  }
  return curve;
}

double trapezoid_integral(std::span<const double> grid, std::span<const double> values) {
  if (grid.size() != values.size()) throw std::invalid_argument("trapezoid: size mismatch");
  double area = 0.0;
  for (size_t i = 1; i < grid.size(); ++i) area += 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
  return area;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

MetricsReport compute_metrics(std::span<const std::pair<std::string, std::string>> predictions,
                              const LabelScheme& scheme) {
  const size_t m = scheme.size();
  std::vector<size_t> tp(m, 0), gold_count(m, 0), pred_count(m, 0);
  MetricsReport report;
  report.total = predictions.size();

  for (const auto& [gold, predicted] : predictions) {
    const auto g = scheme.index_of_label(gold);
    if (!g) throw UnknownGoldLabel("gold label '" + gold + "' is not in scheme '" + scheme.name() + "'");
    ++gold_count[*g];
    const auto p = scheme.index_of_label(predicted);
    if (p) ++pred_count[*p];
    if (p && *p == *g) {
      ++tp[*g];
      ++report.correct;
    }
  }

  auto ratio = [](size_t num, size_t den) { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); };
  size_t supported = 0;
  for (size_t c = 0; c < m; ++c) {
    ClassMetrics cls;
    cls.label = scheme.labels()[c];
    cls.support = gold_count[c];
    cls.predicted = pred_count[c];
    cls.precision = ratio(tp[c], pred_count[c]);
    cls.recall = ratio(tp[c], gold_count[c]);
    const double denom = cls.precision + cls.recall;
    cls.f1 = denom == 0.0 ? 0.0 : 2.0 * cls.precision * cls.recall / denom;
    if (cls.support > 0) {
      ++supported;
      report.precision += cls.precision;
      report.recall += cls.recall;
      report.f1 += cls.f1;
    }
    report.per_class.push_back(std::move(cls));
  }
  if (supported > 0) {
    report.precision /= static_cast<double>(supported);
    report.recall /= static_cast<double>(supported);
    report.f1 /= static_cast<double>(supported);
  }
  report.accuracy = ratio(report.correct, report.total);
  return report;
}

nlohmann::json to_json(const MetricsReport& report) {
  nlohmann::json per_class = nlohmann::json::array();
  for (const auto& c : report.per_class) {
    per_class.push_back({{"label", c.label},
                         {"precision", c.precision},
                         {"recall", c.recall},
                         {"f1", c.f1},
                         {"support", c.support},
                         {"predicted", c.predicted}});
  }
  return {{"accuracy", report.accuracy}, {"precision", report.precision}, {"recall", report.recall},
          {"f1", report.f1},             {"total", report.total},         {"correct", report.correct},
          {"per_class", per_class}};
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

std::string format_double(double value) {
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) return "nan";
  return std::string(buffer, end);
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

std::vector<std::string> csv_split(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        current += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        current += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else if (ch != '\r') {
      current += ch;
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

std::vector<ConfidenceRow> confidence_rows(const SourceConfidenceProfile& profile,
                                           const std::optional<VeracityVerdict>& merged) {
  const std::string regime = profile.regime ? to_string(*profile.regime) : "";
  std::vector<ConfidenceRow> rows;
  for (const auto& [source, verdict] : profile.verdicts) {
    rows.push_back({profile.claim_id, source, verdict.label, verdict.confidence, regime, profile.dispersion});
  }
  if (merged) {
    rows.push_back({profile.claim_id, merged->source, merged->label, merged->confidence, regime, profile.dispersion});
  }
  return rows;
}

namespace {

constexpr std::string_view kConfidencesHeader = "claim_id,source,label,confidence,regime,dispersion";
constexpr std::string_view kKdeHeader = "regime,source,x,density,bandwidth,n";

}  // namespace

void write_confidences_csv(const fs::path& path, std::span<const ConfidenceRow> rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kConfidencesHeader << '\n';
  for (const auto& row : rows) {
    out << csv_escape(row.claim_id) << ',' << csv_escape(row.source) << ',' << csv_escape(row.label) << ','
        << format_double(row.confidence) << ',' << row.regime << ','
        << (row.dispersion ? format_double(*row.dispersion) : "") << '\n';
  }
}

std::vector<ConfidenceRow> read_confidences_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FileMissing("confidences file not found: " + path.string());
  std::string line;
  if (!std::getline(in, line) || csv_split(line) != csv_split(kConfidencesHeader)) {
    throw std::runtime_error("unexpected header in " + path.string());
  }
  std::vector<ConfidenceRow> rows;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = csv_split(line);
    if (fields.size() != 6) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected 6 fields");
    }
    ConfidenceRow row{fields[0], fields[1], fields[2], std::stod(fields[3]), fields[4], std::nullopt};
    if (!fields[5].empty()) row.dispersion = std::stod(fields[5]);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<RegimeCurve> kde_by_regime(std::span<const ConfidenceRow> rows, size_t grid_points,
                                       std::vector<std::string>* skipped) {
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (const auto& row : rows) {
    if (row.regime.empty() || row.label.empty()) continue;
    groups[{row.regime, row.source}].push_back(row.confidence);
  }

  // Regimes in figure order: all, two, none.
  auto regime_rank = [](const std::string& r) {
    auto parsed = parse_regime(r);
    return parsed ? static_cast<int>(*parsed) : 3;
  };
  std::vector<std::pair<std::pair<std::string, std::string>, std::vector<double>>> ordered(groups.begin(), groups.end());
  std::stable_sort(ordered.begin(), ordered.end(), [&](const auto& a, const auto& b) {
    return regime_rank(a.first.first) < regime_rank(b.first.first);
  });

  std::vector<RegimeCurve> curves;
  for (const auto& [key, samples] : ordered) {
    try {
      curves.push_back({key.first, key.second, kde(samples, grid_points)});
    } catch (const DegenerateSamples& e) {
      if (skipped) skipped->push_back(key.first + "/" + key.second + ": " + e.what());
    } catch (const TooFewSamples& e) {
      if (skipped) skipped->push_back(key.first + "/" + key.second + ": " + e.what());
    }
  }
  return curves;
}

void write_kde_csv(const fs::path& path, std::span<const RegimeCurve> curves) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kKdeHeader << '\n';
  for (const auto& c : curves) {
    for (size_t i = 0; i < c.curve.grid.size(); ++i) {
      out << c.regime << ',' << csv_escape(c.source) << ',' << format_double(c.curve.grid[i]) << ','
          << format_double(c.curve.density[i]) << ',' << format_double(c.curve.bandwidth) << ','
          << c.curve.n_samples << '\n';
    }
  }
}

void write_kde_svg(const fs::path& path, std::span<const RegimeCurve> curves) {
  constexpr double kPanelWidth = 360.0;
  constexpr double kPanelHeight = 240.0;
  constexpr double kMargin = 30.0;
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::vector<std::string> regimes;
  std::vector<std::string> sources;
  double x_lo = 0.0, x_hi = 0.0, y_hi = 0.0;
  bool first = true;
  for (const auto& c : curves) {
    if (std::find(regimes.begin(), regimes.end(), c.regime) == regimes.end()) regimes.push_back(c.regime);
    if (std::find(sources.begin(), sources.end(), c.source) == sources.end()) sources.push_back(c.source);
    for (size_t i = 0; i < c.curve.grid.size(); ++i) {
      if (first) {
        x_lo = x_hi = c.curve.grid[i];
        first = false;
      }
      x_lo = std::min(x_lo, c.curve.grid[i]);
      x_hi = std::max(x_hi, c.curve.grid[i]);
      y_hi = std::max(y_hi, c.curve.density[i]);
    }
  }
  if (x_hi <= x_lo) x_hi = x_lo + 1.0;
  if (y_hi <= 0.0) y_hi = 1.0;

  const double width = kMargin + std::max<size_t>(regimes.size(), 1) * (kPanelWidth + kMargin);
  const double height = kPanelHeight + 3 * kMargin + 16.0 * static_cast<double>(sources.size());
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (size_t r = 0; r < regimes.size(); ++r) {
    const double left = kMargin + static_cast<double>(r) * (kPanelWidth + kMargin);
    const double top = kMargin;
    svg << "<text x=\"" << left << "\" y=\"" << top - 8 << "\" font-size=\"12\" font-family=\"sans-serif\">agree: "
        << regimes[r] << "</text>\n";
    svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << kPanelWidth << "\" height=\"" << kPanelHeight
        << "\" fill=\"none\" stroke=\"#999\"/>\n";
    for (const auto& c : curves) {
      if (c.regime != regimes[r]) continue;
      const size_t color = static_cast<size_t>(std::find(sources.begin(), sources.end(), c.source) - sources.begin());
      svg << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << kColors[color % 6] << "\" points=\"";
      for (size_t i = 0; i < c.curve.grid.size(); ++i) {
        const double px = left + (c.curve.grid[i] - x_lo) / (x_hi - x_lo) * kPanelWidth;
        const double py = top + kPanelHeight - c.curve.density[i] / y_hi * kPanelHeight;
        svg << (i ? " " : "") << format_double(std::round(px * 100) / 100) << ','
            << format_double(std::round(py * 100) / 100);
      }
      svg << "\"/>\n";
    }
  }
  for (size_t s = 0; s < sources.size(); ++s) {
    const double y = kPanelHeight + 2 * kMargin + 16.0 * static_cast<double>(s);
    svg << "<text x=\"" << kMargin << "\" y=\"" << y << "\" font-size=\"12\" font-family=\"sans-serif\" fill=\""
        << kColors[s % 6] << "\">" << sources[s] << "</text>\n";
  }
  svg << "<text x=\"" << kMargin << "\" y=\"" << height - 6
      << "\" font-size=\"11\" font-family=\"sans-serif\">x: confidence (log-probability) from " << format_double(x_lo)
      << " to " << format_double(x_hi) << "</text>\n";
  svg << "</svg>\n";

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << svg.str();
}

}  // namespace claimcheck
