// Copyright 2026 The PS-CARE Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pscare/io.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <utility>

namespace pscare {
namespace {

using nlohmann::json;

std::string Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> SplitFields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t begin = 0;
  while (true) {
    const std::size_t comma = line.find(',', begin);
    fields.push_back(Trim(std::string_view(line).substr(
        begin, comma == std::string::npos ? std::string::npos : comma - begin)));
    if (comma == std::string::npos) break;
    begin = comma + 1;
  }
  return fields;
}

class LineReader {
 public:
  LineReader(std::istream& in, std::string name)
      : in_(in), name_(std::move(name)) {}

  // Next non-blank line; false at end of input.
  bool Next(std::vector<std::string>* fields) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (Trim(line).empty()) continue;
      *fields = SplitFields(line);
      return true;
    }
    if (in_.bad()) Fail("read error");
    return false;
  }

  [[noreturn]] void Fail(const std::string& what) const {
    throw InputError(name_ + ":" + std::to_string(line_no_) + ": " + what);
  }

  int line() const { return line_no_; }

 private:
  std::istream& in_;
  std::string name_;
  int line_no_ = 0;
};

int ParseInt(const std::string& s, const LineReader& reader,
             const char* field) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    reader.Fail(std::string("field '") + field + "' is not an integer: '" + s +
                "'");
  }
  return value;
}

double ParseDouble(const std::string& s, const LineReader& reader,
                   const std::string& field) {
  double value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() ||
      !std::isfinite(value)) {
    reader.Fail("field '" + field + "' is not a finite number: '" + s + "'");
  }
  return value;
}

std::string FormatDouble(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

json VectorToJson(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

json DiagnosticsToJson(const DiagnosticsReport& r) {
  return {
      {"incoherence", r.incoherence},
      {"incoherence_bound", r.incoherence_bound},
      {"incoherence_ok", r.incoherence_ok},
      {"l_min", r.l_min},
      {"span_length", r.span_length},
      {"rate_statistic", r.rate_statistic},
      {"rate_threshold", r.rate_threshold},
      {"rate_ok", r.rate_ok},
      {"connected", r.connected},
      {"all_items_present", r.all_items_present},
      {"items_present", r.items_present},
      {"mle_exists", r.mle_exists},
  };
}

json MdlToJson(const MdlBreakdown& m) {
  return {{"cl_K", m.cl_K},
          {"cl_tau", m.cl_tau},
          {"cl_params", m.cl_params},
          {"cl_resid", m.cl_resid},
          {"total", m.total}};
}

json DetectConfigToJson(const ResolvedDetectConfig& rc) {
  return {{"min_seg_len", rc.min_seg_len},
          {"gamma", rc.gamma},
          {"prune_constant", rc.prune_constant},
          {"prune_rule", PruneRuleName(rc.prune_rule)},
          {"max_changepoints", rc.max_changepoints},
          {"pruning_enabled", rc.pruning_enabled},
          {"threads", rc.threads}};
}

json RankingToJson(const SegmentRanking& ranking,
                   const ComparisonDataset& data) {
  json out = json::array();
  for (const RankEntry& e : ranking.entries) {
    out.push_back({{"label", data.labels()[e.item]},
                   {"item", e.item + 1},
                   {"score", e.score},
                   {"rank", e.present ? json(e.rank) : json(nullptr)},
                   {"present", e.present},
                   {"tied", e.tied}});
  }
  return out;
}

}  // namespace

ComparisonDataset ParseDataset(std::istream& comparisons,
                               const std::string& comparisons_name,
                               std::istream* covariates,
                               const std::string& covariates_name) {
  std::vector<std::string> fields;
  std::unordered_map<std::string, int> index;
  std::vector<std::string> labels;
  auto intern = [&](const std::string& label) {
    auto [it, inserted] = index.try_emplace(label, static_cast<int>(labels.size()));
    if (inserted) labels.push_back(label);
    return it->second;
  };

  LineReader reader(comparisons, comparisons_name);
  if (!reader.Next(&fields)) reader.Fail("empty file, expected header t,i,j,y");
  if (fields != std::vector<std::string>{"t", "i", "j", "y"}) {
    reader.Fail("expected header t,i,j,y");
  }
  std::vector<ComparisonEvent> events;
  while (reader.Next(&fields)) {
    if (fields.size() != 4) {
      reader.Fail("expected 4 fields, got " + std::to_string(fields.size()));
    }
    const int t = ParseInt(fields[0], reader, "t");
    const int expected = static_cast<int>(events.size()) + 1;
    if (t != expected) {
      if (t < expected && t >= 1) {
        reader.Fail("duplicate or out-of-order t=" + std::to_string(t) +
                    " (expected " + std::to_string(expected) + ")");
      }
      reader.Fail("t=" + std::to_string(t) + " breaks the sequence 1..T (expected " +
                  std::to_string(expected) + ")");
    }
    if (fields[1].empty() || fields[2].empty()) reader.Fail("empty item label");
    if (fields[1] == fields[2]) {
      reader.Fail("item '" + fields[1] + "' compared with itself");
    }
    if (fields[3] != "0" && fields[3] != "1") {
      reader.Fail("y must be 0 or 1, got '" + fields[3] + "'");
    }
    const int i = intern(fields[1]);
    const int j = intern(fields[2]);
    events.push_back({t, i, j, fields[3] == "1"});
  }
  if (events.empty()) reader.Fail("no comparisons");
  const int compared = static_cast<int>(labels.size());

  Eigen::MatrixXd z(compared, 0);
  if (covariates != nullptr) {
    LineReader cov(*covariates, covariates_name);
    if (!cov.Next(&fields)) cov.Fail("empty file, expected header item,c1,...");
    if (fields.empty() || fields[0] != "item") {
      cov.Fail("expected header starting with 'item'");
    }
    const std::vector<std::string> header = fields;
    const int d = static_cast<int>(header.size()) - 1;
    std::vector<Eigen::VectorXd> rows(compared);
    std::vector<bool> has_row(compared, false);
    while (cov.Next(&fields)) {
      if (static_cast<int>(fields.size()) != d + 1) {
        cov.Fail("expected " + std::to_string(d + 1) + " fields, got " +
                 std::to_string(fields.size()));
      }
      if (fields[0].empty()) cov.Fail("empty item label");
      const int item = intern(fields[0]);
      if (item >= static_cast<int>(rows.size())) {
        rows.resize(item + 1);
        has_row.resize(item + 1, false);
      }
      if (has_row[item]) cov.Fail("duplicate item '" + fields[0] + "'");
      has_row[item] = true;
      rows[item].resize(d);
      for (int c = 0; c < d; ++c) {
        rows[item][c] = ParseDouble(fields[c + 1], cov, header[c + 1]);
      }
    }
    for (int i = 0; i < compared; ++i) {
      if (!has_row[i]) {
        throw InputError(covariates_name + ": item '" + labels[i] +
                         "' appears in " + comparisons_name +
                         " but has no covariates");
      }
    }
    z.resize(static_cast<Eigen::Index>(labels.size()), d);
    for (int i = 0; i < static_cast<int>(labels.size()); ++i) z.row(i) = rows[i];
  }

  const int n = static_cast<int>(labels.size());
  if (n < 2) throw InputError(comparisons_name + ": need at least 2 items");
  CovariateSet cov_set = z.cols() == 0 ? CovariateSet(n) : CovariateSet(z);
  return ComparisonDataset(std::move(cov_set), std::move(events),
                           std::move(labels));
}

ComparisonDataset ReadDataset(const std::string& comparisons_path,
                              const std::string& covariates_path) {
  std::ifstream comparisons(comparisons_path);
  if (!comparisons) throw InputError("cannot open " + comparisons_path);
  if (covariates_path.empty()) {
    return ParseDataset(comparisons, comparisons_path, nullptr, "");
  }
  std::ifstream covariates(covariates_path);
  if (!covariates) throw InputError("cannot open " + covariates_path);
  return ParseDataset(comparisons, comparisons_path, &covariates,
                      covariates_path);
}

void WriteComparisonsCsv(const ComparisonDataset& data, std::ostream& out) {
  out << "t,i,j,y\n";
  for (const ComparisonEvent& e : data.events()) {
    out << e.t << ',' << data.labels()[e.i] << ',' << data.labels()[e.j] << ','
        << e.y() << '\n';
  }
}

void WriteCovariatesCsv(const ComparisonDataset& data, std::ostream& out) {
  out << "item";
  for (int c = 1; c <= data.d(); ++c) out << ",c" << c;
  out << '\n';
  const Eigen::MatrixXd& z = data.covariates().z();
  for (int i = 0; i < data.n(); ++i) {
    out << data.labels()[i];
    for (int c = 0; c < data.d(); ++c) out << ',' << FormatDouble(z(i, c));
    out << '\n';
  }
}

bool SameDatasetByLabel(const ComparisonDataset& a,
                        const ComparisonDataset& b) {
  if (a.n() != b.n() || a.d() != b.d() || a.T() != b.T()) return false;
  std::unordered_map<std::string, int> b_index;
  for (int i = 0; i < b.n(); ++i) b_index[b.labels()[i]] = i;
  std::vector<int> to_b(a.n());
  for (int i = 0; i < a.n(); ++i) {
    auto it = b_index.find(a.labels()[i]);
    if (it == b_index.end()) return false;
    to_b[i] = it->second;
    if (a.covariates().z().row(i) != b.covariates().z().row(it->second)) {
      return false;
    }
  }
  for (int t = 1; t <= a.T(); ++t) {
    const ComparisonEvent& x = a.at(t);
    const ComparisonEvent& y = b.at(t);
    if (to_b[x.i] != y.i || to_b[x.j] != y.j ||
        x.winner_is_i != y.winner_is_i) {
      return false;
    }
  }
  return true;
}

json TruthToJson(const SimSpec& spec, const SimOutput& sim) {
  json params = json::array();
  for (const ParamVector& xi : sim.true_params) {
    params.push_back({{"alpha", VectorToJson(xi.alpha)},
                      {"beta", VectorToJson(xi.beta)}});
  }
  return {
      {"rng_family", kRngFamily},
      {"spec",
       {{"n", spec.n},
        {"d", spec.d},
        {"K", spec.K},
        {"delta", spec.delta},
        {"T", spec.T()},
        {"seed", spec.seed},
        {"alpha_range", spec.alpha_range},
        {"beta_radius_factor", spec.beta_radius_factor},
        {"covariate_range", spec.covariate_range}}},
      {"labels", sim.dataset.labels()},
      {"true_changepoints", sim.true_changepoints},
      {"true_params", params},
  };
}

const char* NllScaleName(NllScale scale) {
  return scale == NllScale::kLog2e ? "log2e" : "natural";
}

const char* ParamCountRuleName(ParamCountRule rule) {
  return rule == ParamCountRule::kFull ? "full" : "constrained";
}

NllScale ParseNllScale(const std::string& name) {
  if (name == "log2e") return NllScale::kLog2e;
  if (name == "natural") return NllScale::kNatural;
  throw InputError("unknown NLL scale '" + name + "' (log2e|natural)");
}

ParamCountRule ParseParamCountRule(const std::string& name) {
  if (name == "full") return ParamCountRule::kFull;
  if (name == "constrained") return ParamCountRule::kConstrained;
  throw InputError("unknown parameter count rule '" + name +
                   "' (full|constrained)");
}

json FitConfigToJson(const FitConfig& c) {
  return {{"max_iters", c.max_iters},
          {"grad_tol", c.grad_tol},
          {"step_rule",
           c.step_rule == StepRule::kFixed ? "fixed" : "backtracking"},
          {"fixed_step", c.fixed_step},
          {"shrink", c.shrink},
          {"armijo", c.armijo},
          {"initial_step", c.initial_step},
          {"ridge", c.ridge},
          {"divergence_bound", c.divergence_bound},
          {"fallback_ridge", c.fallback_ridge}};
}

FitConfig FitConfigFromJson(const json& j) {
  try {
    FitConfig c;
    c.max_iters = j.at("max_iters").get<int>();
    c.grad_tol = j.at("grad_tol").get<double>();
    const std::string rule = j.at("step_rule").get<std::string>();
    if (rule != "fixed" && rule != "backtracking") {
      throw InputError("unknown step rule '" + rule + "'");
    }
    c.step_rule = rule == "fixed" ? StepRule::kFixed : StepRule::kBacktracking;
    c.fixed_step = j.at("fixed_step").get<double>();
    c.shrink = j.at("shrink").get<double>();
    c.armijo = j.at("armijo").get<double>();
    c.initial_step = j.at("initial_step").get<double>();
    c.ridge = j.at("ridge").get<double>();
    c.divergence_bound = j.at("divergence_bound").get<double>();
    c.fallback_ridge = j.at("fallback_ridge").get<double>();
    c.Validate();
    return c;
  } catch (const json::exception& e) {
    throw InputError(std::string("bad fit config: ") + e.what());
  }
}

json MdlConfigToJson(const MdlConfig& c) {
  return {{"nll_scale", NllScaleName(c.nll_scale)},
          {"param_count", ParamCountRuleName(c.param_count_rule)},
          {"penalty_gamma",
           c.penalty_gamma ? json(*c.penalty_gamma) : json(nullptr)}};
}

MdlConfig MdlConfigFromJson(const json& j) {
  try {
    MdlConfig c;
    c.nll_scale = ParseNllScale(j.at("nll_scale").get<std::string>());
    c.param_count_rule =
        ParseParamCountRule(j.at("param_count").get<std::string>());
    if (!j.at("penalty_gamma").is_null()) {
      c.penalty_gamma = j.at("penalty_gamma").get<double>();
    }
    c.Validate();
    return c;
  } catch (const json::exception& e) {
    throw InputError(std::string("bad MDL config: ") + e.what());
  }
}

json SegmentFitToJson(const SegmentFit& fit, const ComparisonDataset& data) {
  return {{"start", fit.span.start},
          {"end", fit.span.end},
          {"length", fit.span.length()},
          {"nll", fit.nll},
          {"iters", fit.iters},
          {"converged", fit.converged},
          {"grad_norm", fit.grad_norm},
          {"separated", fit.separated},
          {"diverged", fit.diverged},
          {"ridge_fallback", fit.ridge_fallback},
          {"ridge_used", fit.ridge_used},
          {"diagnostic", fit.diagnostic},
          {"alpha", VectorToJson(fit.xi_hat.alpha)},
          {"beta", VectorToJson(fit.xi_hat.beta)},
          {"scores", VectorToJson(fit.xi_hat.Scores(data.covariates()))}};
}

json SegmentationToJson(const Segmentation& seg, const ComparisonDataset& data,
                        const FitConfig& fit_config) {
  const std::vector<SegmentRanking> rankings =
      RankSegments(seg, data.covariates());
  json segments = json::array();
  for (std::size_t k = 0; k < seg.segments.size(); ++k) {
    const SegmentResult& r = seg.segments[k];
    json s = SegmentFitToJson(r.fit, data);
    s["cost"] = r.cost;
    s["appearances"] = r.appearances;
    s["diagnostics"] = DiagnosticsToJson(r.diagnostics);
    s["ranking"] = RankingToJson(rankings[k], data);
    segments.push_back(std::move(s));
  }
  return {
      {"config",
       {{"detect", DetectConfigToJson(seg.config)},
        {"mdl", MdlConfigToJson(seg.mdl_config)},
        {"fit", FitConfigToJson(fit_config)}}},
      {"K_hat", seg.K_hat},
      {"tau_hat", seg.tau_hat},
      {"objective", seg.objective},
      {"mdl", MdlToJson(seg.mdl)},
      {"segments", segments},
      {"search",
       {{"pruning_stats", seg.pruning_stats}, {"f_values", seg.f_values}}},
  };
}

json ReportToJson(const Segmentation& seg, const ComparisonDataset& data,
                  const FitConfig& fit_config,
                  const std::string& comparisons_path,
                  const std::string& covariates_path,
                  const PhaseTimings& timings) {
  json report = {
      {"format", "pscare-report"},
      {"version", 1},
      {"input",
       {{"comparisons", comparisons_path},
        {"covariates", covariates_path},
        {"T", data.T()},
        {"n", data.n()},
        {"d", data.d()},
        {"labels", data.labels()}}},
  };
  report.update(SegmentationToJson(seg, data, fit_config));
  report["timings"] = {{"ingest_s", timings.ingest_s},
                       {"search_s", timings.search_s},
                       {"fitting_s", timings.fitting_s},
                       {"oracle_s", timings.oracle_s}};
  return report;
}

std::vector<ReportSegment> RankingsFromReport(const json& report) {
  try {
    std::vector<ReportSegment> out;
    for (const json& s : report.at("segments")) {
      ReportSegment seg;
      seg.span = {s.at("start").get<int>(), s.at("end").get<int>()};
      for (const json& e : s.at("ranking")) {
        ReportRankEntry entry;
        entry.label = e.at("label").get<std::string>();
        entry.score = e.at("score").get<double>();
        entry.present = e.at("present").get<bool>();
        entry.rank = entry.present ? e.at("rank").get<int>() : 0;
        entry.tied = e.at("tied").get<bool>();
        seg.entries.push_back(std::move(entry));
      }
      out.push_back(std::move(seg));
    }
    return out;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed report: ") + e.what());
  }
}

void PrintRankings(const std::vector<ReportSegment>& segments,
                   std::ostream& out) {
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const ReportSegment& seg = segments[k];
    out << "Segment " << k + 1 << "  [" << seg.span.start << ", "
        << seg.span.end << "]\n";
    std::size_t width = 5;
    for (const ReportRankEntry& e : seg.entries) {
      width = std::max(width, e.label.size());
    }
    out << "  rank  " << std::left << std::setw(static_cast<int>(width))
        << "item" << std::right << "  " << std::setw(12) << "score" << '\n';
    for (const ReportRankEntry& e : seg.entries) {
      std::ostringstream rank;
      if (e.present) {
        rank << e.rank << (e.tied ? "=" : "");
      } else {
        rank << "NA";
      }
      out << "  " << std::setw(4) << rank.str() << "  " << std::left
          << std::setw(static_cast<int>(width)) << e.label << std::right
          << "  ";
      if (e.present) {
        out << std::setw(12) << std::fixed << std::setprecision(4) << e.score;
        out.unsetf(std::ios::floatfield);
      } else {
        out << std::setw(12) << "NA";
      }
      out << '\n';
    }
  }
}

json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

void WriteJsonFile(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw InputError("write failed for " + path);
}

}  // namespace pscare
