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

// File formats.
//
// comparisons.csv   header `t,i,j,y`; t runs 1..T; i and j are item labels;
//                   y = 1 when i won.
// covariates.csv    header `item,c1,...,cd`; one row per item. Optional when
//                   d = 0.
// truth.json        simulation spec, RNG family, change points and segment
//                   parameters.
// report.json       detection result; see ReportToJson.
//
// Items are numbered in order of first appearance in comparisons.csv; items
// that only appear in covariates.csv follow in file order. Doubles are
// written with 17 significant digits so that they read back exactly.

#ifndef PSCARE_IO_H_
#define PSCARE_IO_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "pscare/estimator.h"
#include "pscare/mdl.h"
#include "pscare/pelt.h"
#include "pscare/simulator.h"
#include "pscare/types.h"

namespace pscare {

// Parse errors are InputErrors whose message starts with "<source>:<line>:".
// `covariates` may be null.
ComparisonDataset ParseDataset(std::istream& comparisons,
                               const std::string& comparisons_name,
                               std::istream* covariates,
                               const std::string& covariates_name);

// An empty `covariates_path` means no covariates.
ComparisonDataset ReadDataset(const std::string& comparisons_path,
                              const std::string& covariates_path);

void WriteComparisonsCsv(const ComparisonDataset& data, std::ostream& out);
void WriteCovariatesCsv(const ComparisonDataset& data, std::ostream& out);

// Same items (by label), covariates per label, and events up to relabelling.
bool SameDatasetByLabel(const ComparisonDataset& a, const ComparisonDataset& b);

nlohmann::json TruthToJson(const SimSpec& spec, const SimOutput& sim);

nlohmann::json FitConfigToJson(const FitConfig& config);
FitConfig FitConfigFromJson(const nlohmann::json& j);
nlohmann::json MdlConfigToJson(const MdlConfig& config);
MdlConfig MdlConfigFromJson(const nlohmann::json& j);

nlohmann::json SegmentFitToJson(const SegmentFit& fit,
                                const ComparisonDataset& data);

// Everything in a Segmentation, labelled with `data`. Deterministic: equal
// inputs give byte-identical dumps.
nlohmann::json SegmentationToJson(const Segmentation& seg,
                                  const ComparisonDataset& data,
                                  const FitConfig& fit_config);

struct PhaseTimings {
  double ingest_s = 0;
  double search_s = 0;
  double fitting_s = 0;
  double oracle_s = 0;
};

// Segmentation plus input description, per-segment rankings and timings.
nlohmann::json ReportToJson(const Segmentation& seg,
                            const ComparisonDataset& data,
                            const FitConfig& fit_config,
                            const std::string& comparisons_path,
                            const std::string& covariates_path,
                            const PhaseTimings& timings);

// Per-segment rankings read back from a report, labelled.
struct ReportRankEntry {
  std::string label;
  double score = 0;
  int rank = 0;
  bool present = true;
  bool tied = false;
};
struct ReportSegment {
  SegmentSpan span;
  std::vector<ReportRankEntry> entries;
};
std::vector<ReportSegment> RankingsFromReport(const nlohmann::json& report);

// Text table of the rankings, one block per segment.
void PrintRankings(const std::vector<ReportSegment>& segments,
                   std::ostream& out);

nlohmann::json ReadJsonFile(const std::string& path);
void WriteJsonFile(const nlohmann::json& j, const std::string& path);

const char* NllScaleName(NllScale scale);
const char* ParamCountRuleName(ParamCountRule rule);
NllScale ParseNllScale(const std::string& name);
ParamCountRule ParseParamCountRule(const std::string& name);

}  // namespace pscare

#endif  // PSCARE_IO_H_
