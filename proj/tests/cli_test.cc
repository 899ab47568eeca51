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

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "pscare/cli.h"
#include "pscare/io.h"

namespace pscare {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result Run(std::vector<std::string> args) {
  args.insert(args.begin(), "pscare");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code =
      RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

bool Contains(const std::string& s, const std::string& part) {
  return s.find(part) != std::string::npos;
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("pscare_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string operator/(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  fs::path path_;
};

TEST_CASE("simulate, detect with the exhaustive check, rank") {
  TempDir dir;
  const Result sim = Run({"simulate", "--n", "10", "--d", "0", "--k", "3",
                          "--delta", "400", "--seed", "7", "--out-dir",
                          dir / ""});
  REQUIRE(sim.code == kExitOk);
  CHECK(fs::exists(dir / "comparisons.csv"));
  CHECK(fs::exists(dir / "truth.json"));

  const Result det = Run({"detect", "--comparisons", dir / "comparisons.csv",
                          "--out", dir / "report.json", "--prefix", "60",
                          "--min-seg-len", "5", "--oracle", "--threads", "2"});
  CHECK(det.code == kExitOk);
  CHECK(Contains(det.out, "oracle: match"));
  const nlohmann::json report = ReadJsonFile(dir / "report.json");
  CHECK(report.at("input").at("T") == 60);
  CHECK(report.contains("timings"));

  const Result rank = Run({"rank", "--report", dir / "report.json"});
  CHECK(rank.code == kExitOk);
  CHECK_FALSE(rank.out.empty());

  const Result fit = Run({"fit", "--comparisons", dir / "comparisons.csv",
                          "--start", "1", "--end", "400", "--json",
                          dir / "fit.json"});
  CHECK(fit.code == kExitOk);
  CHECK(Contains(fit.out, "nll"));
  CHECK(ReadJsonFile(dir / "fit.json").at("end") == 400);

  const Result big = Run({"detect", "--comparisons", dir / "comparisons.csv",
                          "--out", dir / "big.json", "--oracle"});
  CHECK(big.code == kExitInputError);
}

TEST_CASE("input errors exit with code 1") {
  TempDir dir;
  {
    std::ofstream f(dir / "dup.csv");
    f << "t,i,j,y\n1,A,B,1\n2,B,C,0\n2,A,C,1\n";
  }
  const Result dup = Run({"detect", "--comparisons", dir / "dup.csv", "--out",
                          dir / "r.json"});
  CHECK(dup.code == kExitInputError);
  CHECK(Contains(dup.err, "dup.csv:4"));

  const Result unknown = Run({"detect", "--bogus"});
  CHECK(unknown.code == kExitInputError);
  CHECK(Contains(unknown.err, "Usage"));

  const Result missing = Run({"simulate", "--n", "10"});
  CHECK(missing.code == kExitInputError);

  const Result none = Run({});
  CHECK(none.code == kExitInputError);

  const Result help = Run({"--help"});
  CHECK(help.code == kExitOk);
  CHECK(Contains(help.out, "detect"));

  const Result bad_scale =
      Run({"bench", "--setting", "1", "--nll-scale", "bits"});
  CHECK(bad_scale.code == kExitInputError);

  const Result bad_rule =
      Run({"bench", "--setting", "1", "--prune-rule", "loose"});
  CHECK(bad_rule.code == kExitInputError);
}

TEST_CASE("bench prints a summary row") {
  const Result r = Run({"bench", "--setting", "1", "--n", "4", "--k", "1",
                        "--delta", "60", "--reps", "2", "--seed", "3",
                        "--threads", "1", "--prune-rule", "aggressive"});
  CHECK(r.code == kExitOk);
  CHECK(Contains(r.out, "%"));
}

}  // namespace
}  // namespace pscare
