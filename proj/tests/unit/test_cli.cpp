#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace {

struct CliRun {
  int code;
  std::string out;
};

CliRun run(const std::string& args) {
  std::string cmd = std::string(EFFLLN_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  std::string out;
  std::array<char, 4096> buf;
  while (std::size_t n = fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), n);
  int status = pclose(p);
  return {WEXITSTATUS(status), out};
}

std::string fixture(const std::string& name, const std::string& body) {
  auto path = std::filesystem::temp_directory_path() / ("efflln_cli_" + name);
  std::ofstream(path) << body;
  return path.string();
}

std::string fair() { return fixture("fair.json", R"({"symbols":["0","1"],"probs":["1/2","1/2"]})"); }

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Cli, EntropyExact) {
  CliRun r = run("entropy --space " + fair());
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(lines(r.out).at(1), "1,1,1,true");
}

TEST(Cli, HoeffdingCertificate) {
  CliRun r = run("--format json bounds --hoeffding --a 0 --b 1 --eps 0.1 --n 100");
  ASSERT_EQ(r.code, 0);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["value"].get<double>(), 0.27067, 1e-5);
  EXPECT_TRUE(j.contains("derivation"));
  EXPECT_TRUE(j.contains("params"));
}

TEST(Cli, MonteCarloNearDp) {
  CliRun r = run("speedlimit mc --space " + fair() + " --symbol 1 --n1 1 --n 2 --trials 100000 --seed 7");
  ASSERT_EQ(r.code, 0);
  auto row = lines(r.out).at(1);
  auto j = nlohmann::json::parse(run("--format json speedlimit mc --space " + fair() +
                                     " --symbol 1 --n1 1 --n 2 --trials 100000 --seed 7")
                                     .out)[0];
  EXPECT_NEAR(j["rate"].get<double>(), 0.97873, 0.002);
  EXPECT_LE(j["wilson3_lo"].get<double>(), 64142.0 / 65536);
  EXPECT_GE(j["wilson3_hi"].get<double>(), 64142.0 / 65536);
  EXPECT_NE(row.find(std::to_string(j["passes"].get<long>())), std::string::npos);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("no-such-command").code, 2);
  EXPECT_EQ(run("bounds --chernoff --bogus-flag").code, 2);
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("speedlimit mc --help").code, 0);
  EXPECT_EQ(run("bounds --chernoff --q 1/2 --eps 3/4 --n 4").code, 1);
  EXPECT_EQ(run("entropy --space /nonexistent.json").code, 1);
  EXPECT_EQ(run("speedlimit mc --space " + fair() + " --n 20").code, 1);
}

TEST(Cli, RowsReproduce) {
  std::string a = run("--seed 3 --workers 1 dichotomy --space " + fair() + " --t 2,3 --trials 8 --length 5000").out;
  std::string b = run("--seed 3 --workers 4 dichotomy --space " + fair() + " --t 2,3 --trials 8 --length 5000").out;
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, b);
}

TEST(Cli, GenerateScanAndConvert) {
  auto dir = std::filesystem::temp_directory_path();
  std::string seq = (dir / "efflln_cli_seq.txt").string(), bin = (dir / "efflln_cli_seq.bin").string(),
              adv = (dir / "efflln_cli_adv.txt").string();
  ASSERT_EQ(run("--seed 5 --out " + seq + " gen --space " + fair() + " --length 4096").code, 0);
  CliRun info = run("io --space " + fair() + " --in " + seq);
  ASSERT_EQ(info.code, 0);
  ASSERT_EQ(run("--out " + bin + " io --space " + fair() + " --in " + seq + " --to-bytes").code, 0);
  CliRun info2 = run("io --space " + fair() + " --in " + bin + " --bytes");
  EXPECT_EQ(lines(info.out).at(1).substr(lines(info.out).at(1).find(',')),
            lines(info2.out).at(1).substr(lines(info2.out).at(1).find(',')));
  EXPECT_EQ(run("lln-scan --prefix " + seq + " --space " + fair() + " --nmax 5").code, 0);
  EXPECT_EQ(run("aep --prefix " + seq + " --space " + fair() + " --nmax 5").code, 0);
  EXPECT_EQ(run("rv-scan --prefix " + seq + " --space " + fair() + " --values -1,1 --nmax 5").code, 0);
  ASSERT_EQ(run("--seed 2 --out " + adv + " speedlimit generate --space " + fair() + " --depth 5").code, 0);
  CliRun scan = run("speedlimit scan --prefix " + adv + " --space " + fair());
  EXPECT_EQ(scan.code, 0);
  EXPECT_EQ(scan.out.find("false"), std::string::npos);
}

TEST(Cli, SllnCommands) {
  std::string rv = fixture("rv.json", R"({"support":["0","1/2","1"],"probs":["1/4","1/2","1/4"]})");
  CliRun cert = run("slln cert --rv " + rv + " --eps 1 --delta 1/8");
  EXPECT_EQ(cert.code, 0);
  EXPECT_EQ(run("--seed 1 slln scan --rv " + rv + " --samples 10000 --nmax 8").code, 0);
  CliRun cp = run("--format json --seed 1 slln checkpoint --rv " + rv + " --n1 1 --n 2 --trials 2000");
  ASSERT_EQ(cp.code, 0);
  EXPECT_FALSE(nlohmann::json::parse(cp.out)[0]["dp"].is_null());
}
