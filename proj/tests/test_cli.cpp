// Copyright 2026 The Perch Authors
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

// Drives the installed binary the way a user would: separate process per
// command, state persisted between invocations.

#include <gtest/gtest.h>

#include <cstdio>

#include "perch/bytes.hpp"
#include "test_support.hpp"

namespace perch {
namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr combined
};

CliResult run_cli(const std::filesystem::path& dir, const std::string& args) {
  std::string cmd = "cd " + dir.string() + " && " + PERCH_CLI_PATH +
                    " --config perch.conf " + args + " 2>&1";
  CliResult result;
  FILE* pipe = popen(cmd.c_str(), "r");
  EXPECT_NE(pipe, nullptr);
  char buf[512];
  while (fgets(buf, sizeof(buf), pipe) != nullptr) result.output += buf;
  int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::filesystem::path make_workdir(const std::string& name,
                                   const std::string& seed) {
  auto dir = testing::fresh_dir(name);
  std::ofstream conf(dir / "perch.conf");
  conf << "state_dir = state\n"
       << "backend = file:chain\n"
       << "policy = count:16,bytes:1048576\n"
       << "clock = logical\n"
       << "clock_start = 1704067200\n"
       << "clock_tick = 60\n"
       << "master_seed = " << seed << "\n"
       << "customer_name = Pat Example\n"
       << "pull_count = 6\n"
       << "queue_journal = on\n"
       << "institution.bank-a = bank,1001,8\n"
       << "institution.card-b = credit-card,2002,12\n";
  return dir;
}

std::string grep_line(const std::string& text, const std::string& prefix) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind(prefix, 0) == 0) return line;
  return "";
}

TEST(Cli, InitThenVerifyIsCleanExitZero) {
  auto dir = make_workdir("cli-init", "seed-a");
  CliResult init = run_cli(dir, "init");
  EXPECT_EQ(init.exit_code, 0) << init.output;
  EXPECT_NE(init.output.find("initialized chain"), std::string::npos);
  CliResult verify = run_cli(dir, "verify");
  EXPECT_EQ(verify.exit_code, 0) << verify.output;
  EXPECT_NE(verify.output.find("ok"), std::string::npos);
  // init twice fails cleanly
  CliResult again = run_cli(dir, "init");
  EXPECT_EQ(again.exit_code, 1);
  EXPECT_NE(again.output.find("error[AlreadyRegistered]"),
            std::string::npos);
}

TEST(Cli, LifecycleAcrossInvocations) {
  auto dir = make_workdir("cli-lifecycle", "seed-b");
  ASSERT_EQ(run_cli(dir, "init").exit_code, 0);
  ASSERT_EQ(run_cli(dir, "enroll bank-a").exit_code, 0);
  ASSERT_EQ(run_cli(dir, "enroll card-b").exit_code, 0);
  CliResult pull = run_cli(dir, "pull");
  EXPECT_EQ(pull.exit_code, 0) << pull.output;
  EXPECT_NE(pull.output.find("accepted 12"), std::string::npos)
      << pull.output;
  // queue journal keeps the pending entries across processes
  CliResult flush = run_cli(dir, "flush");
  EXPECT_EQ(flush.exit_code, 0) << flush.output;
  EXPECT_NE(flush.output.find("sealed block"), std::string::npos);
  // flush again: nothing queued
  EXPECT_EQ(run_cli(dir, "flush").exit_code, 1);

  // pulling the same window again only reports duplicates
  CliResult repull = run_cli(dir, "pull --since 0");
  EXPECT_EQ(repull.exit_code, 0);
  EXPECT_NE(repull.output.find("duplicates 12"), std::string::npos)
      << repull.output;

  CliResult query = run_cli(dir, "query --institution bank-a");
  EXPECT_EQ(query.exit_code, 0);
  EXPECT_NE(query.output.find("height,position,occurred_at"),
            std::string::npos);
  EXPECT_NE(query.output.find("bank-1001-0"), std::string::npos);

  CliResult report = run_cli(dir, "report --bucket monthly --out report.csv");
  EXPECT_EQ(report.exit_code, 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "report.csv"));

  CliResult revoke = run_cli(dir, "revoke bank-a");
  EXPECT_EQ(revoke.exit_code, 0) << revoke.output;
  CliResult repull2 = run_cli(dir, "pull");
  EXPECT_EQ(repull2.exit_code, 0);
  EXPECT_NE(repull2.output.find("rejected"), std::string::npos);
}

TEST(Cli, VerifyExitsThreeAfterExternalTamper) {
  auto dir = make_workdir("cli-tamper", "seed-c");
  ASSERT_EQ(run_cli(dir, "init").exit_code, 0);
  ASSERT_EQ(run_cli(dir, "enroll bank-a").exit_code, 0);
  ASSERT_EQ(run_cli(dir, "pull").exit_code, 0);
  ASSERT_EQ(run_cli(dir, "flush").exit_code, 0);

  auto block_file = dir / "state" / "chain" / "blocks" / "00000001.blk";
  Bytes raw;
  ASSERT_TRUE(read_file(block_file, raw));
  raw[raw.size() / 3] ^= 0x08;
  ASSERT_TRUE(write_file_atomic(block_file, raw));

  CliResult verify = run_cli(dir, "verify");
  EXPECT_EQ(verify.exit_code, 3) << verify.output;
  EXPECT_NE(verify.output.find("TAMPERED at height 1"), std::string::npos)
      << verify.output;
}

TEST(Cli, DemoIsDeterministicAcrossRuns) {
  auto a = make_workdir("cli-demo-a", "seed-demo");
  auto b = make_workdir("cli-demo-b", "seed-demo");
  CliResult ra = run_cli(a, "demo");
  CliResult rb = run_cli(b, "demo");
  ASSERT_EQ(ra.exit_code, 0) << ra.output;
  ASSERT_EQ(rb.exit_code, 0) << rb.output;
  std::string head_a = grep_line(ra.output, "head ");
  EXPECT_FALSE(head_a.empty());
  EXPECT_EQ(head_a, grep_line(rb.output, "head "));
  Bytes report_a, report_b;
  ASSERT_TRUE(read_file(a / "state" / "report.csv", report_a));
  ASSERT_TRUE(read_file(b / "state" / "report.csv", report_b));
  EXPECT_EQ(report_a, report_b);
}

TEST(Cli, DemoTamperVariantDetects) {
  auto dir = make_workdir("cli-demo-tamper", "seed-dt");
  CliResult r = run_cli(dir, "demo --tamper");
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("tampering detected as expected"),
            std::string::npos);
}

TEST(Cli, MigrateToFileKeepsChainAcrossInvocations) {
  auto dir = make_workdir("cli-migrate", "seed-m");
  ASSERT_EQ(run_cli(dir, "init").exit_code, 0);
  ASSERT_EQ(run_cli(dir, "enroll bank-a").exit_code, 0);
  CliResult verify_before = run_cli(dir, "verify");
  std::string head_before = grep_line(verify_before.output, "head ");

  CliResult migrate = run_cli(dir, "migrate file:chain2");
  EXPECT_EQ(migrate.exit_code, 0) << migrate.output;
  EXPECT_EQ(grep_line(migrate.output, "head "), head_before);

  CliResult verify_after = run_cli(dir, "verify");
  EXPECT_EQ(verify_after.exit_code, 0);
  EXPECT_EQ(grep_line(verify_after.output, "head "), head_before);

  // memory destinations are refused from the one-shot CLI
  CliResult to_mem = run_cli(dir, "migrate mem:");
  EXPECT_EQ(to_mem.exit_code, 1);
  EXPECT_NE(to_mem.output.find("error[ConfigError]"), std::string::npos);
}

TEST(Cli, UsageErrorsExitTwo) {
  auto dir = make_workdir("cli-usage", "seed-u");
  EXPECT_EQ(run_cli(dir, "frobnicate").exit_code, 2);
  EXPECT_EQ(run_cli(dir, "enroll").exit_code, 2);  // missing argument
  EXPECT_EQ(run_cli(dir, "--help").exit_code, 0);
}

TEST(Cli, CommandsBeforeInitFailCleanly) {
  auto dir = make_workdir("cli-noinit", "seed-n");
  CliResult r = run_cli(dir, "verify");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("error[UnknownChain]"), std::string::npos)
      << r.output;
}

}  // namespace
}  // namespace perch
