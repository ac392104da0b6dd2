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

#include <CLI11.hpp>

#include "perch/cli.hpp"

namespace {

volatile std::sig_atomic_t g_stop = 0;
void handle_signal(int) { g_stop = 1; }

std::string random_seed_hex() {
  std::random_device rd;
  uint64_t a = (static_cast<uint64_t>(rd()) << 32) | rd();
  uint64_t b = (static_cast<uint64_t>(rd()) << 32) | rd();
  char buf[33];
  std::snprintf(buf, sizeof(buf), "%016llx%016llx",
                static_cast<unsigned long long>(a),
                static_cast<unsigned long long>(b));
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace perch;
  using perch::cli::Config;

  CLI::App app{
      "perch: a per-customer tamper-evident ledger of financial\n"
      "transactions, maintained by independent gateway, identity, block\n"
      "creation, and reporting services"};
  app.require_subcommand(0, 1);
  std::string config_path = "perch.conf";
  app.add_option("--config", config_path,
                 "configuration file (created by init if missing)")
      ->capture_default_str();
  bool serve_flag = false;
  app.add_flag("--serve", serve_flag,
               "host all configured services over HTTP (same as `serve`)");

  auto* cmd_init = app.add_subcommand(
      "init", "generate keys and certificates, build the genesis block, and "
              "register the chain");

  auto* cmd_enroll = app.add_subcommand(
      "enroll", "grant a configured institution submit access (a permission "
                "record and certificate announcement land on-chain)");
  std::string enroll_id;
  cmd_enroll->add_option("institution", enroll_id, "institution id")
      ->required();

  auto* cmd_revoke = app.add_subcommand(
      "revoke", "revoke a configured institution's submit access");
  std::string revoke_id;
  cmd_revoke->add_option("institution", revoke_id, "institution id")
      ->required();

  auto* cmd_pull = app.add_subcommand(
      "pull", "fetch signed transactions from every configured institution "
              "feed, co-sign as the customer, and submit them");
  std::string pull_since;
  std::optional<uint64_t> pull_count;
  cmd_pull->add_option("--since", pull_since,
                       "resume point (epoch seconds or YYYY-MM-DD); default "
                       "is the stored per-institution cursor");
  cmd_pull->add_option("--count", pull_count,
                       "transactions per institution (default from config)");

  auto* cmd_flush =
      app.add_subcommand("flush", "seal all queued entries into blocks");

  auto* cmd_verify = app.add_subcommand(
      "verify", "re-verify every block, link, and signature; exit 3 when "
                "tampering is detected");

  auto* cmd_query = app.add_subcommand(
      "query", "list transactions matching a filter (CSV or JSON lines)");
  std::string q_from, q_to, q_institution, q_contains;
  std::optional<int64_t> q_min, q_max;
  std::string q_format = "csv";
  std::optional<std::string> q_out;
  cmd_query->add_option("--from", q_from,
                        "earliest occurred_at (epoch seconds or YYYY-MM-DD)");
  cmd_query->add_option("--to", q_to, "latest occurred_at (inclusive)");
  cmd_query->add_option("--institution", q_institution,
                        "institution id from config, or a hex fingerprint");
  cmd_query->add_option("--min", q_min, "minimum amount in minor units");
  cmd_query->add_option("--max", q_max, "maximum amount in minor units");
  cmd_query->add_option("--contains", q_contains,
                        "substring of the description");
  cmd_query->add_option("--format", q_format, "csv or json-lines")
      ->capture_default_str();
  cmd_query->add_option("--out", q_out, "write to file instead of stdout");

  auto* cmd_report = app.add_subcommand(
      "report", "aggregate totals, buckets, and running balances");
  std::string r_bucket = "monthly";
  std::string r_format = "csv";
  std::optional<std::string> r_out;
  cmd_report->add_option("--bucket", r_bucket, "daily or monthly")
      ->capture_default_str();
  cmd_report->add_option("--format", r_format, "csv or json-lines")
      ->capture_default_str();
  cmd_report->add_option("--out", r_out, "write to file instead of stdout");

  auto* cmd_migrate = app.add_subcommand(
      "migrate", "move the chain to a new storage backend and switch over");
  std::string migrate_descriptor;
  cmd_migrate
      ->add_option("backend", migrate_descriptor,
                   "destination descriptor, e.g. mem: or file:chain2")
      ->required();

  auto* cmd_demo = app.add_subcommand(
      "demo", "scripted end-to-end run: init, enroll all institutions, pull, "
              "flush, verify, report");
  bool demo_tamper = false;
  cmd_demo->add_flag("--tamper", demo_tamper,
                     "flip one stored byte before verification to show "
                     "detection (exits 1 if tampering goes undetected)");

  auto* cmd_serve = app.add_subcommand(
      "serve", "host gateway, identity, block creation, reporting, and feed "
               "endpoints over HTTP until interrupted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // exit 2 on usage errors
  }

  try {
    if (*cmd_init) {
      if (!std::filesystem::exists(config_path))
        Config::write_starter(config_path, random_seed_hex());
      cli::run_init(Config::load(config_path), std::cout);
      return 0;
    }

    Config cfg = Config::load(config_path);

    if (serve_flag || *cmd_serve) {
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      return cli::run_serve(cfg, std::cout, [] { return g_stop == 0; });
    }

    if (*cmd_demo) {
      std::signal(SIGINT, handle_signal);
      return cli::run_demo(cfg, {demo_tamper}, std::cout);
    }

    cli::Session session(cfg);
    if (*cmd_enroll) return cli::run_enroll(session, enroll_id, std::cout);
    if (*cmd_revoke) return cli::run_revoke(session, revoke_id, std::cout);
    if (*cmd_pull) {
      std::optional<UnixSeconds> since;
      if (!pull_since.empty()) since = parse_time(pull_since);
      cli::run_pull(session, since, pull_count, std::cout);
      return 0;
    }
    if (*cmd_flush)
      return cli::run_flush(session, std::cout, /*quiet_empty=*/false);
    if (*cmd_verify) return cli::run_verify(session, std::cout);
    if (*cmd_query) {
      report::QueryFilter filter;
      if (!q_from.empty()) filter.from = parse_time(q_from);
      if (!q_to.empty()) filter.to = parse_time(q_to);
      if (!q_institution.empty()) {
        if (session.config().institutions.contains(q_institution))
          filter.institution =
              fingerprint(session.keys().load_cert("feed-" + q_institution));
        else
          filter.institution = Digest::from_hex(q_institution);
      }
      filter.min_amount = q_min;
      filter.max_amount = q_max;
      filter.description_contains = q_contains;
      std::string data = session.export_rows(
          filter, report::export_format_from_string(q_format),
          session.clock().next());
      session.clock().save();
      cli::write_output(data, q_out, session.config(), std::cout);
      return 0;
    }
    if (*cmd_report) {
      report::Bucketing bucket;
      if (r_bucket == "daily") bucket = report::Bucketing::daily;
      else if (r_bucket == "monthly") bucket = report::Bucketing::monthly;
      else throw Error(errc::kConfigError, "bucket must be daily or monthly");
      std::string data = session.export_summary(
          bucket, report::export_format_from_string(r_format),
          session.clock().next());
      session.clock().save();
      cli::write_output(data, r_out, session.config(), std::cout);
      return 0;
    }
    if (*cmd_migrate) {
      // A memory backend lives only as long as its process: from a one-shot
      // CLI that would strand the chain the moment we exit.
      if (cli::detail::is_inproc(session.config().bcms_endpoint) &&
          migrate_descriptor.rfind("mem", 0) == 0)
        throw Error(errc::kConfigError,
                    "mem: would not outlive this process; use file:<path> "
                    "or point bcms_endpoint at a serve instance");
      store::MigrationReport report =
          session.gateway().switch_backend(session.chain(),
                                           migrate_descriptor);
      std::cout << "moved " << report.blocks_moved << " blocks to "
                << migrate_descriptor << "\n";
      std::cout << "head " << report.head_digest.hex() << "\n";
      return 0;
    }

    std::cerr << "error[Usage]: no command given (try --help)\n";
    return 2;
  } catch (const perch::Error& e) {
    std::cerr << "error[" << e.code() << "]: " << e.message();
    if (!e.detail().empty()) std::cerr << " (" << e.detail() << ")";
    std::cerr << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error[Internal]: " << e.what() << "\n";
    return 1;
  }
}
