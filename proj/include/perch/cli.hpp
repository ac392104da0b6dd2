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

// The perch command line: one binary that initializes a personal chain,
// enrolls institutions, pulls their feeds, flushes blocks, verifies, queries,
// reports, and migrates storage. Services run in-process by default; any of
// them can be pointed at an HTTP endpoint instead, and `serve` (or --serve)
// hosts them all.

#ifndef PERCH_CLI_HPP_
#define PERCH_CLI_HPP_

#include <csignal>
#include <iostream>

#include "perch/http_client.hpp"
#include "perch/http_service.hpp"

namespace perch::cli {

namespace fs = std::filesystem;

inline constexpr UnixSeconds kDefaultClockStart = 1704067200;  // 2024-01-01
inline constexpr UnixSeconds kDefaultValidity = 10LL * 365 * 86400;

struct InstitutionConfig {
  std::string id;
  feed::Kind kind = feed::Kind::bank;
  uint64_t seed = 0;
  uint32_t per_day = 8;
};

// Flat key = value file; '#' starts a comment. Institution lines look like
//   institution.bank-a = bank,1001,8        (kind, seed, transactions/day)
struct Config {
  fs::path config_path;
  fs::path base_dir;

  std::string state_dir = "state";
  std::string backend = "file:chain";
  std::string policy = "count:16,bytes:1048576";
  std::string clock = "logical";  // logical | wall
  UnixSeconds clock_start = kDefaultClockStart;
  UnixSeconds clock_tick = 60;
  std::string master_seed;  // empty: random keys at init
  std::string customer_name = "Customer";
  uint64_t pull_count = 8;
  bool queue_journal = true;
  UnixSeconds cert_validity = kDefaultValidity;
  std::string bcms_endpoint = "inproc";
  std::string uas_endpoint = "inproc";
  std::string bcs_endpoint = "inproc";
  std::string reporting_endpoint = "inproc";
  std::string feed_endpoint = "inproc";
  int serve_port = 9380;
  std::map<std::string, InstitutionConfig> institutions;

  fs::path state() const { return base_dir / state_dir; }

  static std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

  static Config load(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
      throw Error(errc::kConfigError, "cannot open config file",
                  path.string());
    Config cfg;
    cfg.config_path = path;
    cfg.base_dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string text = trim(line);
      if (text.empty() || text[0] == '#') continue;
      size_t eq = text.find('=');
      if (eq == std::string::npos)
        throw Error(errc::kConfigError, "expected key = value",
                    path.string() + ":" + std::to_string(lineno));
      std::string key = trim(text.substr(0, eq));
      std::string value = trim(text.substr(eq + 1));
      cfg.apply(key, value);
    }
    return cfg;
  }

  void apply(const std::string& key, const std::string& value) {
    if (key.rfind("institution.", 0) == 0) {
      InstitutionConfig inst;
      inst.id = key.substr(12);
      size_t c1 = value.find(',');
      size_t c2 = value.find(',', c1 + 1);
      if (c1 == std::string::npos || c2 == std::string::npos)
        throw Error(errc::kConfigError,
                    "institution needs kind,seed,per_day", key);
      inst.kind = feed::kind_from_string(trim(value.substr(0, c1)));
      inst.seed = std::stoull(trim(value.substr(c1 + 1, c2 - c1 - 1)));
      inst.per_day =
          static_cast<uint32_t>(std::stoul(trim(value.substr(c2 + 1))));
      institutions[inst.id] = inst;
      return;
    }
    if (key == "state_dir") state_dir = value;
    else if (key == "backend") backend = value;
    else if (key == "policy") policy = value;
    else if (key == "clock") clock = value;
    else if (key == "clock_start") clock_start = parse_time(value);
    else if (key == "clock_tick") clock_tick = std::stoll(value);
    else if (key == "master_seed") master_seed = value;
    else if (key == "customer_name") customer_name = value;
    else if (key == "pull_count") pull_count = std::stoull(value);
    else if (key == "queue_journal") queue_journal = (value == "on");
    else if (key == "cert_validity") cert_validity = std::stoll(value);
    else if (key == "bcms_endpoint") bcms_endpoint = value;
    else if (key == "uas_endpoint") uas_endpoint = value;
    else if (key == "bcs_endpoint") bcs_endpoint = value;
    else if (key == "reporting_endpoint") reporting_endpoint = value;
    else if (key == "feed_endpoint") feed_endpoint = value;
    else if (key == "serve_port") serve_port = std::stoi(value);
    else
      throw Error(errc::kConfigError, "unknown config key", key);
  }

  static void write_starter(const fs::path& path,
                            const std::string& seed_hint) {
    std::ofstream out(path);
    out << "# perch configuration\n"
        << "state_dir = state\n"
        << "backend = file:chain\n"
        << "policy = count:16,bytes:1048576\n"
        << "clock = logical\n"
        << "clock_start = " << kDefaultClockStart << "\n"
        << "clock_tick = 60\n"
        << "master_seed = " << seed_hint << "\n"
        << "customer_name = Customer\n"
        << "pull_count = 8\n"
        << "queue_journal = on\n"
        << "bcms_endpoint = inproc\n"
        << "uas_endpoint = inproc\n"
        << "bcs_endpoint = inproc\n"
        << "reporting_endpoint = inproc\n"
        << "feed_endpoint = inproc\n"
        << "serve_port = 9380\n"
        << "institution.bank-a = bank,1001,8\n"
        << "institution.card-b = credit-card,2002,12\n"
        << "institution.fund-c = investment,3003,4\n";
    if (!out.good())
      throw Error(errc::kIoFailure, "cannot write starter config",
                  path.string());
  }
};

// Logical clock persisted in the state directory: every call to next() is
// one tick, so a command sequence replays to identical timestamps. Wall mode
// reads the system clock instead.
class Clock {
 public:
  Clock(const Config& cfg)
      : wall_(cfg.clock == "wall"),
        tick_(cfg.clock_tick),
        path_(cfg.state() / "clock"),
        now_(cfg.clock_start) {
    Bytes raw;
    if (!wall_ && read_file(path_, raw))
      now_ = std::stoll(std::string(raw.begin(), raw.end()));
  }

  UnixSeconds next() {
    if (wall_) return static_cast<UnixSeconds>(::time(nullptr));
    now_ += tick_;
    return now_;
  }

  void save() const {
    if (wall_) return;
    std::string text = std::to_string(now_);
    write_file_atomic(path_, as_bytes(text));
  }

 private:
  bool wall_;
  UnixSeconds tick_;
  fs::path path_;
  UnixSeconds now_;
};

// Canonical-encoded key and certificate files under the state directory.
// Key files are chmod 0600; there is no passphrase layer at desk scale.
struct KeyStore {
  fs::path dir;

  fs::path key_path(const std::string& name) const {
    return dir / "keys" / (name + ".key");
  }
  fs::path cert_path(const std::string& name) const {
    return dir / "certs" / (name + ".cert");
  }

  void save_keys(const std::string& name, const KeyPair& kp) const {
    fs::create_directories(dir / "keys");
    if (!write_file_atomic(key_path(name), encode(kp)))
      throw Error(errc::kIoFailure, "cannot write key file", name);
    fs::permissions(key_path(name),
                    fs::perms::owner_read | fs::perms::owner_write,
                    fs::perm_options::replace);
  }

  KeyPair load_keys(const std::string& name) const {
    Bytes raw;
    if (!read_file(key_path(name), raw))
      throw Error(errc::kIoFailure, "missing key file; run init first",
                  name);
    return decode<KeyPair>(raw);
  }

  void save_cert(const std::string& name, const Certificate& cert) const {
    fs::create_directories(dir / "certs");
    if (!write_file_atomic(cert_path(name), encode(cert)))
      throw Error(errc::kIoFailure, "cannot write certificate file", name);
  }

  Certificate load_cert(const std::string& name) const {
    Bytes raw;
    if (!read_file(cert_path(name), raw))
      throw Error(errc::kIoFailure,
                  "missing certificate file; run init first", name);
    return decode<Certificate>(raw);
  }
};

namespace detail {

inline KeyPair derive_keys(const Config& cfg, const std::string& name) {
  if (cfg.master_seed.empty()) return generate_keypair();
  Digest seed =
      chain_digest(as_bytes("perch-key:" + cfg.master_seed + ":" + name));
  return keypair_from_seed(seed.value);
}

inline bool is_inproc(const std::string& endpoint) {
  return endpoint == "inproc" || endpoint.empty();
}

}  // namespace detail

// Everything a command needs, assembled per the configured topology. Each
// service is either the in-process implementation over the state directory
// or an HTTP client; commands cannot tell the difference.
class Session {
 public:
  explicit Session(Config cfg, bool serve_all_local = false)
      : cfg_(std::move(cfg)), clock_(cfg_), keys_{cfg_.state()} {
    Bytes raw;
    if (!read_file(cfg_.state() / "chain.id", raw))
      throw Error(errc::kUnknownChain, "state not initialized; run init");
    chain_ = Digest::from_hex(std::string(raw.begin(), raw.end()));

    bool local_gw = serve_all_local || detail::is_inproc(cfg_.bcms_endpoint);
    bool local_bcs = serve_all_local || detail::is_inproc(cfg_.bcs_endpoint);
    bool local_uas = serve_all_local || detail::is_inproc(cfg_.uas_endpoint);
    bool local_rep =
        serve_all_local || detail::is_inproc(cfg_.reporting_endpoint);
    bool local_feed =
        serve_all_local || detail::is_inproc(cfg_.feed_endpoint);

    if (local_gw) local_gateway_ = std::make_unique<bcms::Gateway>(cfg_.state());
    else gateway_client_ =
        std::make_unique<httpapi::GatewayClient>(cfg_.bcms_endpoint);

    if (local_bcs) {
      bcs::BuilderOptions options;
      options.default_policy = bcs::FlushPolicy::parse(cfg_.policy);
      if (cfg_.queue_journal) options.journal_dir = cfg_.state() / "queue";
      local_builder_ = std::make_unique<bcs::Builder>(
          gateway(), keys_.load_keys("bcs"), keys_.load_cert("bcs"), options);
      if (local_gateway_) local_gateway_->set_builder(local_builder_.get());
    } else {
      builder_client_ =
          std::make_unique<httpapi::BuilderClient>(cfg_.bcs_endpoint);
    }

    if (local_uas)
      local_identity_ = std::make_unique<uas::IdentityService>(
          keys_.load_keys("uas"), keys_.load_cert("uas"));
    else
      identity_client_ =
          std::make_unique<httpapi::IdentityClient>(cfg_.uas_endpoint);

    if (local_rep)
      local_reporter_ = std::make_unique<report::Reporter>(
          gateway(), fingerprint(keys_.load_cert("reporting")));
    else
      reporting_client_ =
          std::make_unique<httpapi::ReportingClient>(cfg_.reporting_endpoint);

    if (local_feed) {
      local_feeds_ = std::make_unique<feed::FeedDirectory>();
      for (const auto& [id, inst] : cfg_.institutions) {
        feed::InstitutionProfile p;
        p.id = id;
        p.seed = inst.seed;
        p.kind = inst.kind;
        p.per_day = inst.per_day;
        p.keys = keys_.load_keys("feed-" + id);
        p.cert = keys_.load_cert("feed-" + id);
        p.amounts = feed::default_amounts(inst.kind);
        p.base_epoch = cfg_.clock_start;
        local_feeds_->add(std::move(p));
      }
    } else {
      feed_client_ = std::make_unique<httpapi::FeedClient>(cfg_.feed_endpoint);
    }
  }

  const Config& config() const { return cfg_; }
  Clock& clock() { return clock_; }
  const KeyStore& keys() const { return keys_; }
  const ChainId& chain() const { return chain_; }

  GatewayApi& gateway() {
    return local_gateway_ ? static_cast<GatewayApi&>(*local_gateway_)
                          : *gateway_client_;
  }
  BuilderApi& builder() {
    return local_builder_ ? static_cast<BuilderApi&>(*local_builder_)
                          : *builder_client_;
  }
  FeedApi& feeds() {
    return local_feeds_ ? static_cast<FeedApi&>(*local_feeds_)
                        : *feed_client_;
  }

  bcms::Gateway* local_gateway() { return local_gateway_.get(); }
  bcs::Builder* local_builder() { return local_builder_.get(); }
  uas::IdentityService* local_identity() { return local_identity_.get(); }
  report::Reporter* local_reporter() { return local_reporter_.get(); }
  feed::FeedDirectory* local_feeds() { return local_feeds_.get(); }

  // --- identity operations, topology-blind --------------------------------

  void grant(const Certificate& cert, PermissionScope scope, UnixSeconds now) {
    if (local_identity_)
      local_identity_->grant(gateway(), builder(), chain_, cert, scope, now);
    else
      identity_client_->grant(chain_, cert, scope, now);
  }

  bool revoke(const Digest& subject, PermissionScope scope, UnixSeconds now) {
    if (local_identity_)
      return local_identity_
          ->revoke(gateway(), builder(), chain_, subject, scope, now)
          .flagged;
    return identity_client_->revoke(chain_, subject, scope, now).second;
  }

  // --- reporting operations -------------------------------------------------

  report::IntegrityReport verify(UnixSeconds now) {
    if (local_reporter_) return local_reporter_->verify_chain(chain_, now);
    return reporting_client_->verify_chain(chain_, now);
  }

  std::string export_rows(const report::QueryFilter& filter,
                          report::ExportFormat format, UnixSeconds now) {
    if (local_reporter_)
      return report::export_rows(local_reporter_->query(chain_, filter, now),
                                 format);
    return reporting_client_->export_rows(chain_, filter, format);
  }

  std::string export_summary(report::Bucketing bucket,
                             report::ExportFormat format, UnixSeconds now) {
    if (local_reporter_)
      return report::export_summary(
          local_reporter_->summarize(chain_, bucket, now), format);
    return reporting_client_->export_summary(chain_, bucket, format);
  }

 private:
  Config cfg_;
  Clock clock_;
  KeyStore keys_;
  ChainId chain_;

  std::unique_ptr<bcms::Gateway> local_gateway_;
  std::unique_ptr<bcs::Builder> local_builder_;
  std::unique_ptr<uas::IdentityService> local_identity_;
  std::unique_ptr<report::Reporter> local_reporter_;
  std::unique_ptr<feed::FeedDirectory> local_feeds_;

  std::unique_ptr<httpapi::GatewayClient> gateway_client_;
  std::unique_ptr<httpapi::BuilderClient> builder_client_;
  std::unique_ptr<httpapi::IdentityClient> identity_client_;
  std::unique_ptr<httpapi::ReportingClient> reporting_client_;
  std::unique_ptr<httpapi::FeedClient> feed_client_;
};

// --- commands ----------------------------------------------------------

inline bool is_initialized(const Config& cfg) {
  return fs::exists(cfg.state() / "chain.id");
}

// Creates keys, certificates, the genesis block, and the chain registration.
// Always local: it bootstraps the state directory that any topology serves.
inline ChainId run_init(const Config& cfg, std::ostream& out) {
  if (is_initialized(cfg))
    throw Error(errc::kAlreadyRegistered, "state is already initialized",
                cfg.state().string());
  fs::create_directories(cfg.state());
  Clock clock(cfg);
  KeyStore keys{cfg.state()};

  KeyPair uas_keys = detail::derive_keys(cfg, "uas");
  KeyPair customer_keys = detail::derive_keys(cfg, "customer");
  KeyPair bcs_keys = detail::derive_keys(cfg, "bcs");
  KeyPair reporting_keys = detail::derive_keys(cfg, "reporting");
  keys.save_keys("uas", uas_keys);
  keys.save_keys("customer", customer_keys);
  keys.save_keys("bcs", bcs_keys);
  keys.save_keys("reporting", reporting_keys);

  UnixSeconds t0 = clock.next();
  uas::IdentityService identity =
      uas::IdentityService::create("UAS", uas_keys, t0, cfg.cert_validity);
  Certificate bcs_cert = identity.issue_certificate(
      "BCS", Role::bcs, bcs_keys.pub, {}, clock.next(),
      t0 + cfg.cert_validity);
  Certificate reporting_cert = identity.issue_certificate(
      "Reporting", Role::reporting, reporting_keys.pub, {}, clock.next(),
      t0 + cfg.cert_validity);
  keys.save_cert("uas", identity.certificate());
  keys.save_cert("bcs", bcs_cert);
  keys.save_cert("reporting", reporting_cert);

  for (const auto& [id, inst] : cfg.institutions) {
    KeyPair inst_keys = detail::derive_keys(cfg, "feed-" + id);
    keys.save_keys("feed-" + id, inst_keys);
    keys.save_cert("feed-" + id,
                   identity.issue_institution_certificate(
                       id, inst_keys.pub, "vault:" + id, clock.next(),
                       cfg.cert_validity));
  }

  auto [customer_cert, genesis] = identity.init_customer(
      cfg.customer_name, customer_keys, bcs_cert, clock.next(),
      cfg.cert_validity);
  keys.save_cert("customer", customer_cert);

  ChainRegistration reg;
  reg.customer_fingerprint = fingerprint(customer_cert);
  reg.backend = cfg.backend;
  reg.authorized_bcs_fingerprint = fingerprint(bcs_cert);
  reg.authorized_reporting_fingerprints = {fingerprint(reporting_cert)};

  bcms::Gateway gateway(cfg.state());
  ChainId chain = gateway.register_chain(reg, genesis);
  std::string hex = chain.hex();
  if (!write_file_atomic(cfg.state() / "chain.id", as_bytes(hex)))
    throw Error(errc::kIoFailure, "cannot write chain.id");
  clock.save();
  out << "initialized chain " << hex << "\n";
  return chain;
}

inline const InstitutionConfig& institution_or_throw(const Config& cfg,
                                                     const std::string& id) {
  auto it = cfg.institutions.find(id);
  if (it == cfg.institutions.end())
    throw Error(errc::kConfigError, "institution not in config", id);
  return it->second;
}

inline int run_enroll(Session& s, const std::string& id, std::ostream& out) {
  institution_or_throw(s.config(), id);
  Certificate cert = s.keys().load_cert("feed-" + id);
  s.grant(cert, PermissionScope::submit_transactions, s.clock().next());
  FlushOutcome flushed = s.builder().flush(s.chain(), s.clock().next());
  s.clock().save();
  out << "enrolled " << id << " (" << fingerprint(cert).hex() << ")\n";
  for (const auto& b : flushed.blocks)
    out << "sealed block " << b.height << " (" << b.entry_count
        << " entries)\n";
  return 0;
}

inline int run_revoke(Session& s, const std::string& id, std::ostream& out) {
  institution_or_throw(s.config(), id);
  Certificate cert = s.keys().load_cert("feed-" + id);
  bool flagged = s.revoke(fingerprint(cert),
                          PermissionScope::submit_transactions,
                          s.clock().next());
  try {
    s.builder().flush(s.chain(), s.clock().next());
  } catch (const Error& e) {
    if (e.code() != errc::kEmptyQueue) throw;
  }
  s.clock().save();
  out << "revoked " << id << (flagged ? " (was never announced)" : "")
      << "\n";
  return 0;
}

struct PullStats {
  uint64_t accepted = 0;
  uint64_t duplicates = 0;
  uint64_t rejected = 0;
};

inline PullStats run_pull(Session& s, std::optional<UnixSeconds> since_arg,
                          std::optional<uint64_t> count_arg,
                          std::ostream& out) {
  PullStats stats;
  KeyPair customer = s.keys().load_keys("customer");
  uint64_t count = count_arg.value_or(s.config().pull_count);
  for (const auto& [id, inst] : s.config().institutions) {
    fs::path cursor_path = s.config().state() / ("cursor." + id);
    UnixSeconds since = 0;
    if (since_arg) {
      since = *since_arg;
    } else {
      Bytes raw;
      if (read_file(cursor_path, raw))
        since = std::stoll(std::string(raw.begin(), raw.end()));
    }
    std::vector<FeedItem> items = s.feeds().fetch(id, since, count);
    UnixSeconds last = since;
    for (const FeedItem& item : items) {
      Bytes tx_bytes = encode(item.tx);
      Signature customer_sig = sign(customer.secret, tx_bytes);
      try {
        s.gateway().submit_transaction(s.chain(), item.tx,
                                       item.institution_sig, customer_sig,
                                       s.clock().next());
        ++stats.accepted;
      } catch (const Error& e) {
        if (e.code() == errc::kDuplicateExternalRef) {
          ++stats.duplicates;
        } else if (e.code() == errc::kNotPermitted) {
          ++stats.rejected;
        } else {
          throw;
        }
      }
      last = std::max(last, item.tx.occurred_at);
    }
    std::string text = std::to_string(last);
    write_file_atomic(cursor_path, as_bytes(text));
    out << "pulled " << items.size() << " from " << id << "\n";
  }
  s.clock().save();
  out << "accepted " << stats.accepted << ", duplicates " << stats.duplicates
      << ", rejected " << stats.rejected << "\n";
  return stats;
}

inline int run_flush(Session& s, std::ostream& out, bool quiet_empty) {
  try {
    FlushOutcome flushed = s.builder().flush(s.chain(), s.clock().next());
    for (const auto& b : flushed.blocks)
      out << "sealed block " << b.height << " (" << b.entry_count
          << " entries) " << b.header_digest.hex() << "\n";
    for (const auto& [fp, ref] : flushed.purged)
      out << "purged revoked transaction " << ref << " from " << fp.hex()
          << "\n";
  } catch (const Error& e) {
    if (e.code() != errc::kEmptyQueue || !quiet_empty) throw;
    out << "queue empty, nothing to flush\n";
  }
  s.clock().save();
  return 0;
}

inline int run_verify(Session& s, std::ostream& out) {
  report::IntegrityReport r = s.verify(s.clock().next());
  s.clock().save();
  out << "chain " << s.chain().hex() << "\n";
  out << "length " << r.chain_length << "\n";
  out << "head " << r.head_digest.hex() << "\n";
  if (r.ok) {
    out << "ok\n";
    return 0;
  }
  out << "TAMPERED at height " << *r.first_bad_height << " ("
      << r.reason.value_or("?") << ")\n";
  return 3;
}

inline void write_output(const std::string& data,
                         const std::optional<std::string>& out_path,
                         const Config& cfg, std::ostream& out) {
  if (!out_path) {
    out << data;
    return;
  }
  fs::path p = *out_path;
  if (p.is_relative()) p = cfg.base_dir / p;
  if (!write_file_atomic(p, as_bytes(data)))
    throw Error(errc::kIoFailure, "cannot write output file", p.string());
  out << "wrote " << p.string() << "\n";
}

// --- top-level entry ---------------------------------------------------

struct DemoOptions {
  bool tamper = false;
};

inline int run_demo(const Config& cfg, const DemoOptions& opts,
                    std::ostream& out) {
  if (!is_initialized(cfg)) run_init(cfg, out);
  Session s(cfg);
  for (const auto& [id, inst] : cfg.institutions) run_enroll(s, id, out);
  run_pull(s, std::nullopt, std::nullopt, out);
  run_flush(s, out, /*quiet_empty=*/true);

  if (opts.tamper) {
    // flip one byte in a stored block file so verification has something to
    // catch; only meaningful with a local file backend
    fs::path block2 = cfg.state() / "chain" / "blocks" / "00000002.blk";
    Bytes raw;
    if (!read_file(block2, raw))
      throw Error(errc::kIoFailure,
                  "demo --tamper needs the local file backend", block2);
    raw[raw.size() / 2] ^= 0x20;
    write_file_atomic(block2, raw);
    out << "tampered one byte in " << block2.string() << "\n";
  }

  int verify_rc = run_verify(s, out);
  if (opts.tamper) {
    if (verify_rc == 0) {
      out << "tampering was NOT detected\n";
      return 1;
    }
    out << "tampering detected as expected\n";
    return 0;
  }
  if (verify_rc != 0) return verify_rc;

  std::string csv = s.export_summary(report::Bucketing::monthly,
                                     report::ExportFormat::csv,
                                     s.clock().next());
  fs::path report_path = cfg.state() / "report.csv";
  if (!write_file_atomic(report_path, as_bytes(csv)))
    throw Error(errc::kIoFailure, "cannot write report");
  s.clock().save();
  out << "report " << report_path.string() << "\n";
  out << "head " << header_digest(s.gateway().head(s.chain())).hex() << "\n";
  return 0;
}

inline int run_serve(const Config& cfg, std::ostream& out,
                     const std::function<bool()>& keep_running) {
  if (!is_initialized(cfg)) run_init(cfg, out);
  Session s(cfg, /*serve_all_local=*/true);
  httpapi::ServiceServer server;
  httpapi::mount_gateway(server.server(), *s.local_gateway());
  httpapi::mount_identity(server.server(), *s.local_identity(),
                          s.gateway(), s.builder());
  httpapi::mount_builder(server.server(), *s.local_builder());
  httpapi::mount_reporting(server.server(), *s.local_reporter());
  httpapi::mount_feed(server.server(), *s.local_feeds());
  server.start("127.0.0.1", cfg.serve_port);
  out << "serving on http://127.0.0.1:" << cfg.serve_port << "\n";
  while (keep_running()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    if (auto* builder = s.local_builder())
      builder->tick(static_cast<UnixSeconds>(::time(nullptr)));
  }
  server.stop();
  s.clock().save();
  return 0;
}

}  // namespace perch::cli

#endif  // PERCH_CLI_HPP_
