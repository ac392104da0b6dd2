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

#include <gtest/gtest.h>

#include "perch/http_client.hpp"
#include "perch/http_service.hpp"
#include "test_support.hpp"

namespace perch {
namespace {

using httpapi::ServiceServer;
using testing::Institution;
using testing::Stack;
using testing::kT0;

nlohmann::json cli_get(const std::string& endpoint, const std::string& path) {
  httplib::Client cli(endpoint);
  auto res = cli.Get(path);
  EXPECT_TRUE(res && res->status == 200) << path;
  return nlohmann::json::parse(res->body);
}

// All four services plus a feed, mounted on one listener.
struct HttpWorld {
  Stack stack;
  report::Reporter reporter{stack.gateway, stack.w.reporting_fp()};
  feed::FeedDirectory feeds;
  ServiceServer server;
  std::string endpoint;

  HttpWorld() {
    feed::InstitutionProfile p;
    p.id = "bank-a";
    p.seed = 1001;
    p.kind = feed::Kind::bank;
    p.keys = testing::seeded_keys("feed-bank-a");
    p.cert = stack.w.issue_institution("bank-a", p.keys.pub);
    p.amounts = feed::default_amounts(p.kind);
    p.base_epoch = kT0;
    feeds.add(p);

    httpapi::mount_gateway(server.server(), stack.gateway);
    httpapi::mount_identity(server.server(), stack.w.identity, stack.gateway,
                            stack.builder);
    httpapi::mount_builder(server.server(), stack.builder);
    httpapi::mount_reporting(server.server(), reporter);
    httpapi::mount_feed(server.server(), feeds);
    int port = server.start_any("127.0.0.1");
    endpoint = "http://127.0.0.1:" + std::to_string(port);
  }
};

TEST(Http, FullLifecycleThroughClients) {
  HttpWorld w;
  httpapi::GatewayClient gateway(w.endpoint);
  httpapi::IdentityClient identity(w.endpoint);
  httpapi::BuilderClient builder(w.endpoint);
  httpapi::ReportingClient reporting(w.endpoint);
  httpapi::FeedClient feed(w.endpoint);

  ChainId chain = w.stack.chain;
  UnixSeconds now = kT0 + 1000;

  // enroll the feed institution over HTTP
  auto items = feed.fetch("bank-a", 0, 4);
  ASSERT_EQ(items.size(), 4u);
  const Certificate* cert = nullptr;
  Certificate issued = identity.issue_institution_certificate(
      "unused", testing::seeded_keys("unused").pub, "vault:x", now, 86400);
  EXPECT_EQ(issued.role, Role::institution);
  cert = w.feeds.find("bank-a") ? &w.feeds.find("bank-a")->cert : nullptr;
  ASSERT_NE(cert, nullptr);
  identity.grant(chain, *cert, PermissionScope::submit_transactions, ++now);
  builder.flush(chain, ++now);

  // submit the pulled transactions through the gateway endpoint
  for (const auto& item : items) {
    Bytes tx_bytes = encode(item.tx);
    Signature customer_sig = sign(w.stack.w.customer_keys.secret, tx_bytes);
    SubmitReceipt r = gateway.submit_transaction(
        chain, item.tx, item.institution_sig, customer_sig, ++now);
    EXPECT_TRUE(r.accepted);
  }
  // one more straight to the builder endpoint
  auto extra = feed.fetch("bank-a", items.back().tx.occurred_at, 1);
  ASSERT_EQ(extra.size(), 1u);
  Bytes extra_bytes = encode(extra[0].tx);
  SubmitReceipt direct = builder.submit(
      chain, extra[0].tx, extra[0].institution_sig,
      sign(w.stack.w.customer_keys.secret, extra_bytes), ++now);
  EXPECT_TRUE(direct.accepted);
  EXPECT_EQ(direct.queue_position, 5u);

  QueueStatus q = builder.queue_status(chain);
  EXPECT_EQ(q.depth, 5u);
  FlushOutcome out = builder.flush(chain, ++now);
  ASSERT_EQ(out.blocks.size(), 1u);
  EXPECT_EQ(out.blocks[0].entry_count, 5u);

  // reads through the gateway client are byte-faithful
  BlockHeader head = gateway.head(chain);
  EXPECT_EQ(head.height, out.blocks[0].height);
  Block sealed = gateway.read_block(chain, head.height);
  EXPECT_EQ(header_digest(sealed.header), out.blocks[0].header_digest);
  EXPECT_EQ(gateway.chain_length(chain), head.height + 1);

  // reporting over HTTP
  report::IntegrityReport ir = reporting.verify_chain(chain, ++now);
  EXPECT_TRUE(ir.ok);
  EXPECT_EQ(ir.chain_length, head.height + 1);
  auto rows = reporting.query(chain, report::QueryFilter{});
  EXPECT_EQ(rows.size(), 5u);
  std::string csv =
      reporting.export_rows(chain, report::QueryFilter{},
                            report::ExportFormat::csv);
  EXPECT_EQ(static_cast<size_t>(std::count(csv.begin(), csv.end(), '\n')),
            rows.size() + 1);
  std::string summary_csv = reporting.export_summary(
      chain, report::Bucketing::monthly, report::ExportFormat::csv);
  EXPECT_NE(summary_csv.find("total,total,USD"), std::string::npos)
      << summary_csv;

  // permission set over HTTP reflects the grant
  auto perms_res = cli_get(w.endpoint, "/chains/" + chain.hex() +
                                           "/permissions");
  ASSERT_EQ(perms_res["height"].get<uint64_t>(),
            w.stack.gateway.head(chain).height);
  bool grant_listed = false;
  for (const auto& p : perms_res["permissions"])
    if (p["fingerprint"] == fingerprint(*cert).hex())
      for (const auto& scope : p["scopes"])
        grant_listed |= scope == "submit-transactions";
  EXPECT_TRUE(grant_listed) << perms_res.dump();

  // revocation over HTTP
  auto [record, flagged] = identity.revoke(
      chain, fingerprint(*cert), PermissionScope::submit_transactions, ++now);
  EXPECT_FALSE(flagged);
  builder.flush(chain, ++now);
  auto next = feed.fetch("bank-a", extra[0].tx.occurred_at, 1);
  ASSERT_EQ(next.size(), 1u);
  Bytes tx_bytes = encode(next[0].tx);
  try {
    gateway.submit_transaction(
        chain, next[0].tx, next[0].institution_sig,
        sign(w.stack.w.customer_keys.secret, tx_bytes), ++now);
    FAIL() << "expected NotPermitted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::kNotPermitted);
  }
}

TEST(Http, ErrorBodiesCarryExactCodes) {
  HttpWorld w;
  httplib::Client cli(w.endpoint);

  // unknown chain -> 404 UnknownChain
  std::string missing(64, '0');
  auto res = cli.Get("/chains/" + missing + "/head");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  auto body = nlohmann::json::parse(res->body);
  EXPECT_EQ(body["code"], "UnknownChain");
  EXPECT_TRUE(body.contains("message"));
  EXPECT_TRUE(body.contains("detail"));

  // malformed JSON -> 400 DecodeError
  res = cli.Post("/chains", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(nlohmann::json::parse(res->body)["code"], "DecodeError");

  // read past the end -> 404 OutOfRange
  res = cli.Get("/chains/" + w.stack.chain.hex() + "/blocks/99");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  EXPECT_EQ(nlohmann::json::parse(res->body)["code"], "OutOfRange");

  // append not presented by the registered BCS -> 403 NotAuthorized
  Block genesis = w.stack.gateway.read_block(w.stack.chain, 0);
  nlohmann::json append = {
      {"block", base64_encode(encode(genesis))},
      {"presenter", w.stack.w.reporting_fp().hex()}};
  res = cli.Post("/chains/" + w.stack.chain.hex() + "/blocks", append.dump(),
                 "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 403);
  EXPECT_EQ(nlohmann::json::parse(res->body)["code"], "NotAuthorized");

  // empty flush -> 400 EmptyQueue
  res = cli.Post("/queues/" + w.stack.chain.hex() + "/flush", "{}",
                 "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(nlohmann::json::parse(res->body)["code"], "EmptyQueue");
}

TEST(Http, FeedEndpointIsIdempotent) {
  HttpWorld w;
  httplib::Client cli(w.endpoint);
  std::string url = "/institutions/bank-a/transactions?since=0&limit=5";
  auto first = cli.Get(url);
  auto second = cli.Get(url);
  ASSERT_TRUE(first);
  ASSERT_TRUE(second);
  EXPECT_EQ(first->status, 200);
  EXPECT_EQ(first->body, second->body);
  auto body = nlohmann::json::parse(first->body);
  EXPECT_EQ(body["transactions"].size(), 5u);
}

TEST(Http, BindFailureSurfaces) {
  httpapi::ServiceServer server;
  try {
    server.start("256.256.256.256", 80);  // not a bindable address
    FAIL() << "expected BindFailure";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::kBindFailure);
  }
}

TEST(Http, MalformedRequestsNeverTouchTheChain) {
  HttpWorld w;
  httplib::Client cli(w.endpoint);
  Digest head_before = header_digest(w.stack.gateway.head(w.stack.chain));

  std::string chain_hex = w.stack.chain.hex();
  const char* bad_requests[][2] = {
      {"POST", "/chains"},
      {"POST", "/chains/zzzz/tx"},
      {"GET", "/chains/deadbeef/head"},
      {"GET", "/chains/../etc/passwd"},
      {"POST", "/queues/0000/flush"},
      {"GET", "/nothing/here"},
  };
  for (const auto& [method, path] : bad_requests) {
    auto res = std::string(method) == "GET"
                   ? cli.Get(path)
                   : cli.Post(path, "garbage", "text/plain");
    ASSERT_TRUE(res) << path;
    EXPECT_GE(res->status, 400) << path;
  }
  // malformed but routable bodies
  std::vector<std::string> bodies = {"", "{}", "[1,2,3]",
                                     "{\"tx\":\"!!notbase64!!\"}",
                                     std::string(1024, 'A')};
  for (const std::string& body : bodies) {
    auto res = cli.Post("/chains/" + chain_hex + "/tx", body,
                        "application/json");
    ASSERT_TRUE(res);
    EXPECT_GE(res->status, 400);
  }
  EXPECT_EQ(header_digest(w.stack.gateway.head(w.stack.chain)), head_before);
}

}  // namespace
}  // namespace perch
