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

#ifndef PERCH_GATEWAY_HPP_
#define PERCH_GATEWAY_HPP_

#include <fstream>

#include "perch/api.hpp"

namespace perch::bcms {

// The management gateway: the only path to a customer's chain. It owns the
// registry of chains, routes reads and appends to the configured storage
// backend, and forwards incoming transactions to the block creation service.
// Appends are serialized per chain; reads take a backend snapshot and run
// lock-free against it. All state is reconstructible from the registry
// journal plus the backends themselves.
class Gateway final : public GatewayApi {
 public:
  // `state_dir` hosts the registry journal and anchors relative file backend
  // descriptors. An empty path keeps the registry in memory only.
  explicit Gateway(std::filesystem::path state_dir = {})
      : state_dir_(std::move(state_dir)) {
    if (!state_dir_.empty()) {
      std::filesystem::create_directories(state_dir_);
      replay_journal();
    }
  }

  void set_builder(BuilderApi* builder) { builder_ = builder; }

  ChainId register_chain(const ChainRegistration& reg,
                         const Block& genesis) override {
    VerifyResult r = verify_block(nullptr, genesis);
    if (!r.ok())
      throw Error(errc::kInvalidGenesis, r.detail.empty() ? r.reason()
                                                          : r.detail);
    Digest customer_fp =
        fingerprint(std::get<Certificate>(genesis.entries[0]));
    if (customer_fp != reg.customer_fingerprint)
      throw Error(errc::kInvalidGenesis,
                  "registration fingerprint does not match genesis");

    auto backend = store::open_backend(reg.backend, state_dir_);
    if (backend->length() != 0)
      throw Error(errc::kAlreadyRegistered, "backend already holds a chain",
                  reg.backend);

    auto state = std::make_shared<ChainState>();
    state->registration = reg;
    state->backend = backend;
    {
      std::lock_guard lock(registry_mu_);
      if (chains_.contains(reg.customer_fingerprint))
        throw Error(errc::kAlreadyRegistered,
                    "chain already registered for customer",
                    reg.customer_fingerprint.hex());
      backend->append(genesis);
      chains_.emplace(reg.customer_fingerprint, state);
      journal_append(reg);
    }
    return reg.customer_fingerprint;
  }

  SubmitReceipt submit_transaction(const ChainId& chain,
                                   const FinancialTransaction& tx,
                                   const Signature& institution_sig,
                                   const Signature& customer_sig,
                                   UnixSeconds now) override {
    chain_state(chain);  // UnknownChain check before forwarding
    if (builder_ == nullptr)
      throw Error(errc::kTransportFailure, "no block creation service wired");
    return builder_->submit(chain, tx, institution_sig, customer_sig, now);
  }

  uint64_t append_block(const ChainId& chain, const Block& block,
                        const Digest& presenter) override {
    auto state = chain_state(chain);
    if (presenter != state->registration.authorized_bcs_fingerprint)
      throw Error(errc::kNotAuthorized,
                  "presenter is not the registered block creation service",
                  presenter.hex());
    std::lock_guard write(state->write_mu);
    return state->snapshot()->append(block);
  }

  Block read_block(const ChainId& chain, uint64_t height) override {
    auto backend = chain_state(chain)->snapshot();
    std::optional<Block> b = backend->get(height);
    if (!b)
      throw Error(errc::kOutOfRange,
                  "height " + std::to_string(height) + " not in chain of " +
                      std::to_string(backend->length()) + " blocks");
    return *b;
  }

  Bytes read_block_bytes(const ChainId& chain, uint64_t height) {
    auto backend = chain_state(chain)->snapshot();
    std::optional<Bytes> b = backend->get_bytes(height);
    if (!b)
      throw Error(errc::kOutOfRange,
                  "height " + std::to_string(height) + " not in chain of " +
                      std::to_string(backend->length()) + " blocks");
    return *b;
  }

  BlockHeader head(const ChainId& chain) override {
    auto backend = chain_state(chain)->snapshot();
    std::optional<BlockHeader> h = backend->head();
    if (!h) throw Error(errc::kOutOfRange, "chain is empty");
    return *h;
  }

  uint64_t chain_length(const ChainId& chain) override {
    return chain_state(chain)->snapshot()->length();
  }

  store::MigrationReport switch_backend(
      const ChainId& chain, const std::string& descriptor) override {
    auto state = chain_state(chain);
    std::lock_guard write(state->write_mu);  // serialize with appends
    auto src = state->snapshot();
    auto dst = store::open_backend(descriptor, state_dir_);
    store::MigrationReport report = store::migrate(*src, *dst);
    ChainRegistration updated = state->registration;
    updated.backend = descriptor;
    {
      std::lock_guard lock(registry_mu_);
      state->registration = updated;
      std::lock_guard backend_lock(state->backend_mu);
      state->backend = dst;
      journal_append(updated);
    }
    return report;
  }

  ChainRegistration registration(const ChainId& chain) {
    auto state = chain_state(chain);
    std::lock_guard lock(registry_mu_);
    return state->registration;
  }

  std::vector<ChainId> chains() {
    std::lock_guard lock(registry_mu_);
    std::vector<ChainId> out;
    for (const auto& [id, _] : chains_) out.push_back(id);
    return out;
  }

 private:
  struct ChainState {
    ChainRegistration registration;
    std::mutex write_mu;    // one writer per chain
    std::mutex backend_mu;  // guards the backend pointer swap
    std::shared_ptr<store::StorageBackend> backend;

    std::shared_ptr<store::StorageBackend> snapshot() {
      std::lock_guard lock(backend_mu);
      return backend;
    }
  };

  std::shared_ptr<ChainState> chain_state(const ChainId& chain) {
    std::lock_guard lock(registry_mu_);
    auto it = chains_.find(chain);
    if (it == chains_.end())
      throw Error(errc::kUnknownChain, "no chain registered", chain.hex());
    return it->second;
  }

  std::filesystem::path journal_path() const {
    return state_dir_ / "registry.jnl";
  }

  // The registry is itself an append-only, auditable log: one base64
  // canonical ChainRegistration per line, last line per customer wins.
  void journal_append(const ChainRegistration& reg) {
    if (state_dir_.empty()) return;
    std::ofstream out(journal_path(), std::ios::app);
    if (!out)
      throw Error(errc::kIoFailure, "cannot write registry journal");
    out << base64_encode(encode(reg)) << "\n";
    if (!out.good())
      throw Error(errc::kIoFailure, "cannot write registry journal");
  }

  void replay_journal() {
    std::ifstream in(journal_path());
    if (!in) return;  // fresh gateway
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      Bytes raw;
      if (!base64_decode(line, raw))
        throw Error(errc::kCorruptLayout, "registry journal line unreadable",
                    std::to_string(lineno));
      auto reg = decode<ChainRegistration>(raw);
      auto it = chains_.find(reg.customer_fingerprint);
      if (it == chains_.end()) {
        auto state = std::make_shared<ChainState>();
        state->registration = reg;
        state->backend = store::open_backend(reg.backend, state_dir_);
        chains_.emplace(reg.customer_fingerprint, state);
      } else {
        it->second->registration = reg;
        it->second->backend = store::open_backend(reg.backend, state_dir_);
      }
    }
  }

  std::filesystem::path state_dir_;
  std::mutex registry_mu_;
  std::map<Digest, std::shared_ptr<ChainState>> chains_;
  BuilderApi* builder_ = nullptr;
};

}  // namespace perch::bcms

#endif  // PERCH_GATEWAY_HPP_
