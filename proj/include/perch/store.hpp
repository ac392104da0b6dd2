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

#ifndef PERCH_STORE_HPP_
#define PERCH_STORE_HPP_

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include "perch/block.hpp"

namespace perch::store {

namespace fs = std::filesystem;

// Contract every block store satisfies. Appends are verified at this layer
// regardless of what callers checked: a block lands only when its height is
// the current length and it verifies against the head (genesis rule for an
// empty store). Reads return the exact bytes that were appended. Stores are
// safe for concurrent reads while one writer appends.
class StorageBackend {
 public:
  virtual ~StorageBackend() = default;

  // Returns the new length. Throws HeightGap or LinkMismatch; the store is
  // unchanged on failure.
  uint64_t append(const Block& block) {
    if (block.header.height != length())
      throw Error(errc::kHeightGap,
                  "expected height " + std::to_string(length()),
                  "got " + std::to_string(block.header.height));
    std::optional<BlockHeader> prev = head();
    VerifyResult r =
        verify_block(prev ? &*prev : nullptr, block, /*certs=*/nullptr);
    if (!r.ok())
      throw Error(errc::kLinkMismatch,
                  std::string("block does not verify against head: ") +
                      r.reason(),
                  r.detail);
    return do_append(encode(block), block);
  }

  virtual std::optional<Block> get(uint64_t height) const = 0;
  virtual std::optional<Bytes> get_bytes(uint64_t height) const = 0;
  virtual std::optional<BlockHeader> head() const = 0;
  virtual uint64_t length() const = 0;
  virtual std::string descriptor() const = 0;

 protected:
  virtual uint64_t do_append(const Bytes& encoded, const Block& block) = 0;
};

class MemoryBackend final : public StorageBackend {
 public:
  std::optional<Block> get(uint64_t height) const override {
    std::shared_lock lock(mu_);
    if (height >= blocks_.size()) return std::nullopt;
    return decode<Block>(blocks_[height]);
  }

  std::optional<Bytes> get_bytes(uint64_t height) const override {
    std::shared_lock lock(mu_);
    if (height >= blocks_.size()) return std::nullopt;
    return blocks_[height];
  }

  std::optional<BlockHeader> head() const override {
    std::shared_lock lock(mu_);
    if (blocks_.empty()) return std::nullopt;
    return decode<Block>(blocks_.back()).header;
  }

  uint64_t length() const override {
    std::shared_lock lock(mu_);
    return blocks_.size();
  }

  std::string descriptor() const override { return "mem:"; }

 protected:
  uint64_t do_append(const Bytes& encoded, const Block&) override {
    std::unique_lock lock(mu_);
    blocks_.push_back(encoded);
    return blocks_.size();
  }

 private:
  mutable std::shared_mutex mu_;
  std::vector<Bytes> blocks_;
};

// On-disk layout:
//   blocks/%08d.blk   one canonically encoded block per file, contiguous
//   HEAD              8-byte big-endian committed length
//   chain.meta        customer fingerprint + UAS fingerprint (64 bytes)
// A block file is written and renamed into place before HEAD moves, so HEAD
// is the commit point; an orphan next-height file left by a crash is removed
// on open.
class FileBackend final : public StorageBackend {
 public:
  explicit FileBackend(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_ / "blocks", ec);
    if (ec)
      throw Error(errc::kIoFailure, "cannot create store directory",
                  root_.string());
    recover_and_validate();
  }

  std::optional<Block> get(uint64_t height) const override {
    auto raw = get_bytes(height);
    if (!raw) return std::nullopt;
    return decode<Block>(*raw);
  }

  std::optional<Bytes> get_bytes(uint64_t height) const override {
    std::shared_lock lock(mu_);
    if (height >= length_) return std::nullopt;
    Bytes raw;
    if (!read_file(block_path(height), raw))
      throw Error(errc::kIoFailure, "cannot read block file",
                  block_path(height).string());
    return raw;
  }

  std::optional<BlockHeader> head() const override {
    std::shared_lock lock(mu_);
    if (length_ == 0) return std::nullopt;
    Bytes raw;
    if (!read_file(block_path(length_ - 1), raw))
      throw Error(errc::kIoFailure, "cannot read head block");
    return decode<Block>(raw).header;
  }

  uint64_t length() const override {
    std::shared_lock lock(mu_);
    return length_;
  }

  std::string descriptor() const override {
    return "file:" + root_.string();
  }

 protected:
  uint64_t do_append(const Bytes& encoded, const Block& block) override {
    std::unique_lock lock(mu_);
    if (!write_file_atomic(block_path(length_), encoded))
      throw Error(errc::kIoFailure, "cannot write block file");
    if (length_ == 0) write_meta(block);
    write_head(length_ + 1);
    ++length_;
    return length_;
  }

 private:
  void write_head(uint64_t n) {
    Writer w;
    w.u64(n);
    if (!write_file_atomic(root_ / "HEAD", w.bytes()))
      throw Error(errc::kIoFailure, "cannot write HEAD");
  }

  void write_meta(const Block& genesis) {
    if (genesis.entries.size() < 2) return;
    const auto* customer = std::get_if<Certificate>(&genesis.entries[0]);
    const auto* uas = std::get_if<Certificate>(&genesis.entries[1]);
    if (customer == nullptr || uas == nullptr) return;
    Writer w;
    write(w, fingerprint(*customer));
    write(w, fingerprint(*uas));
    if (!write_file_atomic(root_ / "chain.meta", w.bytes()))
      throw Error(errc::kIoFailure, "cannot write chain.meta");
  }

  fs::path block_path(uint64_t height) const {
    char name[16];
    std::snprintf(name, sizeof(name), "%08" PRIu64 ".blk", height);
    return root_ / "blocks" / name;
  }

  void recover_and_validate() {
    // Drop temp files from interrupted writes.
    for (const auto& ent : fs::directory_iterator(root_ / "blocks")) {
      if (ent.path().extension() == ".tmp") fs::remove(ent.path());
    }

    uint64_t head_count = 0;
    Bytes head_raw;
    if (read_file(root_ / "HEAD", head_raw)) {
      if (head_raw.size() != 8)
        throw Error(errc::kCorruptLayout, "HEAD file malformed");
      Reader r(head_raw);
      head_count = r.u64();
    } else {
      write_head(0);
    }

    uint64_t files = 0;
    while (fs::exists(block_path(files))) ++files;
    uint64_t extras = 0;
    for (const auto& ent : fs::directory_iterator(root_ / "blocks"))
      if (ent.path().extension() == ".blk") ++extras;
    if (extras != files)
      throw Error(errc::kCorruptLayout, "gap in block files",
                  "contiguous=" + std::to_string(files) +
                      " present=" + std::to_string(extras));

    if (files == head_count + 1) {
      // Uncommitted block from a crash between the block write and the HEAD
      // update; HEAD is authoritative.
      fs::remove(block_path(head_count));
      files = head_count;
    }
    if (files != head_count)
      throw Error(errc::kCorruptLayout, "HEAD does not match block files",
                  "HEAD=" + std::to_string(head_count) +
                      " files=" + std::to_string(files));
    if (files > 0 && !fs::exists(root_ / "chain.meta"))
      throw Error(errc::kCorruptLayout, "chain.meta missing");
    length_ = files;
  }

  fs::path root_;
  mutable std::shared_mutex mu_;
  uint64_t length_ = 0;
};

// Descriptor strings: "mem:" or "file:<path>". Relative file paths resolve
// against `base` when given.
inline std::shared_ptr<StorageBackend> open_backend(
    const std::string& descriptor, const fs::path& base = {}) {
  if (descriptor == "mem:" || descriptor == "mem")
    return std::make_shared<MemoryBackend>();
  if (descriptor.rfind("file:", 0) == 0) {
    fs::path p = descriptor.substr(5);
    if (p.empty())
      throw Error(errc::kIoFailure, "file backend needs a path", descriptor);
    if (p.is_relative() && !base.empty()) p = base / p;
    return std::make_shared<FileBackend>(p);
  }
  throw Error(errc::kIoFailure, "unknown backend descriptor", descriptor);
}

struct MigrationReport {
  uint64_t blocks_moved = 0;
  Digest head_digest;  // zero when the source was empty
};

// Copies a verified chain into an empty destination, byte for byte.
inline MigrationReport migrate(const StorageBackend& src,
                               StorageBackend& dst) {
  if (dst.length() != 0)
    throw Error(errc::kDestinationNotEmpty,
                "destination already holds " + std::to_string(dst.length()) +
                    " blocks");
  MigrationReport report;
  std::optional<BlockHeader> prev;
  for (uint64_t h = 0; h < src.length(); ++h) {
    std::optional<Bytes> raw = src.get_bytes(h);
    if (!raw)
      throw Error(errc::kSourceCorrupt, "missing block", std::to_string(h));
    Block block;
    try {
      block = decode<Block>(*raw);
    } catch (const Error& e) {
      throw Error(errc::kSourceCorrupt,
                  "undecodable block at height " + std::to_string(h),
                  e.message());
    }
    VerifyResult r = verify_block(prev ? &*prev : nullptr, block);
    if (!r.ok())
      throw Error(errc::kSourceCorrupt,
                  "verification failed at height " + std::to_string(h),
                  r.reason());
    dst.append(block);
    prev = block.header;
    ++report.blocks_moved;
  }
  if (prev) report.head_digest = header_digest(*prev);
  return report;
}

}  // namespace perch::store

#endif  // PERCH_STORE_HPP_
