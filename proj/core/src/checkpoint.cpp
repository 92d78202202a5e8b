// Copyright 2026 The CAMS Authors. All Rights Reserved.
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

#include "cams/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "cams/errors.hpp"

namespace cams {

namespace {

constexpr char kMagic[8] = {'C', 'A', 'M', 'S', 'C', 'K', 'P', 'T'};

std::uint64_t fnv_bytes(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
void put(std::string& out, const T& v) {
  const auto* p = reinterpret_cast<const char*>(&v);
  out.append(p, sizeof(T));
}

class Cursor {
 public:
  Cursor(const std::string& bytes, std::size_t end, std::string path)
      : bytes_(bytes), end_(end), path_(std::move(path)) {}

  template <typename T>
  T take() {
    T v;
    std::memcpy(&v, raw(sizeof(T)), sizeof(T));
    return v;
  }

  const char* raw(std::size_t n) {
    if (n > end_ - pos_) fail("truncated");
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  bool done() const { return pos_ == end_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("checkpoint " + path_ + ": " + what + " at byte " +
                     std::to_string(pos_));
  }

 private:
  const std::string& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
  std::string path_;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Verifies magic, trailer checksum and header fields; returns a cursor placed
// after the config hash together with that hash.
std::pair<Cursor, std::uint64_t> open_checked(const std::string& bytes,
                                              const std::filesystem::path& path) {
  const std::size_t min_size = sizeof(kMagic) + 4 + 8 + 4 + 8 + 8;
  if (bytes.size() < min_size) {
    throw ParseError("checkpoint " + path.string() + ": file too short (" +
                     std::to_string(bytes.size()) + " bytes)");
  }
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw ParseError("checkpoint " + path.string() + ": bad magic");
  }
  const std::size_t body = bytes.size() - sizeof(std::uint64_t);
  std::uint64_t stored = 0;
  std::memcpy(&stored, bytes.data() + body, sizeof stored);
  if (fnv_bytes(bytes.substr(0, body)) != stored) {
    throw ParseError("checkpoint " + path.string() + ": checksum mismatch");
  }
  Cursor cur(bytes, body, path.string());
  cur.raw(sizeof(kMagic));
  const auto version = cur.template take<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint " + path.string() + ": format version " +
                       std::to_string(version) + ", expected " +
                       std::to_string(kCheckpointVersion));
  }
  const auto hash = cur.template take<std::uint64_t>();
  return {cur, hash};
}

}  // namespace

void save_checkpoint(const CamsModel& model, std::uint64_t config_hash,
                     const std::filesystem::path& path) {
  std::string out(kMagic, sizeof(kMagic));
  put(out, kCheckpointVersion);
  put(out, config_hash);
  put(out, static_cast<std::uint32_t>(sizeof(Real)));
  const auto& params = model.parameters().all();
  put(out, static_cast<std::uint64_t>(params.size()));
  for (const auto& p : params) {
    put(out, static_cast<std::uint32_t>(p.name.size()));
    out += p.name;
    const auto& shape = p.tensor.shape();
    put(out, static_cast<std::uint32_t>(shape.size()));
    for (std::size_t d : shape) put(out, static_cast<std::uint64_t>(d));
    const auto values = p.tensor.data();
    out.append(reinterpret_cast<const char*>(values.data()), values.size_bytes());
  }
  put(out, fnv_bytes(out));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write checkpoint " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error("write failed for checkpoint " + path.string());
}

std::uint64_t checkpoint_config_hash(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  return open_checked(bytes, path).second;
}

void load_checkpoint(const std::filesystem::path& path, CamsModel& model,
                     std::uint64_t expected_hash) {
  const std::string bytes = read_file(path);
  auto [cur, hash] = open_checked(bytes, path);
  if (hash != expected_hash) {
    std::ostringstream msg;
    msg << "checkpoint " << path.string() << " was written for config hash "
        << std::hex << hash << " but the current config hashes to " << expected_hash;
    throw VersionError(msg.str());
  }
  const auto real_size = cur.take<std::uint32_t>();
  if (real_size != sizeof(Real)) {
    throw VersionError("checkpoint " + path.string() + " stores " +
                       std::to_string(real_size * 8) + "-bit scalars, build uses " +
                       std::to_string(sizeof(Real) * 8) + "-bit");
  }
  auto& params = model.parameters().all();
  const auto count = cur.take<std::uint64_t>();
  if (count != params.size()) {
    cur.fail("parameter count " + std::to_string(count) + " but model has " +
             std::to_string(params.size()));
  }
  // Stage everything first so a bad file leaves the model untouched.
  std::vector<std::vector<Real>> staged(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto name_len = cur.take<std::uint32_t>();
    const std::string name(cur.raw(name_len), name_len);
    if (name != params[i].name) {
      cur.fail("expected parameter '" + params[i].name + "', found '" + name + "'");
    }
    const auto rank = cur.take<std::uint32_t>();
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(cur.take<std::uint64_t>());
    if (shape != params[i].tensor.shape()) {
      cur.fail("shape " + shape_to_string(shape) + " for '" + name + "', expected " +
               shape_to_string(params[i].tensor.shape()));
    }
    auto& v = staged[i];
    v.resize(params[i].tensor.size());
    const std::size_t n = v.size() * sizeof(Real);
    std::memcpy(v.data(), cur.raw(n), n);
  }
  if (!cur.done()) cur.fail("trailing bytes");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto dst = params[i].tensor.mutable_data();
    std::copy(staged[i].begin(), staged[i].end(), dst.begin());
  }
}

}  // namespace cams
