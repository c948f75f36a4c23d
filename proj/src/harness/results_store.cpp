// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkd/harness/results_store.hpp"

#include <fstream>
#include <sstream>

#include "qkd/core/error.hpp"

namespace qkd {

namespace fs = std::filesystem;

ResultsStore::ResultsStore(fs::path path, Mode mode) : path_(std::move(path)), mode_(mode) {
  if (mode_ == Mode::kReadWrite && path_.has_parent_path()) fs::create_directories(path_.parent_path());
  std::ifstream in(path_, std::ios::binary);
  if (!in) return;
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    const std::size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) break;  // torn tail
    ++line_no;
    const std::string line = content.substr(pos, nl - pos);
    if (!line.empty()) {
      RunRecord r;
      try {
        r = RunRecord::from_json(nlohmann::json::parse(line));
      } catch (const std::exception& e) {
        throw IntegrityError(path_.string() + ": unreadable record on line " + std::to_string(line_no) + ": " +
                             e.what());
      }
      Key key{r.config_hash, r.seed};
      if (!index_.contains(key)) order_.push_back(key);
      index_[key] = lines_.size();
      lines_.push_back(std::move(r));
    }
    pos = nl + 1;
  }
  valid_bytes_ = pos;
  if (mode_ == Mode::kReadWrite && valid_bytes_ != content.size()) fs::resize_file(path_, valid_bytes_);
}

bool ResultsStore::contains(const std::string& hash, std::uint64_t seed) const {
  std::lock_guard lock(mu_);
  return index_.contains({hash, seed});
}

std::optional<RunRecord> ResultsStore::find(const std::string& hash, std::uint64_t seed) const {
  std::lock_guard lock(mu_);
  auto it = index_.find({hash, seed});
  if (it == index_.end()) return std::nullopt;
  return lines_[it->second];
}

void ResultsStore::append(const RunRecord& record) {
  if (mode_ == Mode::kReadOnly) throw UsageError("results store opened read-only: " + path_.string());
  const std::string line = record.to_json().dump() + "\n";
  std::lock_guard lock(mu_);
  {
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) throw Error("cannot append to results store " + path_.string());
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    out.flush();
    if (!out) throw Error("short write to results store " + path_.string());
  }
  valid_bytes_ += line.size();
  Key key{record.config_hash, record.seed};
  if (!index_.contains(key)) order_.push_back(key);
  index_[key] = lines_.size();
  lines_.push_back(record);
}

std::vector<RunRecord> ResultsStore::records() const {
  std::lock_guard lock(mu_);
  std::vector<RunRecord> out;
  out.reserve(order_.size());
  for (const auto& k : order_) out.push_back(lines_[index_.at(k)]);
  return out;
}

std::size_t ResultsStore::size() const {
  std::lock_guard lock(mu_);
  return index_.size();
}

std::size_t ResultsStore::line_count() const {
  std::lock_guard lock(mu_);
  return lines_.size();
}

std::vector<RunRecord> ResultsStore::read_all(const fs::path& path) {
  if (!fs::exists(path)) throw UsageError("results file not found: " + path.string());
  return ResultsStore(path, Mode::kReadOnly).records();
}

}  // namespace qkd
