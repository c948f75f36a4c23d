// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef QKD_SRC_DATA_IO_HPP_
#define QKD_SRC_DATA_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

namespace qkd::detail {

// Whole file, gunzipped if it carries a gzip header. Missing or unreadable
// files raise FormatError naming the path.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace qkd::detail

#endif  // QKD_SRC_DATA_IO_HPP_
