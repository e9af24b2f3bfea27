// Copyright 2026 The buildseg Authors.
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

#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace buildseg {

std::uint64_t fnv1a64(std::string_view text);

// CRC-32 (IEEE), as used for patch-store file checksums.
std::uint32_t crc32(std::span<const std::uint8_t> bytes);

}  // namespace buildseg
