/*
 * Licensed to the Apache Software Foundation (ASF) under one
 * or more contributor license agreements.  See the NOTICE file
 * distributed with this work for additional information
 * regarding copyright ownership.  The ASF licenses this file
 * to you under the Apache License, Version 2.0 (the
 * "License"); you may not use this file except in compliance
 * with the License.  You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing,
 * software distributed under the License is distributed on an
 * "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
 * KIND, either express or implied.  See the License for the
 * specific language governing permissions and limitations
 * under the License.
 */

/*!
 * \file dram.h
 * \brief Shared DRAM region: page allocator and physical/logical addressing.
 *
 * The accelerator never sees byte addresses. It addresses whole structures:
 *   log_addr = floor((phy_addr - offset) / (precision * nb_elem)).
 * Allocations are page aligned and never overlap. Page 0 of the region is
 * never handed out, so the first allocation starts one page past offset.
 */
#ifndef VTA_DRAM_H_
#define VTA_DRAM_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vta/config.h"
#include "vta/isa.h"

namespace vta {
namespace dram {

inline constexpr uint64_t kDefaultCapacity = 64ull << 20;

enum class RegionKind : uint8_t { kInp, kWgt, kAcc, kOut, kUop, kInstr };

const char* RegionKindName(RegionKind kind);
std::optional<RegionKind> ParseRegionKind(const std::string& name);

/*! \brief Bytes per element of a region kind. */
uint32_t precision(RegionKind kind, const VtaConfig& cfg);
/*! \brief Elements per addressable structure of a region kind. */
uint32_t nb_elem(RegionKind kind, const VtaConfig& cfg);
inline uint32_t structure_bytes(RegionKind kind, const VtaConfig& cfg) {
  return precision(kind, cfg) * nb_elem(kind, cfg);
}
/*! \brief Region kind holding the DRAM side of a LOAD/STORE on this buffer. */
RegionKind KindOfBuffer(isa::BufferId id);

struct Region {
  RegionKind kind{RegionKind::kInp};
  uint64_t phy_start{0};
  uint64_t size_bytes{0};
  uint64_t log_start{0};

  uint64_t phy_end() const { return phy_start + size_bytes; }
  bool operator==(const Region&) const = default;
};

/*! \throws Error(kAddress) when phy < offset or the structure size is zero. */
uint64_t phys_to_logical(uint64_t phy, uint64_t offset, uint64_t precision, uint64_t nb_elem);

/*!
 * \brief Physical address of the first byte of a structure.
 * \throws Error(kAddress) if the result passes `limit` (exclusive).
 */
uint64_t logical_to_phys(uint64_t log, uint64_t offset, uint64_t precision, uint64_t nb_elem,
                         uint64_t limit = UINT64_MAX);

/*!
 * \brief Byte-addressable model of the accelerator's DRAM region.
 *
 * Bytes are zero until written. Storage grows with the allocation cursor, so
 * a large capacity costs nothing until it is used.
 */
class DramImage {
 public:
  DramImage(const VtaConfig& cfg, uint64_t offset = 0, uint64_t capacity = kDefaultCapacity);

  /*! \throws Error(kCapacity) with the requested size when the region is full. */
  Region allocate(uint64_t size_bytes, RegionKind kind);

  /*!
   * \brief Re-create a region recorded by an earlier allocation, e.g. from a saved layout.
   * \throws Error(kAddress) if it is misaligned, overlaps another region, or disagrees with log_start.
   */
  Region adopt(const Region& region);

  /*! \throws Error(kAddress) on size mismatch or a region not owned by this image. */
  void write_region(const Region& region, std::span<const uint8_t> payload);
  std::vector<uint8_t> read_region(const Region& region) const;

  /*!
   * \brief Raw view of allocated bytes [phy, phy + size).
   * \throws Error(kAddress) if any byte lies outside allocated storage.
   */
  std::span<uint8_t> bytes(uint64_t phy, uint64_t size);
  std::span<const uint8_t> bytes(uint64_t phy, uint64_t size) const;

  uint64_t offset() const { return offset_; }
  uint64_t capacity() const { return capacity_; }
  uint64_t alloc_cursor() const { return cursor_; }
  const VtaConfig& config() const { return cfg_; }
  const std::vector<Region>& regions() const { return regions_; }

  /*! \brief Logical address of the structure at phy for the given region kind. */
  uint64_t logical(uint64_t phy, RegionKind kind) const;
  uint64_t physical(uint64_t log, RegionKind kind) const;

 private:
  void CheckOwned(const Region& region) const;

  VtaConfig cfg_;
  uint64_t offset_;
  uint64_t capacity_;
  uint64_t cursor_;
  std::vector<uint8_t> storage_;
  std::vector<Region> regions_;
};

}  // namespace dram
}  // namespace vta

#endif  // VTA_DRAM_H_
