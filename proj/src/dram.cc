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

#include "vta/dram.h"

#include <fmt/format.h>

#include <algorithm>
#include <cstring>

#include "vta/error.h"

namespace vta {
namespace dram {

const char* RegionKindName(RegionKind kind) {
  switch (kind) {
    case RegionKind::kInp:
      return "INP";
    case RegionKind::kWgt:
      return "WGT";
    case RegionKind::kAcc:
      return "ACC";
    case RegionKind::kOut:
      return "OUT";
    case RegionKind::kUop:
      return "UOP";
    case RegionKind::kInstr:
      return "INSTR";
  }
  return "?";
}

std::optional<RegionKind> ParseRegionKind(const std::string& name) {
  for (RegionKind k : {RegionKind::kInp, RegionKind::kWgt, RegionKind::kAcc, RegionKind::kOut,
                       RegionKind::kUop, RegionKind::kInstr}) {
    if (name == RegionKindName(k)) return k;
  }
  return std::nullopt;
}

uint32_t precision(RegionKind kind, const VtaConfig& cfg) {
  switch (kind) {
    case RegionKind::kInp:
      return cfg.inp_width_bytes;
    case RegionKind::kWgt:
      return cfg.wgt_width_bytes;
    case RegionKind::kAcc:
      return cfg.acc_width_bytes;
    case RegionKind::kOut:
      return cfg.out_width_bytes;
    case RegionKind::kUop:
      return isa::kUopBytes;
    case RegionKind::kInstr:
      return isa::kInstrBytes;
  }
  return 1;
}

uint32_t nb_elem(RegionKind kind, const VtaConfig& cfg) {
  switch (kind) {
    case RegionKind::kInp:
    case RegionKind::kAcc:
    case RegionKind::kOut:
      return cfg.block_size;
    case RegionKind::kWgt:
      return cfg.block_size * cfg.block_size;
    case RegionKind::kUop:
    case RegionKind::kInstr:
      return 1;
  }
  return 1;
}

RegionKind KindOfBuffer(isa::BufferId id) {
  switch (id) {
    case isa::BufferId::kUop:
      return RegionKind::kUop;
    case isa::BufferId::kWgt:
      return RegionKind::kWgt;
    case isa::BufferId::kInp:
      return RegionKind::kInp;
    case isa::BufferId::kAcc:
      return RegionKind::kAcc;
    case isa::BufferId::kOut:
      return RegionKind::kOut;
  }
  return RegionKind::kInp;
}

uint64_t phys_to_logical(uint64_t phy, uint64_t offset, uint64_t precision, uint64_t nb_elem) {
  if (phy < offset) {
    throw Error(ErrorKind::kAddress,
                fmt::format("physical address {:#x} below region offset {:#x}", phy, offset));
  }
  if (precision * nb_elem == 0) {
    throw Error(ErrorKind::kAddress, "structure size is zero");
  }
  return (phy - offset) / (precision * nb_elem);
}

uint64_t logical_to_phys(uint64_t log, uint64_t offset, uint64_t precision, uint64_t nb_elem,
                         uint64_t limit) {
  uint64_t size = precision * nb_elem;
  if (size != 0 && log > (UINT64_MAX - offset) / size) {
    throw Error(ErrorKind::kAddress, fmt::format("logical address {:#x} overflows", log));
  }
  uint64_t phy = offset + log * size;
  if (phy >= limit) {
    throw Error(ErrorKind::kAddress,
                fmt::format("logical address {:#x} maps to {:#x}, beyond capacity", log, phy));
  }
  return phy;
}

DramImage::DramImage(const VtaConfig& cfg, uint64_t offset, uint64_t capacity)
    : cfg_(cfg), offset_(offset), capacity_(capacity), cursor_(offset) {
  validate(cfg_);
  if (offset_ % cfg_.page_bytes != 0) {
    throw Error(ErrorKind::kConfig, fmt::format("dram offset {:#x} is not page aligned", offset_));
  }
  if (capacity_ % cfg_.page_bytes != 0 || capacity_ == 0) {
    throw Error(ErrorKind::kConfig, "dram capacity must be a positive multiple of page_bytes");
  }
}

Region DramImage::allocate(uint64_t size_bytes, RegionKind kind) {
  uint64_t page = cfg_.page_bytes;
  // Advance to the next page boundary; page 0 stays reserved.
  uint64_t start = offset_ + ((cursor_ - offset_ + page - 1) / page) * page;
  if (start == offset_) start += page;
  uint64_t end = start + size_bytes;
  if (end > offset_ + capacity_) {
    throw Error(ErrorKind::kCapacity,
                fmt::format("out of DRAM capacity: requested {} bytes at {:#x}, capacity ends at {:#x}",
                            size_bytes, start, offset_ + capacity_));
  }
  Region r;
  r.kind = kind;
  r.phy_start = start;
  r.size_bytes = size_bytes;
  r.log_start = phys_to_logical(start, offset_, precision(kind, cfg_), nb_elem(kind, cfg_));
  cursor_ = end;
  storage_.resize(cursor_ - offset_, 0);
  regions_.push_back(r);
  return r;
}

Region DramImage::adopt(const Region& region) {
  if (region.phy_start < offset_ || (region.phy_start - offset_) % cfg_.page_bytes != 0) {
    throw Error(ErrorKind::kAddress, fmt::format("{} region at {:#x} is not page aligned",
                                                 RegionKindName(region.kind), region.phy_start));
  }
  if (region.phy_end() > offset_ + capacity_) {
    throw Error(ErrorKind::kCapacity, fmt::format("{} region at {:#x} of {} bytes exceeds capacity",
                                                  RegionKindName(region.kind), region.phy_start, region.size_bytes));
  }
  if (logical(region.phy_start, region.kind) != region.log_start) {
    throw Error(ErrorKind::kAddress, fmt::format("{} region at {:#x} records logical {:#x}, expected {:#x}",
                                                 RegionKindName(region.kind), region.phy_start, region.log_start,
                                                 logical(region.phy_start, region.kind)));
  }
  for (const Region& r : regions_) {
    if (region.phy_start < r.phy_end() && r.phy_start < region.phy_end()) {
      throw Error(ErrorKind::kAddress, fmt::format("{} region at {:#x} overlaps {} region at {:#x}",
                                                   RegionKindName(region.kind), region.phy_start,
                                                   RegionKindName(r.kind), r.phy_start));
    }
  }
  cursor_ = std::max(cursor_, region.phy_end());
  storage_.resize(cursor_ - offset_, 0);
  regions_.push_back(region);
  return region;
}

void DramImage::CheckOwned(const Region& region) const {
  if (std::find(regions_.begin(), regions_.end(), region) == regions_.end()) {
    throw Error(ErrorKind::kAddress,
                fmt::format("access to unallocated {} region at {:#x}", RegionKindName(region.kind),
                            region.phy_start));
  }
}

void DramImage::write_region(const Region& region, std::span<const uint8_t> payload) {
  CheckOwned(region);
  if (payload.size() != region.size_bytes) {
    throw Error(ErrorKind::kAddress,
                fmt::format("payload of {} bytes does not match {} region of {} bytes", payload.size(),
                            RegionKindName(region.kind), region.size_bytes));
  }
  auto dst = bytes(region.phy_start, region.size_bytes);
  std::copy(payload.begin(), payload.end(), dst.begin());
}

std::vector<uint8_t> DramImage::read_region(const Region& region) const {
  CheckOwned(region);
  auto src = bytes(region.phy_start, region.size_bytes);
  return {src.begin(), src.end()};
}

std::span<uint8_t> DramImage::bytes(uint64_t phy, uint64_t size) {
  if (phy < offset_ || phy - offset_ > storage_.size() || size > storage_.size() - (phy - offset_)) {
    throw Error(ErrorKind::kAddress,
                fmt::format("DRAM access [{:#x}, {:#x}) outside allocated memory", phy, phy + size));
  }
  return {storage_.data() + (phy - offset_), size};
}

std::span<const uint8_t> DramImage::bytes(uint64_t phy, uint64_t size) const {
  return const_cast<DramImage*>(this)->bytes(phy, size);
}

uint64_t DramImage::logical(uint64_t phy, RegionKind kind) const {
  return phys_to_logical(phy, offset_, precision(kind, cfg_), nb_elem(kind, cfg_));
}

uint64_t DramImage::physical(uint64_t log, RegionKind kind) const {
  return logical_to_phys(log, offset_, precision(kind, cfg_), nb_elem(kind, cfg_), offset_ + capacity_);
}

}  // namespace dram
}  // namespace vta
