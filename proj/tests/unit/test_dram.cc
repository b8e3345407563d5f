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

#include <doctest.h>

#include <random>

#include "vta/dram.h"
#include "vta/error.h"

using vta::dram::DramImage;
using vta::dram::Region;
using vta::dram::RegionKind;

TEST_CASE("allocator reproduces the two-allocation page trace") {
  DramImage img(vta::default_config(), 0);
  CHECK(img.alloc_cursor() == 0x0000);
  Region a = img.allocate(256, RegionKind::kInp);
  CHECK(a.phy_start == 0x1000);
  CHECK(a.phy_end() - 1 == 0x10FF);
  CHECK(img.alloc_cursor() == 0x1100);
  Region b = img.allocate(4352, RegionKind::kWgt);
  CHECK(b.phy_start == 0x2000);
  CHECK(b.phy_end() - 1 == 0x30FF);
  CHECK(img.alloc_cursor() == 0x3100);
  // 4352 bytes are 17 weight matrices; the first sits at logical @0020.
  CHECK(b.size_bytes / 256 == 17);
  CHECK(b.log_start == 0x20);
}

TEST_CASE("allocation at a page boundary needs no rounding") {
  DramImage img(vta::default_config(), 0);
  img.allocate(4096, RegionKind::kInp);
  CHECK(img.alloc_cursor() == 0x2000);
  Region r = img.allocate(4096, RegionKind::kInp);
  CHECK(r.phy_start == 0x2000);
}

TEST_CASE("address mapping") {
  CHECK(vta::dram::phys_to_logical(0x2000, 0, 1, 256) == 0x20);
  CHECK(vta::dram::phys_to_logical(0x1000, 0x1000, 4, 16) == 0);
  CHECK(vta::dram::phys_to_logical(0x1100, 0x1000, 1, 16) == 0x10);
  CHECK(vta::dram::phys_to_logical(0x10FF, 0, 1, 16) == 0x10F);
  CHECK(vta::dram::logical_to_phys(0x20, 0, 1, 256) == 0x2000);
  CHECK(vta::dram::logical_to_phys(0, 0x4000, 4, 16) == 0x4000);
  CHECK_THROWS_AS(vta::dram::phys_to_logical(0xFFF, 0x1000, 1, 16), vta::Error);
  CHECK_THROWS_AS(vta::dram::logical_to_phys(0x1000, 0, 1, 16, 0x10000), vta::Error);

  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    uint64_t p = uint64_t{1} << (rng() % 3);
    uint64_t n = uint64_t{1} << (rng() % 9);
    uint64_t off = (rng() % 16) * 4096;
    uint64_t log = rng() % (1u << 20);
    uint64_t phy = vta::dram::logical_to_phys(log, off, p, n);
    CHECK(vta::dram::phys_to_logical(phy, off, p, n) == log);
    // Consecutive structures are one structure size apart.
    CHECK(vta::dram::logical_to_phys(log + 1, off, p, n) - phy == p * n);
  }
}

TEST_CASE("regions record their logical start and never overlap") {
  vta::VtaConfig cfg;
  DramImage img(cfg, 0x10000);
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    auto kind = static_cast<RegionKind>(rng() % 6);
    img.allocate(rng() % 9000, kind);
  }
  const auto& regs = img.regions();
  for (size_t i = 0; i < regs.size(); ++i) {
    CHECK(regs[i].phy_start % cfg.page_bytes == 0);
    CHECK(img.logical(regs[i].phy_start, regs[i].kind) == regs[i].log_start);
    for (size_t j = i + 1; j < regs.size(); ++j) {
      bool disjoint = regs[i].phy_end() <= regs[j].phy_start || regs[j].phy_end() <= regs[i].phy_start;
      CHECK(disjoint);
    }
  }
}

TEST_CASE("region read/write") {
  DramImage img(vta::default_config());
  Region r = img.allocate(256, RegionKind::kInp);
  auto zeros = img.read_region(r);
  CHECK(zeros == std::vector<uint8_t>(256, 0));

  std::mt19937_64 rng(3);
  std::vector<uint8_t> payload(256);
  for (auto& b : payload) b = static_cast<uint8_t>(rng());
  img.write_region(r, payload);
  CHECK(img.read_region(r) == payload);

  payload.push_back(0);
  CHECK_THROWS_AS(img.write_region(r, payload), vta::Error);
  Region bogus{RegionKind::kOut, 0x9000, 16, 0x900};
  CHECK_THROWS_AS(img.read_region(bogus), vta::Error);
}

TEST_CASE("capacity exhaustion names the requested size") {
  DramImage img(vta::default_config(), 0, 0x4000);
  img.allocate(0x1000, RegionKind::kInp);
  try {
    img.allocate(0x2001, RegionKind::kWgt);
    FAIL("expected capacity error");
  } catch (const vta::Error& e) {
    CHECK(e.kind() == vta::ErrorKind::kCapacity);
    CHECK(std::string(e.what()).find("8193") != std::string::npos);
  }
}

TEST_CASE("adopting recorded regions") {
  DramImage a(vta::default_config());
  Region r1 = a.allocate(256, RegionKind::kInp);
  Region r2 = a.allocate(512, RegionKind::kWgt);
  DramImage b(vta::default_config());
  b.adopt(r2);
  b.adopt(r1);
  CHECK(b.alloc_cursor() == a.alloc_cursor());
  CHECK_THROWS_AS(b.adopt(r1), vta::Error);
  Region bad = r1;
  bad.log_start += 1;
  DramImage c(vta::default_config());
  CHECK_THROWS_AS(c.adopt(bad), vta::Error);
  Region misaligned{RegionKind::kInp, 0x1010, 16, 0x101};
  CHECK_THROWS_AS(c.adopt(misaligned), vta::Error);
}
