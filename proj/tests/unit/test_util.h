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

// Random generators shared by the unit and acceptance suites.
#ifndef VTA_TESTS_TEST_UTIL_H_
#define VTA_TESTS_TEST_UTIL_H_

#include <cstdint>
#include <random>
#include <vector>

#include "vta/blocks.h"
#include "vta/isa.h"

namespace vta {
namespace test {

inline uint32_t Bits(std::mt19937_64& rng, uint32_t width) {
  return static_cast<uint32_t>(rng() & ((uint64_t{1} << width) - 1));
}

inline isa::DepFlags RandomDeps(std::mt19937_64& rng) {
  return {static_cast<bool>(rng() & 1), static_cast<bool>(rng() & 1),
          static_cast<bool>(rng() & 1), static_cast<bool>(rng() & 1)};
}

inline isa::MemInstr RandomMem(std::mt19937_64& rng) {
  isa::MemInstr m;
  m.opcode = (rng() & 1) ? isa::Opcode::kStore : isa::Opcode::kLoad;
  m.deps = RandomDeps(rng);
  m.buffer = static_cast<isa::BufferId>(rng() % 5);
  m.sram_base = Bits(rng, isa::kSramAddrBits);
  m.dram_base = Bits(rng, isa::kDramAddrBits);
  m.y_size = Bits(rng, isa::kSizeBits);
  m.x_size = Bits(rng, isa::kSizeBits);
  m.x_stride = Bits(rng, isa::kStrideBits);
  m.y_pad_top = Bits(rng, isa::kPadBits);
  m.y_pad_bottom = Bits(rng, isa::kPadBits);
  m.x_pad_left = Bits(rng, isa::kPadBits);
  m.x_pad_right = Bits(rng, isa::kPadBits);
  return m;
}

inline isa::GemmInstr RandomGemm(std::mt19937_64& rng) {
  isa::GemmInstr g;
  g.deps = RandomDeps(rng);
  g.reset = rng() & 1;
  g.uop_begin = Bits(rng, isa::kUopBeginBits);
  g.uop_end = Bits(rng, isa::kUopEndBits);
  g.lp_out = Bits(rng, isa::kLoopIterBits);
  g.lp_in = Bits(rng, isa::kLoopIterBits);
  g.acc_factor_out = Bits(rng, isa::kAccFactorBits);
  g.acc_factor_in = Bits(rng, isa::kAccFactorBits);
  g.inp_factor_out = Bits(rng, isa::kInpFactorBits);
  g.inp_factor_in = Bits(rng, isa::kInpFactorBits);
  g.wgt_factor_out = Bits(rng, isa::kWgtFactorBits);
  g.wgt_factor_in = Bits(rng, isa::kWgtFactorBits);
  return g;
}

inline isa::AluInstr RandomAlu(std::mt19937_64& rng) {
  isa::AluInstr a;
  a.deps = RandomDeps(rng);
  a.reset = rng() & 1;
  a.uop_begin = Bits(rng, isa::kUopBeginBits);
  a.uop_end = Bits(rng, isa::kUopEndBits);
  a.lp_out = Bits(rng, isa::kLoopIterBits);
  a.lp_in = Bits(rng, isa::kLoopIterBits);
  a.dst_factor_out = Bits(rng, isa::kAccFactorBits);
  a.dst_factor_in = Bits(rng, isa::kAccFactorBits);
  a.src_factor_out = Bits(rng, isa::kInpFactorBits);
  a.src_factor_in = Bits(rng, isa::kInpFactorBits);
  a.alu_opcode = static_cast<isa::AluOp>(rng() % 4);
  a.use_imm = rng() & 1;
  a.imm = static_cast<int16_t>(Bits(rng, isa::kAluImmBits));
  return a;
}

inline isa::Instruction RandomInstruction(std::mt19937_64& rng) {
  switch (rng() % 4) {
    case 0:
      return RandomMem(rng);
    case 1:
      return RandomGemm(rng);
    case 2:
      return RandomAlu(rng);
    default:
      return isa::FinishInstr{RandomDeps(rng)};
  }
}

inline blocks::Matrix RandomMatrix(std::mt19937_64& rng, uint32_t rows, uint32_t cols,
                                   int32_t lo = -128, int32_t hi = 127) {
  std::uniform_int_distribution<int32_t> dist(lo, hi);
  blocks::Matrix m(rows, cols);
  for (auto& v : m.elements) v = dist(rng);
  return m;
}

}  // namespace test
}  // namespace vta

#endif  // VTA_TESTS_TEST_UTIL_H_
