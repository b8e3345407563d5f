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
 * \file progbuild.h
 * \brief Lowering of a block matrix multiplication plus element-wise
 *  post-ops into a VTA program: instructions, micro-ops and DRAM layout.
 *
 * A program is emitted in six phases: reset, loads, GEMM, ALU, store and
 * termination. Jobs that do not fit the on-chip buffers are tiled; each
 * output tile keeps its partial sums resident in ACC across the reduction
 * segments, so only final results are truncated and stored.
 */
#ifndef VTA_PROGBUILD_H_
#define VTA_PROGBUILD_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "vta/blocks.h"
#include "vta/config.h"
#include "vta/dram.h"
#include "vta/isa.h"

namespace vta {
namespace prog {

/*! \brief One element-wise post-op. Without an immediate the op combines each element with itself. */
struct AluStep {
  isa::AluOp op{isa::AluOp::kMax};
  std::optional<int32_t> imm;

  bool operator==(const AluStep&) const = default;
};

struct MatMulJob {
  blocks::BlockMatrix a;                 // INP, alpha x lambda blocks
  blocks::BlockMatrix b;                 // WGT, lambda x beta blocks
  std::optional<blocks::BlockMatrix> x;  // ACC preload, alpha x beta blocks
  std::vector<AluStep> alu;
  /*! \brief First micro-op slot used by the GEMM; slot 0 is kept for reset. */
  uint32_t uop_epsilon{1};

  uint32_t alpha() const { return a.grid_rows; }
  uint32_t lambda() const { return a.grid_cols; }
  uint32_t beta() const { return b.grid_cols; }
};

/*! \brief Logical DRAM base of each operand, in structures of its kind. */
struct Layout {
  uint32_t inp{0};
  uint32_t wgt{0};
  uint32_t acc{0};
  uint32_t out{0};
  uint32_t uop{0};

  bool operator==(const Layout&) const = default;
};

struct PredictedStats {
  uint64_t gemm_loop_count{0};
  uint64_t reset_loop_count{0};
  uint64_t alu_loop_count{0};
  uint64_t dram_bytes_loaded{0};
  uint64_t dram_bytes_stored{0};
};

/*! \brief Sub-problem covering output blocks [i0, i0+alpha) x [j0, j0+beta), reduced over [k0, k0+lambda). */
struct Tile {
  uint32_t i0{0}, alpha{0};
  uint32_t j0{0}, beta{0};
  uint32_t k0{0}, lambda{0};

  bool operator==(const Tile&) const = default;
};

struct Program {
  std::vector<isa::Instruction> instructions;
  /*! \brief Contents of the micro-op region, in DRAM order. */
  std::vector<isa::Uop> uops;
  Layout layout;
  std::vector<Tile> tiles;
  PredictedStats predicted;
};

struct GemmGen {
  isa::GemmInstr instr;
  std::vector<isa::Uop> uops;
};

struct AluGen {
  isa::AluInstr instr;
  std::vector<isa::Uop> uops;
};

struct ResetGen {
  isa::MemInstr uop_load;
  isa::GemmInstr reset;
  isa::Uop uop;
};

/*!
 * \brief GEMM over an alpha x lambda by lambda x beta block grid held at SRAM index 0.
 * \throws Error(kCapacity) naming the first buffer bound that is exceeded.
 */
GemmGen gen_gemm(uint32_t alpha, uint32_t lambda, uint32_t beta, uint32_t epsilon, const VtaConfig& cfg);

/*! \brief In-place element-wise op over the first vector_count ACC vectors, using one zero micro-op at slot. */
AluGen gen_alu(const AluStep& step, uint32_t vector_count, uint32_t slot, const VtaConfig& cfg);

/*! \brief Load a zero micro-op into slot 0 from uop_dram, then zero vector_count ACC vectors. */
ResetGen gen_reset(uint32_t vector_count, uint32_t uop_dram, const VtaConfig& cfg);

/*!
 * \brief 2D LOAD of y rows of x structures with DRAM row stride `stride`.
 *  Collapses to a single row when the rows are contiguous.
 */
isa::MemInstr gen_load(isa::BufferId buffer, uint32_t sram, uint32_t dram, uint32_t y, uint32_t x,
                       uint32_t stride);
isa::MemInstr gen_store(uint32_t sram, uint32_t dram, uint32_t y, uint32_t x, uint32_t stride);
isa::FinishInstr gen_finish();

/*! \brief Partition the block grid so each tile fits every on-chip buffer. */
std::vector<Tile> tile(uint32_t alpha, uint32_t lambda, uint32_t beta, const VtaConfig& cfg,
                       uint32_t epsilon = 1);

/*! \throws Error(kShape) when the operand grids do not conform. */
void validate_job(const MatMulJob& job, const VtaConfig& cfg);

/*! \brief Full program for a job, with DRAM addresses taken from layout. */
Program build_program(const MatMulJob& job, const VtaConfig& cfg, const Layout& layout = {});

/*! \brief Rebase every LOAD/STORE of a program built at `program.layout` onto `to`. */
void relocate(Program& program, const Layout& to);

/*! \brief Analytic loop totals read straight off the instruction fields. */
PredictedStats analytic_loop_counts(const std::vector<isa::Instruction>& instrs);

/*! \brief DRAM regions of a compiled job. acc is absent when the job has no X. */
struct JobRegions {
  dram::Region inp;
  dram::Region wgt;
  std::optional<dram::Region> acc;
  dram::Region out;
  dram::Region uop;
  dram::Region instr;
};

struct CompiledJob {
  Program program;
  JobRegions regions;
  std::vector<uint8_t> inp_bytes;
  std::vector<uint8_t> wgt_bytes;
  std::vector<uint8_t> acc_bytes;
  std::vector<uint8_t> instr_bytes;
  std::vector<uint8_t> uop_bytes;
};

/*!
 * \brief Allocate the job's regions in img (INP, WGT, ACC, OUT, UOP, INSTR),
 *  write all payloads, and return the relocated program.
 * \param inp_region Reuse an existing INP region instead of allocating one.
 */
CompiledJob compile_matmul(const MatMulJob& job, dram::DramImage& img,
                           const std::optional<dram::Region>& inp_region = std::nullopt);

}  // namespace prog
}  // namespace vta

#endif  // VTA_PROGBUILD_H_
