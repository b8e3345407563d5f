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
 * \file funcsim.h
 * \brief Functional simulator executing VTA binaries against a DRAM image.
 *
 * Instructions run strictly in stream order. Dependency flags do not change
 * the order; they are replayed as token queues between the load, compute
 * and store modules, and any underflow or leftover token is reported.
 */
#ifndef VTA_FUNCSIM_H_
#define VTA_FUNCSIM_H_

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "vta/config.h"
#include "vta/dram.h"
#include "vta/isa.h"

namespace vta {
namespace sim {

struct RunStats {
  /*! \brief Innermost GEMM bodies (one vector-matrix product each), reset GEMMs excluded. */
  uint64_t gemm_loop_count{0};
  /*! \brief Innermost bodies of reset GEMMs. */
  uint64_t reset_loop_count{0};
  /*! \brief Inner-loop iterations of non-reset GEMMs, i.e. sum of lp_out * lp_in. */
  uint64_t gemm_inner_loop_count{0};
  uint64_t alu_loop_count{0};
  uint64_t dram_bytes_loaded{0};
  uint64_t dram_bytes_stored{0};
  uint64_t instruction_count{0};
};

/*! \brief On-chip buffers. Sizes follow the config depths; all zero on construction. */
struct SramState {
  explicit SramState(const VtaConfig& cfg);

  std::vector<int8_t> inp;
  std::vector<int8_t> wgt;
  std::vector<int32_t> acc;
  std::vector<int8_t> out;
  std::vector<isa::Uop> uop;
};

enum class Module : uint8_t { kLoad, kCompute, kStore };
Module ModuleOf(const isa::Instruction& instr);

struct RunOptions {
  /*! \brief Treat dependency-ledger violations as errors instead of warnings. */
  bool strict_deps{false};
  /*! \brief When set, one line per executed instruction. */
  std::ostream* trace{nullptr};
};

struct RunResult {
  RunStats stats;
  std::vector<std::string> dep_warnings;
};

class Simulator {
 public:
  explicit Simulator(const VtaConfig& cfg);

  /*! \brief Execute one instruction. Returns false once FINISH has run. */
  bool step(const isa::Instruction& instr, dram::DramImage& dram);

  void exec_load(const isa::MemInstr& m, const dram::DramImage& dram);
  void exec_store(const isa::MemInstr& m, dram::DramImage& dram);
  void exec_gemm(const isa::GemmInstr& g);
  void exec_alu(const isa::AluInstr& a);
  /*! \brief out[v] = low byte of acc[v] for vectors [first, first + count). */
  void truncate_acc_to_out(uint32_t first, uint32_t count);

  /*! \brief Replay the token flags of one instruction; returns a message on violation. */
  std::string account_deps(const isa::Instruction& instr);
  /*! \brief Messages for tokens still queued at the end of a run. */
  std::vector<std::string> leftover_tokens() const;

  const RunStats& stats() const { return stats_; }
  SramState& sram() { return sram_; }
  const SramState& sram() const { return sram_; }
  const VtaConfig& config() const { return cfg_; }

 private:
  VtaConfig cfg_;
  SramState sram_;
  RunStats stats_;
  // Token queues: load->compute, compute->load, compute->store, store->compute.
  int64_t l2c_{0}, c2l_{0}, c2s_{0}, s2c_{0};
};

/*!
 * \brief Run the program held in instr_region until FINISH.
 * \throws Error(kSimulation) on out-of-range access or a missing FINISH,
 *  Error(kDependency) on a token violation when strict_deps is set.
 */
RunResult run(dram::DramImage& dram, const dram::Region& instr_region, const RunOptions& options = {});

}  // namespace sim
}  // namespace vta

#endif  // VTA_FUNCSIM_H_
