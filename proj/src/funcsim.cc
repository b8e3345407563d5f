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

#include "vta/funcsim.h"

#include <fmt/format.h>

#include <algorithm>

#include "vta/error.h"

namespace vta {
namespace sim {

using isa::BufferId;

namespace {

[[noreturn]] void Fail(const std::string& what) { throw Error(ErrorKind::kSimulation, what); }

void CheckIndex(uint64_t idx, uint64_t depth, const char* buffer, const std::string& where) {
  if (idx >= depth) Fail(fmt::format("{} index {} out of range (depth {}) {}", buffer, idx, depth, where));
}

int32_t Wrap(int64_t v) { return static_cast<int32_t>(static_cast<uint32_t>(v)); }

int32_t AluApply(isa::AluOp op, int32_t a, int32_t b) {
  switch (op) {
    case isa::AluOp::kMin:
      return std::min(a, b);
    case isa::AluOp::kMax:
      return std::max(a, b);
    case isa::AluOp::kAdd:
      return Wrap(int64_t{a} + b);
    case isa::AluOp::kShr:
      // A negative amount shifts left, wrapping at 32 bits.
      if (b >= 0) return a >> std::min(b, 31);
      return Wrap(int64_t{static_cast<uint32_t>(a)} << std::min(-int64_t{b}, int64_t{31}));
  }
  return a;
}

}  // namespace

SramState::SramState(const VtaConfig& cfg)
    : inp(size_t{cfg.inp_buf_depth} * cfg.block_size),
      wgt(size_t{cfg.wgt_buf_depth} * cfg.block_size * cfg.block_size),
      acc(size_t{cfg.acc_buf_depth} * cfg.block_size),
      out(size_t{cfg.out_buf_depth} * cfg.block_size),
      uop(cfg.uop_buf_depth) {}

Module ModuleOf(const isa::Instruction& instr) {
  if (const auto* m = std::get_if<isa::MemInstr>(&instr)) {
    if (m->opcode == isa::Opcode::kStore) return Module::kStore;
    if (m->buffer == BufferId::kInp || m->buffer == BufferId::kWgt) return Module::kLoad;
  }
  return Module::kCompute;
}

Simulator::Simulator(const VtaConfig& cfg) : cfg_(cfg), sram_((validate(cfg), cfg)) {}

void Simulator::exec_load(const isa::MemInstr& m, const dram::DramImage& dram) {
  if (m.buffer == BufferId::kOut) Fail("LOAD into the OUT buffer is not supported");
  const uint32_t bs = cfg_.block_size;
  uint64_t depth = 0;
  uint64_t elems = 0;  // elements per structure
  switch (m.buffer) {
    case BufferId::kUop:
      depth = cfg_.uop_buf_depth;
      elems = 1;
      break;
    case BufferId::kInp:
      depth = cfg_.inp_buf_depth;
      elems = bs;
      break;
    case BufferId::kWgt:
      depth = cfg_.wgt_buf_depth;
      elems = uint64_t{bs} * bs;
      break;
    case BufferId::kAcc:
      depth = cfg_.acc_buf_depth;
      elems = bs;
      break;
    case BufferId::kOut:
      break;
  }
  const dram::RegionKind kind = dram::KindOfBuffer(m.buffer);
  const uint64_t sbytes = dram::structure_bytes(kind, cfg_);
  const uint64_t row_len = uint64_t{m.x_pad_left} + m.x_size + m.x_pad_right;
  const uint64_t rows = uint64_t{m.y_pad_top} + m.y_size + m.y_pad_bottom;
  if (rows * row_len > 0) {
    CheckIndex(m.sram_base + rows * row_len - 1, depth, isa::BufferName(m.buffer), "in LOAD");
  }

  uint64_t sram_idx = m.sram_base;
  for (uint64_t r = 0; r < rows; ++r) {
    const bool pad_row = r < m.y_pad_top || r >= m.y_pad_top + m.y_size;
    for (uint64_t c = 0; c < row_len; ++c, ++sram_idx) {
      const bool pad = pad_row || c < m.x_pad_left || c >= m.x_pad_left + m.x_size;
      std::span<const uint8_t> src;
      if (!pad) {
        uint64_t log = uint64_t{m.dram_base} + (r - m.y_pad_top) * m.x_stride + (c - m.x_pad_left);
        uint64_t phy = dram.physical(log, kind);
        try {
          src = dram.bytes(phy, sbytes);
        } catch (const Error& e) {
          Fail(fmt::format("LOAD {} reads DRAM logical {:#x}: {}", isa::BufferName(m.buffer), log, e.what()));
        }
      }
      switch (m.buffer) {
        case BufferId::kUop: {
          uint32_t w = 0;
          if (!pad) {
            for (int k = 0; k < 4; ++k) w |= uint32_t{src[k]} << (8 * k);
          }
          sram_.uop[sram_idx] = isa::decode_uop(w);
          break;
        }
        case BufferId::kInp:
        case BufferId::kWgt: {
          auto& buf = m.buffer == BufferId::kInp ? sram_.inp : sram_.wgt;
          int8_t* dst = buf.data() + sram_idx * elems;
          for (uint64_t e = 0; e < elems; ++e) dst[e] = pad ? 0 : static_cast<int8_t>(src[e]);
          break;
        }
        case BufferId::kAcc: {
          int32_t* dst = sram_.acc.data() + sram_idx * elems;
          for (uint64_t e = 0; e < elems; ++e) {
            uint32_t w = 0;
            if (!pad) {
              for (int k = 0; k < 4; ++k) w |= uint32_t{src[e * 4 + k]} << (8 * k);
            }
            dst[e] = static_cast<int32_t>(w);
          }
          break;
        }
        case BufferId::kOut:
          break;
      }
    }
  }
  stats_.dram_bytes_loaded += uint64_t{m.y_size} * m.x_size * sbytes;
}

void Simulator::exec_store(const isa::MemInstr& m, dram::DramImage& dram) {
  if (m.buffer != BufferId::kOut) Fail(fmt::format("STORE from the {} buffer", isa::BufferName(m.buffer)));
  if (m.y_pad_top || m.y_pad_bottom || m.x_pad_left || m.x_pad_right) Fail("STORE with padding");
  const uint32_t bs = cfg_.block_size;
  const uint64_t count = uint64_t{m.y_size} * m.x_size;
  if (count == 0) return;
  CheckIndex(m.sram_base + count - 1, cfg_.out_buf_depth, "OUT", "in STORE");
  // OUT vectors are the truncated accumulators of the range being stored.
  truncate_acc_to_out(m.sram_base, static_cast<uint32_t>(count));
  const uint64_t vbytes = cfg_.out_vector_bytes();
  uint64_t sram_idx = m.sram_base;
  for (uint64_t r = 0; r < m.y_size; ++r) {
    for (uint64_t c = 0; c < m.x_size; ++c, ++sram_idx) {
      uint64_t log = uint64_t{m.dram_base} + r * m.x_stride + c;
      std::span<uint8_t> dst;
      try {
        dst = dram.bytes(dram.physical(log, dram::RegionKind::kOut), vbytes);
      } catch (const Error& e) {
        Fail(fmt::format("STORE writes DRAM logical {:#x}: {}", log, e.what()));
      }
      const int8_t* src = sram_.out.data() + sram_idx * bs;
      for (uint32_t e = 0; e < bs; ++e) dst[e] = static_cast<uint8_t>(src[e]);
    }
  }
  stats_.dram_bytes_stored += count * vbytes;
}

void Simulator::truncate_acc_to_out(uint32_t first, uint32_t count) {
  const uint32_t bs = cfg_.block_size;
  for (uint64_t i = uint64_t{first} * bs; i < (uint64_t{first} + count) * bs; ++i) {
    sram_.out[i] = static_cast<int8_t>(static_cast<uint8_t>(sram_.acc[i] & 0xFF));
  }
}

void Simulator::exec_gemm(const isa::GemmInstr& g) {
  const uint32_t bs = cfg_.block_size;
  for (uint32_t i_out = 0; i_out < g.lp_out; ++i_out) {
    for (uint32_t i_in = 0; i_in < g.lp_in; ++i_in) {
      for (uint32_t u = g.uop_begin; u < g.uop_end; ++u) {
        auto where = [&] { return fmt::format("in GEMM at (i_out={}, i_in={}, uop={})", i_out, i_in, u); };
        CheckIndex(u, cfg_.uop_buf_depth, "UOP", where());
        const isa::Uop& uop = sram_.uop[u];
        uint64_t x = uint64_t{i_out} * g.acc_factor_out + uint64_t{i_in} * g.acc_factor_in + uop.acc_idx;
        CheckIndex(x, cfg_.acc_buf_depth, "ACC", where());
        int32_t* acc = sram_.acc.data() + x * bs;
        if (g.reset) {
          std::fill(acc, acc + bs, 0);
          ++stats_.reset_loop_count;
          continue;
        }
        uint64_t y = uint64_t{i_out} * g.inp_factor_out + uint64_t{i_in} * g.inp_factor_in + uop.inp_idx;
        uint64_t z = uint64_t{i_out} * g.wgt_factor_out + uint64_t{i_in} * g.wgt_factor_in + uop.wgt_idx;
        CheckIndex(y, cfg_.inp_buf_depth, "INP", where());
        CheckIndex(z, cfg_.wgt_buf_depth, "WGT", where());
        const int8_t* in = sram_.inp.data() + y * bs;
        const int8_t* w = sram_.wgt.data() + z * bs * bs;
        // acc[x] += in * W^T, where the stored matrix row oc holds output channel oc.
        for (uint32_t oc = 0; oc < bs; ++oc) {
          uint32_t sum = static_cast<uint32_t>(acc[oc]);
          for (uint32_t ic = 0; ic < bs; ++ic) {
            sum += static_cast<uint32_t>(int32_t{in[ic]} * int32_t{w[oc * bs + ic]});
          }
          acc[oc] = static_cast<int32_t>(sum);
        }
        ++stats_.gemm_loop_count;
      }
      if (!g.reset && g.uop_end > g.uop_begin) ++stats_.gemm_inner_loop_count;
    }
  }
}

void Simulator::exec_alu(const isa::AluInstr& a) {
  const uint32_t bs = cfg_.block_size;
  for (uint32_t i_out = 0; i_out < a.lp_out; ++i_out) {
    for (uint32_t i_in = 0; i_in < a.lp_in; ++i_in) {
      for (uint32_t u = a.uop_begin; u < a.uop_end; ++u) {
        auto where = [&] { return fmt::format("in ALU at (i_out={}, i_in={}, uop={})", i_out, i_in, u); };
        CheckIndex(u, cfg_.uop_buf_depth, "UOP", where());
        const isa::Uop& uop = sram_.uop[u];
        uint64_t x = uint64_t{i_out} * a.dst_factor_out + uint64_t{i_in} * a.dst_factor_in + uop.acc_idx;
        uint64_t y = uint64_t{i_out} * a.src_factor_out + uint64_t{i_in} * a.src_factor_in + uop.inp_idx;
        CheckIndex(x, cfg_.acc_buf_depth, "ACC", where());
        CheckIndex(y, cfg_.acc_buf_depth, "ACC", where());
        int32_t* dst = sram_.acc.data() + x * bs;
        const int32_t* src = sram_.acc.data() + y * bs;
        for (uint32_t e = 0; e < bs; ++e) {
          dst[e] = a.reset ? 0 : AluApply(a.alu_opcode, dst[e], a.use_imm ? a.imm : src[e]);
        }
        ++stats_.alu_loop_count;
      }
    }
  }
}

std::string Simulator::account_deps(const isa::Instruction& instr) {
  const isa::DepFlags& d = isa::DepsOf(instr);
  const Module mod = ModuleOf(instr);
  std::vector<std::string> bad;
  auto pop = [&](int64_t& q, const char* name) {
    if (q <= 0) {
      bad.push_back(fmt::format("pop from empty {} queue", name));
    } else {
      --q;
    }
  };
  switch (mod) {
    case Module::kLoad:
      if (d.pop_prev) bad.push_back("load module has no previous queue to pop");
      if (d.push_prev) bad.push_back("load module has no previous queue to push");
      if (d.pop_next) pop(c2l_, "compute->load");
      if (d.push_next) ++l2c_;
      break;
    case Module::kCompute:
      if (d.pop_prev) pop(l2c_, "load->compute");
      if (d.pop_next) pop(s2c_, "store->compute");
      if (d.push_prev) ++c2l_;
      if (d.push_next) ++c2s_;
      break;
    case Module::kStore:
      if (d.pop_next) bad.push_back("store module has no next queue to pop");
      if (d.push_next) bad.push_back("store module has no next queue to push");
      if (d.pop_prev) pop(c2s_, "compute->store");
      if (d.push_prev) ++s2c_;
      break;
  }
  std::string out;
  for (const auto& b : bad) out += (out.empty() ? "" : "; ") + b;
  return out;
}

std::vector<std::string> Simulator::leftover_tokens() const {
  std::vector<std::string> out;
  auto check = [&](int64_t q, const char* name) {
    if (q != 0) out.push_back(fmt::format("{} token(s) left in {} queue", q, name));
  };
  check(l2c_, "load->compute");
  check(c2l_, "compute->load");
  check(c2s_, "compute->store");
  check(s2c_, "store->compute");
  return out;
}

bool Simulator::step(const isa::Instruction& instr, dram::DramImage& dram) {
  ++stats_.instruction_count;
  return std::visit(
      [&](const auto& i) -> bool {
        using T = std::decay_t<decltype(i)>;
        if constexpr (std::is_same_v<T, isa::MemInstr>) {
          if (i.opcode == isa::Opcode::kStore) {
            exec_store(i, dram);
          } else {
            exec_load(i, dram);
          }
        } else if constexpr (std::is_same_v<T, isa::GemmInstr>) {
          exec_gemm(i);
        } else if constexpr (std::is_same_v<T, isa::AluInstr>) {
          exec_alu(i);
        } else {
          return false;
        }
        return true;
      },
      instr);
}

RunResult run(dram::DramImage& dram, const dram::Region& instr_region, const RunOptions& options) {
  if (instr_region.size_bytes % isa::kInstrBytes != 0) {
    throw Error(ErrorKind::kDecode, fmt::format("instruction region of {} bytes is not a multiple of {}",
                                                instr_region.size_bytes, isa::kInstrBytes));
  }
  Simulator sim(dram.config());
  RunResult result;
  auto report = [&](const std::string& msg) {
    if (options.strict_deps) throw Error(ErrorKind::kDependency, msg);
    result.dep_warnings.push_back(msg);
  };

  const uint64_t n = instr_region.size_bytes / isa::kInstrBytes;
  bool finished = false;
  for (uint64_t pc = 0; pc < n && !finished; ++pc) {
    auto word = dram.bytes(instr_region.phy_start + pc * isa::kInstrBytes, isa::kInstrBytes);
    isa::Instruction instr;
    try {
      instr = isa::decode_instruction(std::span<const uint8_t, isa::kInstrBytes>(word.data(), isa::kInstrBytes));
    } catch (const Error& e) {
      throw Error(ErrorKind::kDecode, fmt::format("{} at offset {}", e.what(), pc * isa::kInstrBytes));
    }
    if (options.trace) *options.trace << fmt::format("{:5d} {}\n", pc, isa::format_instruction(instr));
    std::string dep = sim.account_deps(instr);
    if (!dep.empty()) report(fmt::format("instruction {}: {}", pc, dep));
    try {
      finished = !sim.step(instr, dram);
    } catch (const Error& e) {
      throw Error(e.kind(), fmt::format("instruction {} ({}): {}", pc, isa::format_instruction(instr), e.what()));
    }
  }
  if (!finished) throw Error(ErrorKind::kSimulation, "instruction stream ends without FINISH");
  for (const auto& msg : sim.leftover_tokens()) report(msg);
  result.stats = sim.stats();
  return result;
}

}  // namespace sim
}  // namespace vta
