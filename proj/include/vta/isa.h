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
 * \file isa.h
 * \brief Instruction and micro-op formats with their binary codec.
 *
 * Instructions are 128-bit little-endian words. The opcode occupies bits
 * [0, 3) and the dependency flags bits [3, 7); the remaining fields follow
 * LSB-first in declaration order. A field never straddles the 64-bit word
 * boundary: when it would, it starts at bit 64 instead. This reproduces the
 * bitfield layout of the reference hardware headers.
 *
 * Micro-ops are 32-bit words: acc index in [0, 11), inp index in [11, 22),
 * wgt index in [22, 32).
 */
#ifndef VTA_ISA_H_
#define VTA_ISA_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace vta {
namespace isa {

inline constexpr uint32_t kInstrBytes = 16;
inline constexpr uint32_t kUopBytes = 4;

inline constexpr uint32_t kOpcodeBits = 3;
inline constexpr uint32_t kMemIdBits = 3;
inline constexpr uint32_t kSramAddrBits = 16;
inline constexpr uint32_t kDramAddrBits = 32;
inline constexpr uint32_t kSizeBits = 16;
inline constexpr uint32_t kStrideBits = 16;
inline constexpr uint32_t kPadBits = 4;
inline constexpr uint32_t kUopBeginBits = 13;
inline constexpr uint32_t kUopEndBits = 14;
inline constexpr uint32_t kLoopIterBits = 14;
inline constexpr uint32_t kAccFactorBits = 11;
inline constexpr uint32_t kInpFactorBits = 11;
inline constexpr uint32_t kWgtFactorBits = 10;
inline constexpr uint32_t kAluOpcodeBits = 2;
inline constexpr uint32_t kAluImmBits = 16;
inline constexpr uint32_t kUopAccBits = 11;
inline constexpr uint32_t kUopInpBits = 11;
inline constexpr uint32_t kUopWgtBits = 10;

enum class Opcode : uint8_t {
  kLoad = 0,
  kStore = 1,
  kGemm = 2,
  kFinish = 3,
  kAlu = 4,
};

enum class BufferId : uint8_t {
  kUop = 0,
  kWgt = 1,
  kInp = 2,
  kAcc = 3,
  kOut = 4,
};

enum class AluOp : uint8_t {
  kMin = 0,
  kMax = 1,
  kAdd = 2,
  kShr = 3,
};

const char* BufferName(BufferId id);
const char* AluOpName(AluOp op);
std::optional<AluOp> ParseAluOp(const std::string& name);

struct DepFlags {
  bool pop_prev{false};
  bool pop_next{false};
  bool push_prev{false};
  bool push_next{false};

  bool operator==(const DepFlags&) const = default;
};

/*! \brief LOAD or STORE: a 2D strided copy between DRAM and one SRAM buffer. */
struct MemInstr {
  Opcode opcode{Opcode::kLoad};
  DepFlags deps;
  BufferId buffer{BufferId::kUop};
  /*! \brief SRAM index, in structures of the target buffer. */
  uint32_t sram_base{0};
  /*! \brief DRAM logical address, in structures of the target buffer. */
  uint32_t dram_base{0};
  uint32_t y_size{0};
  uint32_t x_size{0};
  uint32_t x_stride{0};
  uint32_t y_pad_top{0};
  uint32_t y_pad_bottom{0};
  uint32_t x_pad_left{0};
  uint32_t x_pad_right{0};

  bool operator==(const MemInstr&) const = default;
};

/*!
 * \brief Three-level GEMM loop nest.
 *
 * For each (out, in, uop) the accumulator vector
 * acc[out*acc_factor_out + in*acc_factor_in + uop.acc] receives the product of
 * one input vector with the transpose of one weight matrix.
 */
struct GemmInstr {
  DepFlags deps;
  bool reset{false};
  uint32_t uop_begin{0};
  uint32_t uop_end{0};
  uint32_t lp_out{0};
  uint32_t lp_in{0};
  uint32_t acc_factor_out{0};
  uint32_t acc_factor_in{0};
  uint32_t inp_factor_out{0};
  uint32_t inp_factor_in{0};
  uint32_t wgt_factor_out{0};
  uint32_t wgt_factor_in{0};

  bool operator==(const GemmInstr&) const = default;
};

/*!
 * \brief Element-wise accumulator operation.
 *
 * The micro-op acc field addresses the destination vector, the inp field the
 * source vector; both live in the accumulator buffer.
 */
struct AluInstr {
  DepFlags deps;
  bool reset{false};
  uint32_t uop_begin{0};
  uint32_t uop_end{0};
  uint32_t lp_out{0};
  uint32_t lp_in{0};
  uint32_t dst_factor_out{0};
  uint32_t dst_factor_in{0};
  uint32_t src_factor_out{0};
  uint32_t src_factor_in{0};
  AluOp alu_opcode{AluOp::kMin};
  bool use_imm{false};
  int32_t imm{0};

  bool operator==(const AluInstr&) const = default;
};

struct FinishInstr {
  DepFlags deps;

  bool operator==(const FinishInstr&) const = default;
};

using Instruction = std::variant<MemInstr, GemmInstr, AluInstr, FinishInstr>;
using InstrWord = std::array<uint8_t, kInstrBytes>;

struct Uop {
  uint32_t acc_idx{0};
  uint32_t inp_idx{0};
  uint32_t wgt_idx{0};

  bool operator==(const Uop&) const = default;
};

Opcode OpcodeOf(const Instruction& instr);
DepFlags& DepsOf(Instruction& instr);
const DepFlags& DepsOf(const Instruction& instr);

/*! \throws Error(kEncoding) naming the first field that exceeds its width. */
InstrWord encode_instruction(const Instruction& instr);
/*! \throws Error(kDecode) on an opcode or buffer id outside its enum. */
Instruction decode_instruction(std::span<const uint8_t, kInstrBytes> word);

uint32_t encode_uop(const Uop& uop);
Uop decode_uop(uint32_t word);

std::vector<uint8_t> encode_program(std::span<const Instruction> instrs);
std::vector<uint8_t> encode_uops(std::span<const Uop> uops);
/*! \throws Error(kDecode) with the byte offset of the faulting word. */
std::vector<Instruction> decode_program(std::span<const uint8_t> bytes);
std::vector<Uop> decode_uops(std::span<const uint8_t> bytes);

/*! \brief One-line mnemonic form of an instruction, without micro-op detail. */
std::string format_instruction(const Instruction& instr);
std::string format_uop(const Uop& uop);

struct DisasmOptions {
  /*!
   * \brief Logical DRAM address of the first word of the micro-op stream.
   *  When unset, the smallest dram_base among micro-op loads is used.
   */
  std::optional<uint32_t> uop_log_base;
};

/*!
 * \brief Render an instruction stream, resolving GEMM/ALU micro-op ranges
 *  against the micro-op loads that precede them.
 */
std::string disassemble(std::span<const uint8_t> instr_bytes,
                        std::span<const uint8_t> uop_bytes,
                        const DisasmOptions& options = {});

}  // namespace isa
}  // namespace vta

#endif  // VTA_ISA_H_
