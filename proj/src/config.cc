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

#include "vta/config.h"

#include <fmt/format.h>

#include <bit>

#include "vta/error.h"
#include "vta/isa.h"

namespace vta {

const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
      return "config";
    case ErrorKind::kEncoding:
      return "encoding";
    case ErrorKind::kDecode:
      return "decode";
    case ErrorKind::kAddress:
      return "address";
    case ErrorKind::kCapacity:
      return "capacity";
    case ErrorKind::kShape:
      return "shape";
    case ErrorKind::kDomain:
      return "domain";
    case ErrorKind::kSimulation:
      return "simulation";
    case ErrorKind::kDependency:
      return "dependency";
    case ErrorKind::kInput:
      return "input";
    case ErrorKind::kMissingArtifact:
      return "missing artifact";
    case ErrorKind::kInternal:
      return "internal";
  }
  return "unknown";
}

VtaConfig default_config() { return VtaConfig{}; }

namespace {

void Require(bool cond, const std::string& what) {
  if (!cond) throw Error(ErrorKind::kConfig, what);
}

bool PowerOfTwoAtLeast2(uint32_t v) { return v >= 2 && std::has_single_bit(v); }

}  // namespace

void validate(const VtaConfig& cfg) {
  Require(PowerOfTwoAtLeast2(cfg.block_size), "block_size not power of two");
  Require(PowerOfTwoAtLeast2(cfg.inp_buf_depth), "inp_buf_depth not power of two");
  Require(PowerOfTwoAtLeast2(cfg.wgt_buf_depth), "wgt_buf_depth not power of two");
  Require(PowerOfTwoAtLeast2(cfg.acc_buf_depth), "acc_buf_depth not power of two");
  Require(PowerOfTwoAtLeast2(cfg.out_buf_depth), "out_buf_depth not power of two");
  Require(PowerOfTwoAtLeast2(cfg.uop_buf_depth), "uop_buf_depth not power of two");
  Require(PowerOfTwoAtLeast2(cfg.page_bytes), "page_bytes not power of two");
  Require(cfg.inp_width_bytes == 1, "inp width must be 1");
  Require(cfg.wgt_width_bytes == 1, "wgt width must be 1");
  Require(cfg.out_width_bytes == 1, "out width must be 1");
  Require(cfg.acc_width_bytes == 4, "acc width must be 4");

  // Buffers must be addressable by the fixed micro-op and loop fields.
  Require(cfg.acc_buf_depth <= (1u << isa::kUopAccBits), "acc_buf_depth exceeds micro-op index width");
  Require(cfg.inp_buf_depth <= (1u << isa::kUopInpBits), "inp_buf_depth exceeds micro-op index width");
  Require(cfg.wgt_buf_depth <= (1u << isa::kUopWgtBits), "wgt_buf_depth exceeds micro-op index width");
  Require(cfg.uop_buf_depth <= (1u << isa::kUopBeginBits), "uop_buf_depth exceeds uop_begin width");
  Require(cfg.out_buf_depth <= cfg.acc_buf_depth, "out_buf_depth exceeds acc_buf_depth");
  Require(cfg.block_size <= (1u << isa::kInpFactorBits) - 1, "block_size exceeds factor width");
  // Every structure must tile a page so page-aligned regions have integral logical addresses.
  Require(cfg.page_bytes % cfg.wgt_matrix_bytes() == 0, "page_bytes not a multiple of the WGT matrix size");
  Require(cfg.page_bytes % cfg.acc_vector_bytes() == 0, "page_bytes not a multiple of the ACC vector size");
}

}  // namespace vta
