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

// Compile, simulate and check a matmul job against the oracle.
#ifndef VTA_TESTS_JOB_UTIL_H_
#define VTA_TESTS_JOB_UTIL_H_

#include <optional>
#include <random>
#include <vector>

#include "test_util.h"
#include "vta/dram.h"
#include "vta/funcsim.h"
#include "vta/oracle.h"
#include "vta/progbuild.h"

namespace vta {
namespace test {

struct JobOutcome {
  std::vector<uint8_t> out;
  std::vector<uint8_t> expected;
  prog::CompiledJob compiled;
  sim::RunResult run;
};

inline JobOutcome RunJob(const VtaConfig& cfg, const blocks::Matrix& a, const blocks::Matrix& b,
                         const std::optional<blocks::Matrix>& x, const std::vector<prog::AluStep>& ops,
                         bool strict = true) {
  prog::MatMulJob job;
  job.a = blocks::to_blocks(a, cfg.block_size, blocks::Kind::kInp);
  job.b = blocks::to_blocks(b, cfg.block_size, blocks::Kind::kWgt);
  if (x) job.x = blocks::to_blocks(*x, cfg.block_size, blocks::Kind::kAcc);
  job.alu = ops;
  dram::DramImage img(cfg);
  JobOutcome o;
  o.compiled = prog::compile_matmul(job, img);
  sim::RunOptions opts;
  opts.strict_deps = strict;
  o.run = sim::run(img, o.compiled.regions.instr, opts);
  o.out = img.read_region(o.compiled.regions.out);
  o.expected = oracle::expected_out_bytes(a, b, x ? &*x : nullptr, ops, cfg.block_size);
  return o;
}

inline std::vector<prog::AluStep> RandomAluOps(std::mt19937_64& rng) {
  std::vector<prog::AluStep> ops;
  const int n = static_cast<int>(rng() % 5);
  for (int i = 0; i < n; ++i) {
    prog::AluStep s;
    s.op = static_cast<isa::AluOp>(rng() % 4);
    if (s.op == isa::AluOp::kShr) {
      s.imm = static_cast<int32_t>(rng() % 12);
    } else if (rng() % 4 != 0) {
      s.imm = static_cast<int32_t>(rng() % 65536) - 32768;
    }
    ops.push_back(s);
  }
  return ops;
}

}  // namespace test
}  // namespace vta

#endif  // VTA_TESTS_JOB_UTIL_H_
