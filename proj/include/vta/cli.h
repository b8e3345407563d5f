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
 * \file cli.h
 * \brief Batch commands behind the vtac tool: compile, run, verify, disasm, inspect.
 *
 * A compiled job is a directory of raw little-endian binaries plus
 * dram_layout.json, which records every DRAM region and the file that fills it.
 */
#ifndef VTA_CLI_H_
#define VTA_CLI_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vta/config.h"
#include "vta/progbuild.h"
#include "vta/tensorfront.h"

namespace vta {
namespace cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitVerifyFail = 1,
  kExitInputError = 2,
  kExitMissingArtifact = 3,
  kExitInternalError = 4,
};

struct MatMulManifest {
  blocks::Matrix a{0, 0};
  blocks::Matrix b{0, 0};
  std::optional<blocks::Matrix> x;
  std::vector<prog::AluStep> alu;
  uint32_t uop_epsilon{1};
};

struct NetworkManifest {
  tensor::Tensor4 input;
  std::vector<tensor::LayerSpec> layers;
};

struct Manifest {
  VtaConfig config;
  uint64_t dram_offset{0};
  uint64_t dram_capacity{0};
  bool is_network{false};
  MatMulManifest matmul;
  NetworkManifest network;
  /*! \brief Output directory named in the manifest, if any. */
  std::optional<std::filesystem::path> out_dir;
};

/*!
 * \brief Parse a JSON manifest. Data references resolve relative to base_dir.
 * \throws Error(kInput) naming the offending key.
 */
Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir);
Manifest load_manifest(const std::filesystem::path& path);

int cmd_compile(const std::filesystem::path& manifest, const std::optional<std::filesystem::path>& out_dir,
                std::ostream& out, std::ostream& err);
int cmd_run(const std::filesystem::path& dir, const std::optional<std::filesystem::path>& trace, bool strict_deps,
            std::ostream& out, std::ostream& err);
int cmd_verify(const std::filesystem::path& dir, std::ostream& out, std::ostream& err);
/*! \brief path is a compiled directory or a raw instruction file; uop_file pairs with the latter. */
int cmd_disasm(const std::filesystem::path& path, const std::optional<std::filesystem::path>& uop_file,
               std::ostream& out, std::ostream& err);
int cmd_inspect(const std::filesystem::path& dir, std::ostream& out, std::ostream& err);

}  // namespace cli
}  // namespace vta

#endif  // VTA_CLI_H_
