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
 * \file vtac.cc
 * \brief vtac: compile, run and check VTA programs from the command line.
 */
#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "vta/cli.h"

int main(int argc, char** argv) {
  namespace fs = std::filesystem;
  using namespace vta::cli;
  CLI::App app{"VTA program compiler and functional simulator"};
  app.require_subcommand(1);

  fs::path manifest, dir, path;
  std::optional<fs::path> out_dir, trace, uop;
  bool strict = false;

  auto* compile = app.add_subcommand("compile", "Compile a JSON manifest into VTA binaries");
  compile->add_option("manifest", manifest, "Manifest file")->required();
  compile->add_option("-o,--out", out_dir, "Output directory");

  auto* run = app.add_subcommand("run", "Simulate a compiled directory; writes out.bin and stats.json");
  run->add_option("dir", dir, "Compiled directory")->required();
  run->add_option("--trace", trace, "Per-instruction trace file");
  run->add_flag("--strict-deps", strict, "Fail on dependency token violations");

  auto* verify = app.add_subcommand("verify", "Compare out.bin with expected_out.bin");
  verify->add_option("dir", dir, "Compiled directory")->required();

  auto* disasm = app.add_subcommand("disasm", "Disassemble a compiled directory or an instruction file");
  disasm->add_option("path", path, "Directory or instructions file")->required();
  disasm->add_option("--uop", uop, "Micro-op file paired with an instructions file");

  auto* inspect = app.add_subcommand("inspect", "Show the DRAM layout and region contents");
  inspect->add_option("dir", dir, "Compiled directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  }
  try {
    if (*compile) return cmd_compile(manifest, out_dir, std::cout, std::cerr);
    if (*run) return cmd_run(dir, trace, strict, std::cout, std::cerr);
    if (*verify) return cmd_verify(dir, std::cout, std::cerr);
    if (*disasm) return cmd_disasm(path, uop, std::cout, std::cerr);
    if (*inspect) return cmd_inspect(dir, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "vtac: internal error: " << e.what() << "\n";
  }
  return kExitInternalError;
}
