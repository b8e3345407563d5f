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
 * \file error.h
 * \brief Exception type shared by every stage of the toolchain.
 */
#ifndef VTA_ERROR_H_
#define VTA_ERROR_H_

#include <stdexcept>
#include <string>

namespace vta {

/*! \brief Coarse classification used by the CLI to pick exit codes and stage names. */
enum class ErrorKind {
  kConfig,
  kEncoding,
  kDecode,
  kAddress,
  kCapacity,
  kShape,
  kDomain,
  kSimulation,
  kDependency,
  kInput,
  kMissingArtifact,
  kInternal,
};

const char* ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace vta

#endif  // VTA_ERROR_H_
