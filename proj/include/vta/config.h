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
 * \file config.h
 * \brief Hardware configuration of the accelerator.
 *
 * Every other module is parameterized by a VtaConfig. Instruction field
 * widths are not part of it; they are fixed by the ISA (see isa.h), and
 * validate() rejects configurations whose buffers cannot be addressed by
 * those fields.
 */
#ifndef VTA_CONFIG_H_
#define VTA_CONFIG_H_

#include <cstdint>

namespace vta {

struct VtaConfig {
  /*! \brief Elements per INP/ACC/OUT vector; WGT is block_size x block_size. */
  uint32_t block_size{16};
  uint32_t inp_buf_depth{2048};
  uint32_t wgt_buf_depth{1024};
  uint32_t acc_buf_depth{2048};
  uint32_t out_buf_depth{2048};
  uint32_t uop_buf_depth{8192};
  uint32_t page_bytes{4096};
  uint32_t inp_width_bytes{1};
  uint32_t wgt_width_bytes{1};
  uint32_t out_width_bytes{1};
  uint32_t acc_width_bytes{4};

  uint32_t inp_vector_bytes() const { return block_size * inp_width_bytes; }
  uint32_t acc_vector_bytes() const { return block_size * acc_width_bytes; }
  uint32_t out_vector_bytes() const { return block_size * out_width_bytes; }
  uint32_t wgt_matrix_bytes() const { return block_size * block_size * wgt_width_bytes; }

  bool operator==(const VtaConfig&) const = default;
};

VtaConfig default_config();

/*!
 * \brief Check every configuration invariant.
 * \throws Error(kConfig) naming the first violated invariant.
 */
void validate(const VtaConfig& cfg);

}  // namespace vta

#endif  // VTA_CONFIG_H_
