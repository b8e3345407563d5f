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
 * \file cli.cc
 * \brief Manifest parsing, artifact I/O and the vtac commands.
 */
#include "vta/cli.h"

#include <fmt/format.h>

#include <algorithm>
#include <deque>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "json.hpp"
#include "vta/dram.h"
#include "vta/error.h"
#include "vta/funcsim.h"
#include "vta/isa.h"
#include "vta/oracle.h"

namespace vta {
namespace cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kLayoutFile = "dram_layout.json";
constexpr const char* kExpectedFile = "expected_out.bin";
constexpr const char* kOutFile = "out.bin";
constexpr const char* kStatsFile = "stats.json";
constexpr size_t kTraceTail = 10;

/*! \brief Pipeline stage tag carried into diagnostics. */
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::exception& cause)
      : std::runtime_error(cause.what()), stage_(std::move(stage)), exit_(ExitFor(cause)) {}
  const std::string& stage() const { return stage_; }
  int exit_code() const { return exit_; }

  static int ExitFor(const std::exception& e) {
    if (const auto* v = dynamic_cast<const Error*>(&e)) {
      switch (v->kind()) {
        case ErrorKind::kMissingArtifact:
          return kExitMissingArtifact;
        case ErrorKind::kInternal:
          return kExitInternalError;
        default:
          return kExitInputError;
      }
    }
    if (dynamic_cast<const json::exception*>(&e)) return kExitInputError;
    return kExitInternalError;
  }

 private:
  std::string stage_;
  int exit_;
};

template <typename F>
auto Stage(const char* name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e);
  }
}

int Report(const char* cmd, const StageError& e, std::ostream& err) {
  err << fmt::format("vtac {}: {} failed: {}\n", cmd, e.stage(), e.what());
  return e.exit_code();
}

std::vector<uint8_t> ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kMissingArtifact, fmt::format("missing artifact {}", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteFile(const fs::path& path, std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kInput, fmt::format("cannot write {}", path.string()));
}

void WriteText(const fs::path& path, const std::string& text) {
  WriteFile(path, {reinterpret_cast<const uint8_t*>(text.data()), text.size()});
}

// ---------------------------------------------------------------- manifest

[[noreturn]] void Bad(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::kInput, fmt::format("manifest {}: {}", where, what));
}

const json& Need(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) Bad(where, fmt::format("missing key \"{}\"", key));
  return j.at(key);
}

uint64_t Unsigned(const json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<int64_t>() < 0) Bad(where, "expected a non-negative integer");
  return j.get<uint64_t>();
}

std::vector<uint32_t> Shape(const json& j, const std::string& where, size_t min_rank, size_t max_rank) {
  const json& s = Need(j, "shape", where);
  if (!s.is_array() || s.size() < min_rank || s.size() > max_rank) {
    Bad(where + ".shape", fmt::format("expected {} to {} dimensions", min_rank, max_rank));
  }
  std::vector<uint32_t> dims;
  for (size_t i = 0; i < s.size(); ++i) {
    uint64_t d = Unsigned(s[i], fmt::format("{}.shape[{}]", where, i));
    if (d == 0 || d > UINT32_MAX) Bad(fmt::format("{}.shape[{}]", where, i), "dimension must be positive");
    dims.push_back(static_cast<uint32_t>(d));
  }
  return dims;
}

/*!
 * \brief Element data from exactly one of "file" (raw little-endian),
 *  "values" (inline list) or "random" ({"seed", "min", "max"}).
 */
std::vector<int32_t> Data(const json& j, const std::string& where, size_t count, uint32_t width,
                          const fs::path& base) {
  const int64_t lo = width == 1 ? INT8_MIN : INT32_MIN;
  const int64_t hi = width == 1 ? INT8_MAX : INT32_MAX;
  int sources = j.contains("file") + j.contains("values") + j.contains("random");
  if (sources != 1) Bad(where, "needs exactly one of \"file\", \"values\", \"random\"");
  std::vector<int32_t> out(count);
  if (j.contains("file")) {
    if (!j["file"].is_string()) Bad(where + ".file", "expected a path");
    fs::path p = base / j["file"].get<std::string>();
    std::vector<uint8_t> raw = ReadFile(p);
    if (raw.size() != count * width) {
      Bad(where + ".file", fmt::format("{} holds {} bytes, shape needs {}", p.string(), raw.size(), count * width));
    }
    for (size_t i = 0; i < count; ++i) {
      if (width == 1) {
        out[i] = static_cast<int8_t>(raw[i]);
      } else {
        uint32_t v = 0;
        for (uint32_t b = 0; b < 4; ++b) v |= uint32_t{raw[i * 4 + b]} << (8 * b);
        out[i] = static_cast<int32_t>(v);
      }
    }
  } else if (j.contains("values")) {
    const json& v = j["values"];
    if (!v.is_array() || v.size() != count) Bad(where + ".values", fmt::format("expected {} integers", count));
    for (size_t i = 0; i < count; ++i) {
      if (!v[i].is_number_integer() || v[i].get<int64_t>() < lo || v[i].get<int64_t>() > hi) {
        Bad(fmt::format("{}.values[{}]", where, i), fmt::format("expected an integer in [{}, {}]", lo, hi));
      }
      out[i] = static_cast<int32_t>(v[i].get<int64_t>());
    }
  } else {
    const json& r = j["random"];
    uint64_t seed = Unsigned(Need(r, "seed", where + ".random"), where + ".random.seed");
    int64_t rlo = r.value("min", width == 1 ? int64_t{-128} : int64_t{-1024});
    int64_t rhi = r.value("max", width == 1 ? int64_t{127} : int64_t{1023});
    if (rlo > rhi || rlo < lo || rhi > hi) Bad(where + ".random", "bad min/max");
    // Plain modulo keeps the stream identical across standard libraries.
    std::mt19937_64 rng(seed);
    uint64_t span = static_cast<uint64_t>(rhi - rlo) + 1;
    for (auto& e : out) e = static_cast<int32_t>(rlo + static_cast<int64_t>(rng() % span));
  }
  return out;
}

blocks::Matrix MatrixOperand(const json& j, const std::string& where, uint32_t width, const fs::path& base) {
  auto dims = Shape(j, where, 2, 2);
  return blocks::Matrix(dims[0], dims[1], Data(j, where, size_t{dims[0]} * dims[1], width, base));
}

VtaConfig ParseConfig(const json& j) {
  VtaConfig cfg = default_config();
  if (j.is_null()) return cfg;
  if (!j.is_object()) Bad("config", "expected an object");
  const std::map<std::string, uint32_t VtaConfig::*> fields = {
      {"block_size", &VtaConfig::block_size},           {"inp_buf_depth", &VtaConfig::inp_buf_depth},
      {"wgt_buf_depth", &VtaConfig::wgt_buf_depth},     {"acc_buf_depth", &VtaConfig::acc_buf_depth},
      {"out_buf_depth", &VtaConfig::out_buf_depth},     {"uop_buf_depth", &VtaConfig::uop_buf_depth},
      {"page_bytes", &VtaConfig::page_bytes},           {"inp_width_bytes", &VtaConfig::inp_width_bytes},
      {"wgt_width_bytes", &VtaConfig::wgt_width_bytes}, {"out_width_bytes", &VtaConfig::out_width_bytes},
      {"acc_width_bytes", &VtaConfig::acc_width_bytes},
  };
  for (const auto& [key, value] : j.items()) {
    auto it = fields.find(key);
    if (it == fields.end()) Bad("config", fmt::format("unknown key \"{}\"", key));
    uint64_t v = Unsigned(value, "config." + key);
    if (v > UINT32_MAX) Bad("config." + key, "value too large");
    cfg.*(it->second) = static_cast<uint32_t>(v);
  }
  return cfg;
}

json ConfigJson(const VtaConfig& cfg) {
  return json{{"block_size", cfg.block_size},       {"inp_buf_depth", cfg.inp_buf_depth},
              {"wgt_buf_depth", cfg.wgt_buf_depth}, {"acc_buf_depth", cfg.acc_buf_depth},
              {"out_buf_depth", cfg.out_buf_depth}, {"uop_buf_depth", cfg.uop_buf_depth},
              {"page_bytes", cfg.page_bytes},       {"inp_width_bytes", cfg.inp_width_bytes},
              {"wgt_width_bytes", cfg.wgt_width_bytes}, {"out_width_bytes", cfg.out_width_bytes},
              {"acc_width_bytes", cfg.acc_width_bytes}};
}

std::vector<prog::AluStep> ParseAlu(const json& j, const std::string& where) {
  std::vector<prog::AluStep> steps;
  if (j.is_null()) return steps;
  if (!j.is_array()) Bad(where, "expected a list of {\"op\", \"imm\"}");
  for (size_t i = 0; i < j.size(); ++i) {
    std::string w = fmt::format("{}[{}]", where, i);
    const json& name = Need(j[i], "op", w);
    auto op = name.is_string() ? isa::ParseAluOp(name.get<std::string>()) : std::nullopt;
    if (!op) Bad(w + ".op", "expected one of MIN, MAX, ADD, SHR");
    prog::AluStep step{*op, std::nullopt};
    if (j[i].contains("imm")) {
      if (!j[i]["imm"].is_number_integer()) Bad(w + ".imm", "expected an integer");
      step.imm = j[i]["imm"].get<int32_t>();
    }
    steps.push_back(step);
  }
  return steps;
}

tensor::Tensor4 TensorOperand(const json& j, const std::string& where, const fs::path& base) {
  auto d = Shape(j, where, 4, 4);
  if (d[0] != 1) Bad(where + ".shape", "batch size must be 1");
  tensor::Tensor4 t(d[0], d[1], d[2], d[3]);
  t.data = Data(j, where, t.data.size(), 1, base);
  return t;
}

tensor::LayerSpec ParseLayer(const json& j, const std::string& where, const fs::path& base) {
  tensor::LayerSpec l;
  l.name = j.value("name", "");
  std::string type = Need(j, "type", where).get<std::string>();
  if (type == "conv") {
    l.kind = tensor::LayerKind::kConv;
  } else if (type == "fc") {
    l.kind = tensor::LayerKind::kFullyConnected;
  } else {
    Bad(where + ".type", "expected \"conv\" or \"fc\"");
  }
  l.stride = static_cast<uint32_t>(Unsigned(j.value("stride", json(1)), where + ".stride"));
  l.pad = static_cast<uint32_t>(Unsigned(j.value("pad", json(0)), where + ".pad"));
  l.relu = j.value("relu", false);
  l.requant_shift = static_cast<uint32_t>(Unsigned(j.value("requant_shift", json(0)), where + ".requant_shift"));
  const json& w = Need(j, "weight", where);
  auto d = Shape(w, where + ".weight", l.kind == tensor::LayerKind::kConv ? 4 : 2,
                 l.kind == tensor::LayerKind::kConv ? 4 : 2);
  l.weight = d.size() == 4 ? tensor::Tensor4(d[0], d[1], d[2], d[3]) : tensor::Tensor4(d[0], d[1], 1, 1);
  l.weight.data = Data(w, where + ".weight", l.weight.data.size(), 1, base);
  if (j.contains("bias")) {
    const json& b = j["bias"];
    auto bd = Shape(b, where + ".bias", 1, 1);
    if (bd[0] != l.weight.n) Bad(where + ".bias.shape", fmt::format("expected [{}]", l.weight.n));
    l.bias = Data(b, where + ".bias", bd[0], 4, base);
  }
  if (j.contains("pool") && !j["pool"].is_null()) {
    const json& p = j["pool"];
    tensor::Pooling pool;
    std::string mode = p.value("mode", "avg");
    if (mode == "avg") {
      pool.mode = tensor::PoolMode::kAvg;
    } else if (mode == "max") {
      pool.mode = tensor::PoolMode::kMax;
    } else {
      Bad(where + ".pool.mode", "expected \"avg\" or \"max\"");
    }
    pool.window = static_cast<uint32_t>(Unsigned(p.value("window", json(2)), where + ".pool.window"));
    pool.stride = static_cast<uint32_t>(Unsigned(p.value("stride", json(2)), where + ".pool.stride"));
    l.pool = pool;
  }
  return l;
}

std::string FileTag(const std::string& name) {
  std::string s = name;
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return s;
}

// ---------------------------------------------------------------- layout

struct NamedRegion {
  std::string name;
  dram::Region region;
  std::string file;  // empty: zero filled
};

json RegionJson(const NamedRegion& r) {
  json j{{"name", r.name},
         {"kind", dram::RegionKindName(r.region.kind)},
         {"phy_start", r.region.phy_start},
         {"size_bytes", r.region.size_bytes},
         {"log_start", r.region.log_start}};
  j["file"] = r.file.empty() ? json(nullptr) : json(r.file);
  return j;
}

struct Layout {
  json doc;
  VtaConfig cfg;
  std::vector<NamedRegion> regions;

  const NamedRegion& Find(const std::string& name) const {
    for (const auto& r : regions) {
      if (r.name == name) return r;
    }
    throw Error(ErrorKind::kInput, fmt::format("{} names unknown region \"{}\"", kLayoutFile, name));
  }
};

Layout ReadLayout(const fs::path& dir) {
  std::vector<uint8_t> raw = ReadFile(dir / kLayoutFile);
  Layout l;
  l.doc = json::parse(raw.begin(), raw.end());
  l.cfg = ParseConfig(l.doc.at("config"));
  validate(l.cfg);
  for (const json& r : l.doc.at("regions")) {
    NamedRegion nr;
    nr.name = r.at("name").get<std::string>();
    auto kind = dram::ParseRegionKind(r.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorKind::kInput, fmt::format("region {} has unknown kind", nr.name));
    nr.region = {*kind, r.at("phy_start").get<uint64_t>(), r.at("size_bytes").get<uint64_t>(),
                 r.at("log_start").get<uint64_t>()};
    if (!r.at("file").is_null()) nr.file = r.at("file").get<std::string>();
    l.regions.push_back(nr);
  }
  return l;
}

/*! \brief Rebuild the DRAM image a compile produced, filling regions from their files. */
dram::DramImage RestoreImage(const Layout& l, const fs::path& dir) {
  const json& d = l.doc.at("dram");
  dram::DramImage img(l.cfg, d.at("offset").get<uint64_t>(), d.at("capacity").get<uint64_t>());
  for (const auto& r : l.regions) img.adopt(r.region);
  for (const auto& r : l.regions) {
    if (r.file.empty()) continue;
    std::vector<uint8_t> bytes = ReadFile(dir / r.file);
    if (bytes.size() != r.region.size_bytes) {
      throw Error(ErrorKind::kInput, fmt::format("{} holds {} bytes, region {} is {} bytes", r.file, bytes.size(),
                                                 r.name, r.region.size_bytes));
    }
    img.write_region(r.region, bytes);
  }
  return img;
}

json LayerRunJson(const tensor::LayerRun& run, const std::map<uint64_t, std::string>& names) {
  json j{{"name", run.name},
         {"instr", names.at(run.instr.phy_start)},
         {"inp", names.at(run.inp.phy_start)},
         {"out", names.at(run.out.phy_start)},
         {"host_reshape", run.host_reshape},
         {"aliased", run.aliased},
         {"in", {run.in_c, run.in_h, run.in_w}},
         {"kernel", {run.kh, run.kw}},
         {"stride", run.stride},
         {"pad", run.pad},
         {"out_shape", {run.out_c, run.out_h, run.out_w}},
         {"out_grid", {run.out_grid_rows, run.out_grid_cols}}};
  if (run.pool) {
    j["pool"] = {{"mode", run.pool->mode == tensor::PoolMode::kAvg ? "avg" : "max"},
                 {"window", run.pool->window},
                 {"stride", run.pool->stride}};
  } else {
    j["pool"] = nullptr;
  }
  return j;
}

tensor::LayerRun LayerRunFrom(const json& j, const Layout& l) {
  tensor::LayerRun run;
  run.name = j.at("name").get<std::string>();
  run.instr = l.Find(j.at("instr").get<std::string>()).region;
  run.inp = l.Find(j.at("inp").get<std::string>()).region;
  run.out = l.Find(j.at("out").get<std::string>()).region;
  run.host_reshape = j.at("host_reshape").get<bool>();
  run.aliased = j.at("aliased").get<bool>();
  run.in_c = j.at("in")[0];
  run.in_h = j.at("in")[1];
  run.in_w = j.at("in")[2];
  run.kh = j.at("kernel")[0];
  run.kw = j.at("kernel")[1];
  run.stride = j.at("stride");
  run.pad = j.at("pad");
  run.out_c = j.at("out_shape")[0];
  run.out_h = j.at("out_shape")[1];
  run.out_w = j.at("out_shape")[2];
  run.out_grid_rows = j.at("out_grid")[0];
  run.out_grid_cols = j.at("out_grid")[1];
  if (!j.at("pool").is_null()) {
    const json& p = j["pool"];
    run.pool = tensor::Pooling{p.at("mode") == "avg" ? tensor::PoolMode::kAvg : tensor::PoolMode::kMax,
                               p.at("window").get<uint32_t>(), p.at("stride").get<uint32_t>()};
  }
  return run;
}

/*! \brief (label, instruction region, uop region) for each program in a layout. */
struct ProgramRef {
  std::string label;
  NamedRegion instr;
  NamedRegion uop;
};

std::vector<ProgramRef> Programs(const Layout& l) {
  std::vector<ProgramRef> out;
  for (const json& p : l.doc.at("programs")) {
    out.push_back({p.at("name").get<std::string>(), l.Find(p.at("instr").get<std::string>()),
                   l.Find(p.at("uop").get<std::string>())});
  }
  return out;
}

json StatsJson(const sim::RunStats& s) {
  return json{{"gemm_loop_count", s.gemm_loop_count},
              {"reset_loop_count", s.reset_loop_count},
              {"gemm_inner_loop_count", s.gemm_inner_loop_count},
              {"alu_loop_count", s.alu_loop_count},
              {"dram_bytes_loaded", s.dram_bytes_loaded},
              {"dram_bytes_stored", s.dram_bytes_stored},
              {"instruction_count", s.instruction_count}};
}

std::vector<uint8_t> TensorBytes(const tensor::Tensor4& t) {
  std::vector<uint8_t> out(t.data.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = static_cast<uint8_t>(t.data[i]);
  return out;
}

std::string Hexdump(std::span<const uint8_t> bytes, size_t limit) {
  std::string s;
  size_t n = std::min(bytes.size(), limit);
  for (size_t i = 0; i < n; i += 16) {
    s += fmt::format("  {:08x}:", i);
    for (size_t k = i; k < std::min(n, i + 16); ++k) s += fmt::format(" {:02x}", bytes[k]);
    s += '\n';
  }
  if (n < bytes.size()) s += fmt::format("  ... {} more bytes\n", bytes.size() - n);
  return s;
}

}  // namespace

// ---------------------------------------------------------------- commands

Manifest parse_manifest(const std::string& text, const fs::path& base_dir) {
  json j = json::parse(text);
  if (!j.is_object()) Bad("root", "expected an object");
  Manifest m;
  m.config = ParseConfig(j.value("config", json(nullptr)));
  validate(m.config);
  json d = j.value("dram", json::object());
  m.dram_offset = Unsigned(d.value("offset", json(0)), "dram.offset");
  m.dram_capacity = Unsigned(d.value("capacity", json(dram::kDefaultCapacity)), "dram.capacity");
  if (j.contains("out_dir")) m.out_dir = base_dir / j["out_dir"].get<std::string>();
  std::string kind = Need(j, "kind", "root").get<std::string>();
  if (kind == "matmul") {
    MatMulManifest& mm = m.matmul;
    mm.a = MatrixOperand(Need(j, "a", "root"), "a", 1, base_dir);
    mm.b = MatrixOperand(Need(j, "b", "root"), "b", 1, base_dir);
    if (j.contains("x")) mm.x = MatrixOperand(j["x"], "x", 4, base_dir);
    if (mm.a.cols != mm.b.rows) Bad("b.shape", fmt::format("inner dimension {} != {}", mm.b.rows, mm.a.cols));
    if (mm.x && (mm.x->rows != mm.a.rows || mm.x->cols != mm.b.cols)) {
      Bad("x.shape", fmt::format("expected [{}, {}]", mm.a.rows, mm.b.cols));
    }
    mm.alu = ParseAlu(j.value("alu", json(nullptr)), "alu");
    mm.uop_epsilon = static_cast<uint32_t>(Unsigned(j.value("uop_epsilon", json(1)), "uop_epsilon"));
  } else if (kind == "network") {
    m.is_network = true;
    m.network.input = TensorOperand(Need(j, "input", "root"), "input", base_dir);
    const json& layers = Need(j, "layers", "root");
    if (!layers.is_array() || layers.empty()) Bad("layers", "expected a non-empty list");
    std::map<std::string, int> seen;
    for (size_t i = 0; i < layers.size(); ++i) {
      tensor::LayerSpec l = ParseLayer(layers[i], fmt::format("layers[{}]", i), base_dir);
      if (l.name.empty()) l.name = fmt::format("L{}", i + 1);
      if (seen[FileTag(l.name)]++) Bad(fmt::format("layers[{}].name", i), "duplicate layer name");
      m.network.layers.push_back(std::move(l));
    }
  } else {
    Bad("kind", "expected \"matmul\" or \"network\"");
  }
  return m;
}

Manifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kInput, fmt::format("cannot read manifest {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.parent_path());
}

int cmd_compile(const fs::path& manifest_path, const std::optional<fs::path>& out_dir, std::ostream& out,
                std::ostream& err) {
  try {
    Manifest m = Stage("parse-manifest", [&] { return load_manifest(manifest_path); });
    fs::path dir = out_dir ? *out_dir : m.out_dir.value_or(fs::path());
    if (dir.empty()) {
      throw StageError("parse-manifest", Error(ErrorKind::kInput, "no output directory (-o or \"out_dir\")"));
    }
    const uint32_t bs = m.config.block_size;
    dram::DramImage img = Stage("dram", [&] { return dram::DramImage(m.config, m.dram_offset, m.dram_capacity); });

    std::vector<NamedRegion> regions;
    std::vector<json> programs;
    std::vector<json> runs;
    std::vector<uint8_t> expected;
    std::map<uint64_t, std::string> names;
    auto add = [&](const std::string& name, const dram::Region& r, const std::string& file) {
      if (names.count(r.phy_start)) return;
      names[r.phy_start] = name;
      regions.push_back({name, r, file});
    };
    json result;

    if (!m.is_network) {
      const MatMulManifest& mm = m.matmul;
      prog::MatMulJob job = Stage("pad+split", [&] {
        prog::MatMulJob jb;
        jb.a = blocks::to_blocks(mm.a, bs, blocks::Kind::kInp);
        jb.b = blocks::to_blocks(mm.b, bs, blocks::Kind::kWgt);
        if (mm.x) jb.x = blocks::to_blocks(*mm.x, bs, blocks::Kind::kAcc);
        jb.alu = mm.alu;
        jb.uop_epsilon = mm.uop_epsilon;
        return jb;
      });
      prog::CompiledJob cj = Stage("program-build", [&] { return prog::compile_matmul(job, img); });
      add("INP", cj.regions.inp, "input.bin");
      add("WGT", cj.regions.wgt, "weight.bin");
      if (cj.regions.acc) add("ACC", *cj.regions.acc, "accumulator.bin");
      add("OUT", cj.regions.out, "");
      add("UOP", cj.regions.uop, "uop.bin");
      add("INSTR", cj.regions.instr, "instructions.bin");
      programs.push_back(json{{"name", "main"}, {"instr", "INSTR"}, {"uop", "UOP"}});
      result = json{{"region", "OUT"},
                    {"rows", mm.a.rows},
                    {"cols", mm.b.cols},
                    {"grid", {job.alpha(), job.beta()}},
                    {"tiles", cj.program.tiles.size()}};
      expected = Stage("oracle", [&] {
        return oracle::expected_out_bytes(mm.a, mm.b, mm.x ? &*mm.x : nullptr, mm.alu, bs);
      });
    } else {
      const NetworkManifest& nm = m.network;
      tensor::ChainedNetwork net =
          Stage("layer-lowering", [&] { return tensor::chain_layers(nm.layers, nm.input, img); });
      for (size_t i = 0; i < net.layers.size(); ++i) {
        const tensor::ChainedLayer& cl = net.layers[i];
        const std::string& n = cl.run.name;
        const std::string tag = FileTag(n);
        const prog::JobRegions& r = cl.job.regions;
        add(n + ".INP", r.inp, i == 0 ? "input.bin" : "");
        add(n + ".WGT", r.wgt, "weight_" + tag + ".bin");
        if (r.acc) add(n + ".ACC", *r.acc, "accumulator_" + tag + ".bin");
        add(n + ".OUT", r.out, "");
        add(n + ".UOP", r.uop, "uop_" + tag + ".bin");
        add(n + ".INSTR", r.instr, "instructions_" + tag + ".bin");
        programs.push_back(json{{"name", n}, {"instr", n + ".INSTR"}, {"uop", n + ".UOP"}});
        runs.push_back(LayerRunJson(cl.run, names));
      }
      tensor::Tensor4 ref = Stage("oracle", [&] { return oracle::ref_network(nm.layers, nm.input); });
      result = json{{"output", {ref.n, ref.c, ref.h, ref.w}}, {"host_reshapes", net.reshape_count}};
      expected = TensorBytes(ref);
    }

    Stage("write-artifacts", [&] {
      fs::create_directories(dir);
      for (const auto& r : regions) {
        if (!r.file.empty()) WriteFile(dir / r.file, img.read_region(r.region));
      }
      WriteFile(dir / kExpectedFile, expected);
      json layout;
      layout["format"] = "vta-dram-layout";
      layout["version"] = 1;
      layout["kind"] = m.is_network ? "network" : "matmul";
      layout["config"] = ConfigJson(m.config);
      layout["dram"] = json{{"offset", img.offset()}, {"capacity", img.capacity()}};
      layout["regions"] = json::array();
      for (const auto& r : regions) layout["regions"].push_back(RegionJson(r));
      layout["programs"] = programs;
      if (m.is_network) layout["layers"] = runs;
      layout["result"] = result;
      layout["expected"] = kExpectedFile;
      WriteText(dir / kLayoutFile, layout.dump(2) + "\n");
    });
    for (const auto& r : regions) {
      out << fmt::format("{:<14} {:<5} @{:#06x} {:>8} B  {}\n", r.name, dram::RegionKindName(r.region.kind),
                         r.region.log_start, r.region.size_bytes, r.file.empty() ? "-" : r.file);
    }
    out << fmt::format("wrote {}\n", dir.string());
    return kExitOk;
  } catch (const StageError& e) {
    return Report("compile", e, err);
  }
}

int cmd_run(const fs::path& dir, const std::optional<fs::path>& trace, bool strict_deps, std::ostream& out,
            std::ostream& err) {
  std::ostringstream trace_buf;
  auto dump_trace = [&] {
    if (trace) WriteText(*trace, trace_buf.str());
  };
  try {
    Layout l = Stage("read-layout", [&] { return ReadLayout(dir); });
    dram::DramImage img = Stage("load-artifacts", [&] { return RestoreImage(l, dir); });
    sim::RunOptions opts;
    opts.strict_deps = strict_deps;
    opts.trace = &trace_buf;

    json stats;
    std::vector<uint8_t> result;
    std::vector<std::string> warnings;
    auto simulate = [&](auto&& fn) {
      try {
        return fn();
      } catch (const std::exception& e) {
        dump_trace();
        std::deque<std::string> tail;
        std::istringstream lines(trace_buf.str());
        for (std::string line; std::getline(lines, line);) {
          tail.push_back(line);
          if (tail.size() > kTraceTail) tail.pop_front();
        }
        err << "trace tail:\n";
        for (const auto& line : tail) err << "  " << line << "\n";
        throw StageError("simulate", e);
      }
    };
    // Loop counts predicted from the instruction words alone.
    uint64_t analytic = Stage("decode", [&] {
      uint64_t n = 0;
      for (const auto& p : Programs(l)) {
        n += prog::analytic_loop_counts(isa::decode_program(img.read_region(p.instr.region))).gemm_loop_count;
      }
      return n;
    });

    if (l.doc.at("kind") == "matmul") {
      const NamedRegion& instr = l.Find(l.doc.at("programs")[0].at("instr").get<std::string>());
      sim::RunResult r = simulate([&] { return sim::run(img, instr.region, opts); });
      result = img.read_region(l.Find(l.doc.at("result").at("region").get<std::string>()).region);
      stats = StatsJson(r.stats);
      warnings = r.dep_warnings;
    } else {
      std::vector<tensor::LayerRun> plan;
      for (const json& j : l.doc.at("layers")) plan.push_back(Stage("read-layout", [&] { return LayerRunFrom(j, l); }));
      tensor::NetworkRun nr = simulate([&] { return tensor::run_network(plan, img, opts); });
      result = TensorBytes(nr.output);
      stats = StatsJson(nr.total);
      stats["host_reshape_count"] = nr.reshape_count;
      stats["layers"] = json::array();
      for (size_t i = 0; i < plan.size(); ++i) {
        json s = StatsJson(nr.layer_stats[i]);
        s["name"] = plan[i].name;
        stats["layers"].push_back(s);
      }
      stats["host_steps"] = json::array();
      for (const auto& h : nr.host_steps) {
        stats["host_steps"].push_back(json{{"layer", h.layer}, {"step", h.step}, {"shape", h.shape}});
      }
      warnings = nr.dep_warnings;
    }
    stats["analytic_gemm_loop_count"] = analytic;
    stats["dep_warnings"] = warnings;

    Stage("write-results", [&] {
      WriteFile(dir / kOutFile, result);
      WriteText(dir / kStatsFile, stats.dump(2) + "\n");
      dump_trace();
    });
    for (const auto& w : warnings) err << "warning: " << w << "\n";
    for (const char* k : {"gemm_loop_count", "alu_loop_count", "dram_bytes_loaded", "dram_bytes_stored",
                          "instruction_count"}) {
      out << fmt::format("{:<18} {}\n", k, stats[k].get<uint64_t>());
    }
    return kExitOk;
  } catch (const StageError& e) {
    return Report("run", e, err);
  }
}

int cmd_verify(const fs::path& dir, std::ostream& out, std::ostream& err) {
  try {
    auto got = Stage("read-results", [&] { return ReadFile(dir / kOutFile); });
    auto want = Stage("read-results", [&] { return ReadFile(dir / kExpectedFile); });
    auto [g, w] = std::mismatch(got.begin(), got.end(), want.begin(), want.end());
    if (g == got.end() && w == want.end()) {
      out << "PASS\n";
      return kExitOk;
    }
    out << fmt::format("FAIL at offset {}\n", g - got.begin());
    return kExitVerifyFail;
  } catch (const StageError& e) {
    return Report("verify", e, err);
  }
}

int cmd_disasm(const fs::path& path, const std::optional<fs::path>& uop_file, std::ostream& out,
               std::ostream& err) {
  try {
    if (!fs::is_directory(path)) {
      auto instrs = Stage("read-artifacts", [&] { return ReadFile(path); });
      std::vector<uint8_t> uops;
      if (uop_file) uops = Stage("read-artifacts", [&] { return ReadFile(*uop_file); });
      out << Stage("decode", [&] { return isa::disassemble(instrs, uops); });
      return kExitOk;
    }
    if (!fs::exists(path / kLayoutFile)) {
      auto instrs = Stage("read-artifacts", [&] { return ReadFile(path / "instructions.bin"); });
      std::vector<uint8_t> uops;
      if (fs::exists(path / "uop.bin")) uops = Stage("read-artifacts", [&] { return ReadFile(path / "uop.bin"); });
      out << Stage("decode", [&] { return isa::disassemble(instrs, uops); });
      return kExitOk;
    }
    Layout l = Stage("read-layout", [&] { return ReadLayout(path); });
    auto programs = Stage("read-layout", [&] { return Programs(l); });
    for (const auto& p : programs) {
      auto instrs = Stage("read-artifacts", [&] { return ReadFile(path / p.instr.file); });
      auto uops = Stage("read-artifacts", [&] { return ReadFile(path / p.uop.file); });
      isa::DisasmOptions opts;
      opts.uop_log_base = static_cast<uint32_t>(p.uop.region.log_start);
      if (programs.size() > 1) out << fmt::format("; program {}\n", p.label);
      out << Stage("decode", [&] { return isa::disassemble(instrs, uops, opts); });
    }
    return kExitOk;
  } catch (const StageError& e) {
    return Report("disasm", e, err);
  }
}

int cmd_inspect(const fs::path& dir, std::ostream& out, std::ostream& err) {
  try {
    Layout l = Stage("read-layout", [&] { return ReadLayout(dir); });
    const json& d = l.doc.at("dram");
    out << fmt::format("kind: {}\n", l.doc.at("kind").get<std::string>());
    out << "config:";
    for (const auto& [k, v] : l.doc.at("config").items()) out << fmt::format(" {}={}", k, v.get<uint64_t>());
    out << fmt::format("\ndram: offset={:#x} capacity={:#x}\n\n", d.at("offset").get<uint64_t>(),
                       d.at("capacity").get<uint64_t>());
    out << fmt::format("{:<14} {:<5} {:>10} {:>10} {:>9} {:>9}  {}\n", "region", "kind", "phy_start", "phy_end",
                       "bytes", "log_start", "file");
    for (const auto& r : l.regions) {
      out << fmt::format("{:<14} {:<5} {:#010x} {:#010x} {:>9} {:#09x}  {}\n", r.name,
                         dram::RegionKindName(r.region.kind), r.region.phy_start, r.region.phy_end(),
                         r.region.size_bytes, r.region.log_start, r.file.empty() ? "-" : r.file);
    }
    for (const auto& r : l.regions) {
      if (r.file.empty()) continue;
      auto bytes = Stage("read-artifacts", [&] { return ReadFile(dir / r.file); });
      out << fmt::format("\n{} ({}, {} bytes)\n", r.name, r.file, bytes.size());
      out << Hexdump(bytes, 64);
    }
    return kExitOk;
  } catch (const StageError& e) {
    return Report("inspect", e, err);
  }
}

}  // namespace cli
}  // namespace vta
