// Copyright 2026 The cfnet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "cfnet/error.hpp"
#include "cfnet/models.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace cfnet {
namespace {

constexpr const char* kMagic = "CFNETCKPT";

std::string JoinDims(const std::vector<int>& dims) {
  if (dims.empty()) return "-";
  std::string out;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (k > 0) out += ',';
    out += std::to_string(dims[k]);
  }
  return out;
}

std::vector<int> ParseDims(const std::string& text, const std::string& path) {
  std::vector<int> dims;
  if (text == "-") return dims;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      dims.push_back(std::stoi(part, &used));
      Require(used == part.size(), ErrorCode::kParse, "");
    } catch (const std::exception&) {
      Fail(ErrorCode::kParse, path + ": bad dimension list '" + text + "'");
    }
  }
  return dims;
}

// Reads "key value" and checks the key.
std::string ReadField(std::istream& in, const std::string& key,
                      const std::string& path) {
  std::string line;
  Require(static_cast<bool>(std::getline(in, line)), ErrorCode::kParse,
          path + ": truncated header, expected '" + key + "'");
  const auto space = line.find(' ');
  Require(space != std::string::npos && line.substr(0, space) == key,
          ErrorCode::kParse,
          path + ": expected header field '" + key + "', got '" + line + "'");
  return line.substr(space + 1);
}

long long ReadInt(std::istream& in, const std::string& key,
                  const std::string& path) {
  const std::string text = ReadField(in, key, path);
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  Fail(ErrorCode::kParse, path + ": bad integer for '" + key + "'");
}

}  // namespace

void SaveCheckpoint(const ModelParams& params, const std::string& path) {
  ValidateArch(params.arch);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(out.good(), ErrorCode::kIo, "cannot open " + path + " for writing");
  const ArchSpec& a = params.arch;
  out << kMagic << '\n'
      << "version " << kCheckpointVersion << '\n'
      << "variant " << VariantName(a.variant) << '\n'
      << "num_users " << a.num_users << '\n'
      << "num_items " << a.num_items << '\n'
      << "user_tower " << JoinDims(a.user_tower) << '\n'
      << "item_tower " << JoinDims(a.item_tower) << '\n'
      << "embedding_dim " << a.embedding_dim << '\n'
      << "mlp_dims " << JoinDims(a.mlp_dims) << '\n'
      << "predictive_dim " << a.predictive_dim << '\n';
  ModelParams& mutable_params = const_cast<ModelParams&>(params);
  const auto tensors = Tensors(mutable_params);
  out << "tensors " << tensors.size() << '\n';
  for (const auto& t : tensors) {
    out << "tensor " << t.name << ' ' << t.rows << ' ' << t.cols << '\n';
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size_bytes()));
  }
  Require(out.good(), ErrorCode::kIo, "write failed: " + path);
}

ModelParams LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  Require(in.good(), ErrorCode::kIo, "cannot open checkpoint " + path);
  std::string magic;
  std::getline(in, magic);
  Require(magic == kMagic, ErrorCode::kParse,
          path + ": not a cfnet checkpoint");
  const long long version = ReadInt(in, "version", path);
  Require(version == kCheckpointVersion, ErrorCode::kParse,
          path + ": unsupported checkpoint version " + std::to_string(version) +
              " (expected " + std::to_string(kCheckpointVersion) + ")");

  ArchSpec arch;
  arch.variant = ParseVariant(ReadField(in, "variant", path));
  arch.num_users = static_cast<Index>(ReadInt(in, "num_users", path));
  arch.num_items = static_cast<Index>(ReadInt(in, "num_items", path));
  arch.user_tower = ParseDims(ReadField(in, "user_tower", path), path);
  arch.item_tower = ParseDims(ReadField(in, "item_tower", path), path);
  arch.embedding_dim = static_cast<int>(ReadInt(in, "embedding_dim", path));
  arch.mlp_dims = ParseDims(ReadField(in, "mlp_dims", path), path);
  arch.predictive_dim = static_cast<int>(ReadInt(in, "predictive_dim", path));
  try {
    ValidateArch(arch);
  } catch (const Error& e) {
    Fail(ErrorCode::kShape, path + ": inconsistent header: " + e.what());
  }

  // Shapes come from the header; the stored tensors must agree exactly.
  ModelParams params = AllocateModel(arch);
  auto tensors = Tensors(params);
  const long long count = ReadInt(in, "tensors", path);
  Require(count == static_cast<long long>(tensors.size()), ErrorCode::kShape,
          path + ": header declares " + std::to_string(count) +
              " tensors, architecture needs " +
              std::to_string(tensors.size()));
  for (auto& t : tensors) {
    std::string line;
    Require(static_cast<bool>(std::getline(in, line)), ErrorCode::kParse,
            path + ": truncated before tensor " + t.name);
    std::istringstream hdr(line);
    std::string tag, name;
    long long rows = -1, cols = -1;
    hdr >> tag >> name >> rows >> cols;
    Require(tag == "tensor" && name == t.name, ErrorCode::kShape,
            path + ": expected tensor " + t.name + ", found '" + line + "'");
    Require(rows == t.rows && cols == t.cols, ErrorCode::kShape,
            path + ": tensor " + t.name + " is " + std::to_string(rows) + "x" +
                std::to_string(cols) + ", architecture expects " +
                std::to_string(t.rows) + "x" + std::to_string(t.cols));
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size_bytes()));
    Require(in.gcount() == static_cast<std::streamsize>(t.data.size_bytes()),
            ErrorCode::kParse, path + ": truncated tensor " + t.name);
  }
  Require(in.peek() == std::char_traits<char>::eof(), ErrorCode::kParse,
          path + ": trailing bytes after last tensor");
  return params;
}

}  // namespace cfnet
