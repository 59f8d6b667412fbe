// core/src/container.cc

// Copyright 2026  The vclab Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "vclab/container.h"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vclab/error.h"

namespace vclab {

namespace {

constexpr char kMagic32[] = "VCARR32\n";
constexpr char kMagic64[] = "VCARR64\n";

void PutU16(std::ostream &os, uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff)};
  os.write(reinterpret_cast<const char *>(b), 2);
}

void PutU32(std::ostream &os, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char *>(b), 4);
}

uint16_t GetU16(std::istream &is) {
  unsigned char b[2];
  is.read(reinterpret_cast<char *>(b), 2);
  if (!is) throw FormatError("array file truncated while reading u16");
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

uint32_t GetU32(std::istream &is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char *>(b), 4);
  if (!is) throw FormatError("array file truncated while reading u32");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

// The sandbox targets are little-endian; keep a guard so a port to a
// big-endian host fails loudly instead of writing a byte-swapped file.
bool HostIsLittleEndian() {
  uint32_t probe = 1;
  unsigned char first;
  std::memcpy(&first, &probe, 1);
  return first == 1;
}

void AtomicRename(const std::string &tmp, const std::string &path) {
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw FormatError("failed to move temporary file into place: " + path +
                      " (" + ec.message() + ")");
  }
}

}  // namespace

void WriteArrayFile(const std::string &path, const std::vector<NamedArray> &arrays,
                    bool float64) {
  if (!HostIsLittleEndian()) throw FormatError("array files require a little-endian host");
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw FormatError("cannot open for writing: " + tmp);
    os.write(float64 ? kMagic64 : kMagic32, 8);
    PutU32(os, static_cast<uint32_t>(arrays.size()));
    for (const NamedArray &a : arrays) {
      if (a.name.empty() || a.name.size() > 0xffff)
        throw FormatError("bad array name length for '" + a.name + "'");
      PutU16(os, static_cast<uint16_t>(a.name.size()));
      os.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
      PutU32(os, static_cast<uint32_t>(a.values.rows()));
      PutU32(os, static_cast<uint32_t>(a.values.cols()));
      if (float64) {
        // Eigen default storage is column-major; emit row-major explicitly.
        for (Eigen::Index r = 0; r < a.values.rows(); ++r)
          for (Eigen::Index c = 0; c < a.values.cols(); ++c) {
            double v = a.values(r, c);
            os.write(reinterpret_cast<const char *>(&v), 8);
          }
      } else {
        for (Eigen::Index r = 0; r < a.values.rows(); ++r)
          for (Eigen::Index c = 0; c < a.values.cols(); ++c) {
            float v = static_cast<float>(a.values(r, c));
            os.write(reinterpret_cast<const char *>(&v), 4);
          }
      }
    }
    if (!os) throw FormatError("short write: " + tmp);
  }
  AtomicRename(tmp, path);
}

std::vector<NamedArray> ReadArrayFile(const std::string &path, bool float64) {
  if (!HostIsLittleEndian()) throw FormatError("array files require a little-endian host");
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open array file: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, float64 ? kMagic64 : kMagic32, 8) != 0)
    throw FormatError("bad magic in array file: " + path);
  uint32_t n = GetU32(is);
  std::vector<NamedArray> arrays;
  arrays.reserve(n);
  for (uint32_t i = 0; i < n; ++i) {
    NamedArray a;
    uint16_t name_len = GetU16(is);
    a.name.resize(name_len);
    is.read(a.name.data(), name_len);
    uint32_t rows = GetU32(is);
    uint32_t cols = GetU32(is);
    if (!is) throw FormatError("array file truncated in header of entry " + std::to_string(i));
    a.values.resize(rows, cols);
    if (float64) {
      for (uint32_t r = 0; r < rows; ++r)
        for (uint32_t c = 0; c < cols; ++c) {
          double v;
          is.read(reinterpret_cast<char *>(&v), 8);
          a.values(r, c) = v;
        }
    } else {
      for (uint32_t r = 0; r < rows; ++r)
        for (uint32_t c = 0; c < cols; ++c) {
          float v;
          is.read(reinterpret_cast<char *>(&v), 4);
          a.values(r, c) = static_cast<double>(v);
        }
    }
    if (!is) throw FormatError("array file truncated in data of '" + a.name + "'");
    arrays.push_back(std::move(a));
  }
  return arrays;
}

void WriteKeyValueFile(const std::string &path,
                       const std::map<std::string, std::string> &entries) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw FormatError("cannot open for writing: " + tmp);
    for (const auto &[k, v] : entries) os << k << " = " << v << "\n";
    if (!os) throw FormatError("short write: " + tmp);
  }
  AtomicRename(tmp, path);
}

std::map<std::string, std::string> ReadKeyValueFile(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open metadata file: " + path);
  std::map<std::string, std::string> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    auto trim = [](std::string s) {
      size_t b = s.find_first_not_of(" \t\r");
      size_t e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw FormatError(path + ":" + std::to_string(lineno) + ": empty key");
    entries[key] = value;
  }
  return entries;
}

}  // namespace vclab
