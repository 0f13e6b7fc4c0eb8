#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "crossview/core/errors.hpp"
#include "crossview/core/rng.hpp"
#include "crossview/nn/adam.hpp"
#include "crossview/nn/params.hpp"

namespace crossview {

// Single-file checkpoint container:
//   magic "XVCP" | u32 version | u64 step | u32 config_len | config JSON bytes
//   | u32 array_count | per array: u32 name_len, name, u32 ndims, u64 dims[],
//   float32 data (row-major, little-endian).
// Parameters are float32 in memory, so save → load round-trips bit-exactly.
struct Checkpoint {
  std::uint64_t step = 0;
  nlohmann::json config;
  std::vector<std::pair<std::string, Mat<float>>> arrays;

  const Mat<float>* find(const std::string& name) const {
    for (const auto& [n, m] : arrays) {
      if (n == name) return &m;
    }
    return nullptr;
  }
};

namespace detail {

inline void write_u32(std::ostream& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.write(buf, 4);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.write(buf, 8);
}

inline std::uint32_t read_u32(std::istream& in) {
  char buf[4];
  in.read(buf, 4);
  if (!in) throw IoError("checkpoint: truncated file (u32)");
  std::uint32_t v;
  std::memcpy(&v, buf, 4);
  return v;
}

inline std::uint64_t read_u64(std::istream& in) {
  char buf[8];
  in.read(buf, 8);
  if (!in) throw IoError("checkpoint: truncated file (u64)");
  std::uint64_t v;
  std::memcpy(&v, buf, 8);
  return v;
}

}  // namespace detail

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_checkpoint: cannot open " + path.string() + " for writing");
  out.write("XVCP", 4);
  detail::write_u32(out, 1u);
  detail::write_u64(out, ckpt.step);
  const std::string config = ckpt.config.dump();
  detail::write_u32(out, static_cast<std::uint32_t>(config.size()));
  out.write(config.data(), static_cast<std::streamsize>(config.size()));
  detail::write_u32(out, static_cast<std::uint32_t>(ckpt.arrays.size()));
  for (const auto& [name, m] : ckpt.arrays) {
    detail::write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::write_u32(out, 2u);
    detail::write_u64(out, static_cast<std::uint64_t>(m.rows()));
    detail::write_u64(out, static_cast<std::uint64_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(float) * static_cast<std::size_t>(m.size())));
  }
  if (!out) throw IoError("save_checkpoint: write failure on " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_checkpoint: cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "XVCP", 4) != 0) {
    throw IoError("load_checkpoint: " + path.string() + " is not a checkpoint file");
  }
  const std::uint32_t version = detail::read_u32(in);
  if (version != 1u) {
    throw IoError("load_checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.step = detail::read_u64(in);
  const std::uint32_t config_len = detail::read_u32(in);
  std::string config(config_len, '\0');
  in.read(config.data(), config_len);
  if (!in) throw IoError("load_checkpoint: truncated config block");
  try {
    ckpt.config = nlohmann::json::parse(config);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("load_checkpoint: bad config JSON: ") + e.what());
  }
  const std::uint32_t count = detail::read_u32(in);
  ckpt.arrays.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = detail::read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const std::uint32_t ndims = detail::read_u32(in);
    if (ndims != 2u) throw IoError("load_checkpoint: unsupported array rank");
    const auto rows = static_cast<Eigen::Index>(detail::read_u64(in));
    const auto cols = static_cast<Eigen::Index>(detail::read_u64(in));
    Mat<float> m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(float) * static_cast<std::size_t>(m.size())));
    if (!in) throw IoError("load_checkpoint: truncated array data for '" + name + "'");
    ckpt.arrays.emplace_back(std::move(name), std::move(m));
  }
  return ckpt;
}

// Packs parameters (their insertion order) and optional optimizer moments into
// the array list: params under their own names, moments as adam.m/<name> and
// adam.v/<name>.
inline Checkpoint make_checkpoint(const Params<float>& params, const Adam<float>* adam,
                                  nlohmann::json config, std::uint64_t step) {
  Checkpoint ckpt;
  ckpt.step = step;
  ckpt.config = std::move(config);
  for (std::size_t i = 0; i < params.size(); ++i) {
    ckpt.arrays.emplace_back(params.entry(i).first, params.entry(i).second);
  }
  if (adam != nullptr) {
    if (adam->size() != params.size()) throw ConfigError("make_checkpoint: optimizer misaligned");
    for (std::size_t i = 0; i < params.size(); ++i) {
      ckpt.arrays.emplace_back("adam.m/" + params.entry(i).first, adam->moment1(i));
      ckpt.arrays.emplace_back("adam.v/" + params.entry(i).first, adam->moment2(i));
    }
  }
  return ckpt;
}

// Restores parameter values (shapes must match) and, when present, optimizer
// moments. Returns true if the checkpoint carried optimizer state.
inline bool restore_from_checkpoint(const Checkpoint& ckpt, Params<float>& params,
                                    Adam<float>* adam) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& name = params.entry(i).first;
    const Mat<float>* src = ckpt.find(name);
    if (src == nullptr) throw IoError("checkpoint missing parameter '" + name + "'");
    auto& dst = params.entry(i).second;
    if (src->rows() != dst.rows() || src->cols() != dst.cols()) {
      throw IoError("checkpoint shape mismatch for '" + name + "'");
    }
    dst = *src;
  }
  bool have_adam = true;
  for (std::size_t i = 0; i < params.size() && have_adam; ++i) {
    if (ckpt.find("adam.m/" + params.entry(i).first) == nullptr) have_adam = false;
  }
  if (adam != nullptr && have_adam) {
    adam->reset(params);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& name = params.entry(i).first;
      const Mat<float>* m = ckpt.find("adam.m/" + name);
      const Mat<float>* v = ckpt.find("adam.v/" + name);
      if (m == nullptr || v == nullptr) throw IoError("checkpoint missing moments for '" + name + "'");
      adam->moment1(i) = *m;
      adam->moment2(i) = *v;
    }
    adam->set_t(ckpt.step);
  }
  return have_adam;
}

// FNV-1a hash of a file's bytes; recorded in run metadata to identify the
// exact checkpoint a result came from.
inline std::uint64_t hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("hash_file: cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  return h;
}

}  // namespace crossview
