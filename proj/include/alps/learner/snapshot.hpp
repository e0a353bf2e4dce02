#pragma once

// Parameter snapshots: one JSON header line, then a little-endian block of
// (u32 slot, f64 weight) pairs for the non-zero hashed weights, then the
// dense block as f64.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "alps/learner/params.hpp"
#include "alps/util/error.hpp"

namespace alps::learn {

namespace detail {

template <typename T>
void put_le(std::ostream& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char b[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof(T))) throw ParseError("snapshot: truncated weight block");
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace detail

struct Snapshot {
  nlohmann::json meta;  // task, labels and anything else the caller needs
  ParameterStore params;
};

inline void write_snapshot(std::ostream& out, const ParameterStore& p, nlohmann::json meta) {
  std::uint64_t nnz = 0;
  for (double w : p.hashed) nnz += w != 0.0;
  meta["format"] = "alps-params-1";
  meta["hash_bits"] = p.hash_bits;
  meta["dense_size"] = p.dense.size();
  meta["nnz"] = nnz;
  out << meta.dump() << "\n";
  for (std::size_t i = 0; i < p.hashed.size(); ++i)
    if (p.hashed[i] != 0.0) {
      detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(i));
      detail::put_le<double>(out, p.hashed[i]);
    }
  for (double w : p.dense) detail::put_le<double>(out, w);
}

inline Snapshot read_snapshot(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw ParseError("snapshot: missing header");
  Snapshot s;
  try {
    s.meta = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("snapshot: bad header: ") + e.what());
  }
  if (s.meta.value("format", "") != "alps-params-1") throw ParseError("snapshot: unknown format");
  const unsigned bits = s.meta.at("hash_bits");
  const std::size_t dense = s.meta.at("dense_size");
  const std::uint64_t nnz = s.meta.at("nnz");
  s.params = ParameterStore(bits, dense);
  for (std::uint64_t k = 0; k < nnz; ++k) {
    const auto idx = detail::get_le<std::uint32_t>(in);
    const double w = detail::get_le<double>(in);
    if (idx >= s.params.hashed.size()) throw ParseError("snapshot: slot out of range");
    s.params.hashed[idx] = w;
  }
  for (std::size_t i = 0; i < dense; ++i) s.params.dense[i] = detail::get_le<double>(in);
  return s;
}

inline void save_snapshot(const std::string& path, const ParameterStore& p, const nlohmann::json& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_snapshot(out, p, meta);
}

inline Snapshot load_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  return read_snapshot(in);
}

}  // namespace alps::learn
