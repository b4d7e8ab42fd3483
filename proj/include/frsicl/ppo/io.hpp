#pragma once

// Trained-parameter file, all integers and floats little-endian:
//
//   bytes 0..7   magic "FRSPPO1\0"
//   u64          sensors (N)
//   u64          inputs
//   u64          hidden1
//   u64          hidden2
//   u64          velocity_bins
//   u64          parameter count
//   f64 x count  parameters in the flat layout documented in mlp.hpp

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "frsicl/csv.hpp"
#include "frsicl/ppo/mlp.hpp"
#include "frsicl/ppo/ppo.hpp"

namespace frsicl::ppo {

inline constexpr std::array<char, 8> kParamsMagic{'F', 'R', 'S', 'P', 'P', 'O', '1', '\0'};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint64_t get_u64(const std::string& in, std::size_t& pos) {
  if (pos + 8 > in.size()) throw FormatError("truncated PPO parameter file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += 8;
  return v;
}

}  // namespace detail

inline std::string encode_params(const MlpParams& p) {
  std::string out(kParamsMagic.begin(), kParamsMagic.end());
  detail::put_u64(out, p.shape.sensors);
  detail::put_u64(out, p.shape.inputs);
  detail::put_u64(out, p.shape.hidden1);
  detail::put_u64(out, p.shape.hidden2);
  detail::put_u64(out, p.shape.velocity_bins);
  detail::put_u64(out, p.values.size());
  for (double v : p.values) detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

inline MlpParams decode_params(const std::string& bytes) {
  if (bytes.size() < kParamsMagic.size() || std::memcmp(bytes.data(), kParamsMagic.data(), kParamsMagic.size()) != 0) {
    throw FormatError("not a PPO parameter file (bad magic)");
  }
  std::size_t pos = kParamsMagic.size();
  MlpShape shape;
  shape.sensors = detail::get_u64(bytes, pos);
  shape.inputs = detail::get_u64(bytes, pos);
  shape.hidden1 = detail::get_u64(bytes, pos);
  shape.hidden2 = detail::get_u64(bytes, pos);
  shape.velocity_bins = detail::get_u64(bytes, pos);
  const std::uint64_t count = detail::get_u64(bytes, pos);
  if (count != shape.size()) throw FormatError("parameter count does not match the stored layer widths");
  if (bytes.size() != pos + 8 * count) throw FormatError("PPO parameter file has the wrong length");
  MlpParams p(shape);
  for (double& v : p.values) v = std::bit_cast<double>(detail::get_u64(bytes, pos));
  return p;
}

inline void save_params(const MlpParams& p, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  const std::string bytes = encode_params(p);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed: " + path);
}

inline MlpParams load_params(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_params(bytes);
}

inline constexpr const char* kCurveHeader = "episode,mean_reward,mean_aoi";

inline void write_curve_csv(const std::vector<CurveRow>& curve, const std::string& path) {
  CsvWriter w(path, kCurveHeader);
  for (const CurveRow& r : curve) w.row(r.episode, r.mean_reward, r.mean_aoi);
}

}  // namespace frsicl::ppo
