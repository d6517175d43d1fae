#include "bbmlab/snapshot_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace bbmlab {

std::string format_double(double value) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

double parse_double(const std::string& text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw std::runtime_error("cannot parse number: '" + text + "'");
  }
  return v;
}

namespace {

std::uint64_t parse_u64(const std::string& text) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw std::runtime_error("cannot parse integer: '" + text + "'");
  }
  return v;
}

constexpr char kHeader[] = "replica,time,particle_id,parent_id,position,birth_time";
constexpr char kMagic[8] = {'B', 'B', 'M', 'S', 'N', 'A', 'P', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b.data(), 8);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 8)) {
    throw std::runtime_error("snapshot binary: truncated input");
  }
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

}  // namespace

void write_snapshots_csv(std::ostream& out, std::span<const PopulationSnapshot> snapshots) {
  out << kHeader << '\n';
  for (const auto& s : snapshots) {
    const std::string time = format_double(s.time);
    for (const auto& p : s.particles) {
      out << s.replica << ',' << time << ',' << p.id << ',';
      if (!p.is_root()) out << p.parent_id;
      out << ',' << format_double(p.position) << ',' << format_double(p.birth_time) << '\n';
    }
  }
}

std::vector<PopulationSnapshot> read_snapshots_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kHeader) {
    throw std::runtime_error("snapshot csv: missing or unexpected header");
  }
  std::vector<PopulationSnapshot> out;
  std::vector<std::string> cols;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    cols.clear();
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (line.back() == ',') cols.emplace_back();
    if (cols.size() != 6) throw std::runtime_error("snapshot csv: expected 6 columns: " + line);
    const std::uint64_t replica = parse_u64(cols[0]);
    const double time = parse_double(cols[1]);
    if (out.empty() || out.back().replica != replica || out.back().time != time) {
      PopulationSnapshot s;
      s.replica = replica;
      s.time = time;
      out.push_back(std::move(s));
    }
    Particle p;
    p.id = parse_u64(cols[2]);
    p.parent_id = cols[3].empty() ? kNoParent : parse_u64(cols[3]);
    p.position = parse_double(cols[4]);
    p.birth_time = parse_double(cols[5]);
    out.back().particles.push_back(p);
  }
  return out;
}

void write_snapshots_binary(std::ostream& out, std::span<const PopulationSnapshot> snapshots) {
  out.write(kMagic, sizeof kMagic);
  const std::uint32_t version = 1;
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((version >> (8 * i)) & 0xFF));
  put_u64(out, snapshots.size());
  for (const auto& s : snapshots) {
    put_u64(out, s.replica);
    put_f64(out, s.time);
    put_u64(out, s.pruned_count);
    out.put(s.annihilated ? 1 : 0);
    put_u64(out, s.particles.size());
    for (const auto& p : s.particles) {
      put_u64(out, p.id);
      put_u64(out, p.parent_id);
      put_f64(out, p.birth_time);
      put_f64(out, p.position);
    }
  }
}

std::vector<PopulationSnapshot> read_snapshots_binary(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error("snapshot binary: bad magic");
  }
  std::array<unsigned char, 4> vb{};
  if (!in.read(reinterpret_cast<char*>(vb.data()), 4)) {
    throw std::runtime_error("snapshot binary: truncated input");
  }
  const std::uint32_t version = vb[0] | (vb[1] << 8) | (vb[2] << 16) | (std::uint32_t{vb[3]} << 24);
  if (version != 1) throw std::runtime_error("snapshot binary: unsupported version");
  const std::uint64_t count = get_u64(in);
  std::vector<PopulationSnapshot> out;
  for (std::uint64_t k = 0; k < count; ++k) {
    PopulationSnapshot s;
    s.replica = get_u64(in);
    s.time = get_f64(in);
    s.pruned_count = get_u64(in);
    const int flag = in.get();
    if (flag == std::char_traits<char>::eof()) throw std::runtime_error("snapshot binary: truncated input");
    s.annihilated = flag != 0;
    const std::uint64_t n = get_u64(in);
    s.particles.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      Particle p;
      p.id = get_u64(in);
      p.parent_id = get_u64(in);
      p.birth_time = get_f64(in);
      p.position = get_f64(in);
      s.particles.push_back(p);
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace bbmlab
