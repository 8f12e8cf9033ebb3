#include "ltcr/demo_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ltcr/errors.hpp"

namespace ltcr {

namespace {

constexpr char kBinaryMagic[8] = {'L', 'T', 'C', 'R', 'D', 'E', 'M', '1'};
constexpr char kTextMagic[] = "ltcr-demos v1";

void put_u16(std::ostream& out, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v),
                              static_cast<unsigned char>(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& out, double d) {
  const auto bits = std::bit_cast<std::uint64_t>(d);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint16_t get_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

void check_record(const DemoFile& file, const Demonstration& d) {
  require(d.feature.state.size() == file.state_dim,
          "demo file: record state length does not match the header");
  require(d.probs.size() == file.atom_count,
          "demo file: record atom count does not match the header");
}

}  // namespace

void write_demos_binary(const DemoFile& file, std::ostream& out) {
  out.write(kBinaryMagic, sizeof(kBinaryMagic));
  put_u16(out, file.state_dim);
  put_u16(out, file.atom_count);
  put_u32(out, static_cast<std::uint32_t>(file.records.size()));
  for (const Demonstration& d : file.records) {
    check_record(file, d);
    put_u32(out, d.round);
    put_u16(out, d.teacher_id);
    put_u16(out, static_cast<std::uint16_t>(d.feature.action));
    for (double v : d.feature.state) put_f64(out, v);
    for (double v : d.probs) put_f64(out, v);
  }
}

DemoFile read_demos_binary(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kBinaryMagic, sizeof(magic)) != 0)
    throw RunError("demo file: bad magic");
  DemoFile file;
  file.state_dim = get_u16(in);
  file.atom_count = get_u16(in);
  const std::uint32_t count = get_u32(in);
  file.records.resize(count);
  for (Demonstration& d : file.records) {
    d.round = get_u32(in);
    d.teacher_id = get_u16(in);
    d.feature.action = get_u16(in);
    d.feature.state.resize(file.state_dim);
    for (double& v : d.feature.state) v = get_f64(in);
    d.probs.resize(file.atom_count);
    for (double& v : d.probs) v = get_f64(in);
  }
  if (!in) throw RunError("demo file: truncated");
  return file;
}

void write_demos_text(const DemoFile& file, std::ostream& out) {
  out << kTextMagic << " state_dim=" << file.state_dim
      << " atoms=" << file.atom_count << "\n";
  char buf[40];
  for (const Demonstration& d : file.records) {
    check_record(file, d);
    out << d.round << ' ' << d.teacher_id << ' ' << d.feature.action;
    for (double v : d.feature.state) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ' ' << buf;
    }
    out << " |";
    for (double v : d.probs) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ' ' << buf;
    }
    out << "\n";
  }
}

DemoFile read_demos_text(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw RunError("demo file: empty");
  DemoFile file;
  {
    std::istringstream header(line);
    std::string word, version, field;
    header >> word >> version;
    if (word + " " + version != kTextMagic)
      throw RunError("demo file: bad text header");
    while (header >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) throw RunError("demo file: bad header field");
      const std::string key = field.substr(0, eq);
      const int value = std::stoi(field.substr(eq + 1));
      if (key == "state_dim")
        file.state_dim = static_cast<std::uint16_t>(value);
      else if (key == "atoms")
        file.atom_count = static_cast<std::uint16_t>(value);
      else
        throw RunError("demo file: unknown header field " + key);
    }
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    Demonstration d;
    if (!(row >> d.round >> d.teacher_id >> d.feature.action))
      throw RunError("demo file: malformed record");
    d.feature.state.resize(file.state_dim);
    for (double& v : d.feature.state)
      if (!(row >> v)) throw RunError("demo file: malformed record");
    std::string sep;
    if (!(row >> sep) || sep != "|")
      throw RunError("demo file: missing separator");
    d.probs.resize(file.atom_count);
    for (double& v : d.probs)
      if (!(row >> v)) throw RunError("demo file: malformed record");
    file.records.push_back(std::move(d));
  }
  return file;
}

void write_demos_binary_file(const DemoFile& file, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RunError("cannot open for writing: " + path);
  write_demos_binary(file, out);
}

DemoFile read_demos_binary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RunError("cannot open: " + path);
  return read_demos_binary(in);
}

void write_demos_text_file(const DemoFile& file, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw RunError("cannot open for writing: " + path);
  write_demos_text(file, out);
}

DemoFile read_demos_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RunError("cannot open: " + path);
  return read_demos_text(in);
}

}  // namespace ltcr
