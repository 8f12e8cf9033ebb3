#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ltcr/protocol.hpp"

namespace ltcr {

// Demonstration exchange formats. One record is
//   {round: u32, teacher_id: u16, state: f64[state_dim], action: u16,
//    probs: f64[atom_count]}
// and a file carries a header fixing state_dim and atom_count. The binary
// layout is little-endian regardless of host; the text form prints doubles
// with 17 significant digits. Both round-trip bit-exactly.

struct DemoFile {
  std::uint16_t state_dim = 0;
  std::uint16_t atom_count = 0;
  std::vector<Demonstration> records;
};

void write_demos_binary(const DemoFile& file, std::ostream& out);
DemoFile read_demos_binary(std::istream& in);

void write_demos_text(const DemoFile& file, std::ostream& out);
DemoFile read_demos_text(std::istream& in);

void write_demos_binary_file(const DemoFile& file, const std::string& path);
DemoFile read_demos_binary_file(const std::string& path);
void write_demos_text_file(const DemoFile& file, const std::string& path);
DemoFile read_demos_text_file(const std::string& path);

}  // namespace ltcr
