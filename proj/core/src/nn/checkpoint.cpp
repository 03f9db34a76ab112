#include "threadtrack/nn/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace threadtrack::nn {
namespace {

constexpr const char* kMagic = "threadtrack-checkpoint";
constexpr int kFormatVersion = 1;

std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_double(const std::string& token) {
  char* end = nullptr;
  double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') throw LoadError("checkpoint: bad number '" + token + "'");
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& out, const std::vector<ParamSlot>& slots) {
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "arrays " << slots.size() << '\n';
  for (const auto& s : slots) {
    out << s.name << ' ' << s.shape.size();
    for (auto d : s.shape) out << ' ' << d;
    out << '\n';
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      if (i) out << ' ';
      out << hex_double(s.values[i]);
    }
    out << '\n';
  }
}

std::vector<NamedArray> read_checkpoint(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic) throw LoadError("checkpoint: missing header");
  if (version != kFormatVersion) throw LoadError("checkpoint: unsupported version");
  std::string word;
  std::size_t count = 0;
  if (!(in >> word >> count) || word != "arrays") throw LoadError("checkpoint: missing array count");
  std::vector<NamedArray> arrays(count);
  for (auto& a : arrays) {
    std::size_t rank = 0;
    if (!(in >> a.name >> rank)) throw LoadError("checkpoint: truncated array header");
    a.shape.resize(rank);
    std::size_t n = 1;
    for (auto& d : a.shape) {
      if (!(in >> d)) throw LoadError("checkpoint: truncated shape for " + a.name);
      n *= d;
    }
    a.values.resize(n);
    std::string tok;
    for (auto& v : a.values) {
      if (!(in >> tok)) throw LoadError("checkpoint: truncated values for " + a.name);
      v = parse_double(tok);
    }
  }
  return arrays;
}

void assign_checkpoint(const std::vector<NamedArray>& arrays, std::vector<ParamSlot>& slots) {
  if (arrays.size() != slots.size()) {
    throw LoadError("checkpoint: expected " + std::to_string(slots.size()) + " arrays, found " +
                    std::to_string(arrays.size()));
  }
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (arrays[i].name != slots[i].name || arrays[i].shape != slots[i].shape) {
      throw LoadError("checkpoint: array '" + arrays[i].name + "' does not match slot '" +
                      slots[i].name + "'");
    }
    std::copy(arrays[i].values.begin(), arrays[i].values.end(), slots[i].values.begin());
  }
}

void save_slots(const std::filesystem::path& path, const std::vector<ParamSlot>& slots) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  write_checkpoint(out, slots);
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

void load_slots(const std::filesystem::path& path, std::vector<ParamSlot>& slots) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open checkpoint " + path.string());
  assign_checkpoint(read_checkpoint(in), slots);
}

}  // namespace threadtrack::nn
