#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "threadtrack/nn/params.hpp"

namespace threadtrack::nn {

// Checkpoint files are plain text:
//
//   threadtrack-checkpoint 1
//   arrays <count>
//   <name> <rank> <dim_0> ... <dim_{rank-1}>
//   <v_0> <v_1> ...            (C99 hex-float literals, one line per array)
//
// Hex floats make save/load bit-exact for every finite double.
struct NamedArray {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;
};

void write_checkpoint(std::ostream& out, const std::vector<ParamSlot>& slots);
std::vector<NamedArray> read_checkpoint(std::istream& in);

// Copies arrays into matching slots; names and shapes must agree exactly.
void assign_checkpoint(const std::vector<NamedArray>& arrays, std::vector<ParamSlot>& slots);

template <ParameterSet P>
void save_params(const std::filesystem::path& path, const P& params);

template <ParameterSet P>
void load_params(const std::filesystem::path& path, P& params);

void save_slots(const std::filesystem::path& path, const std::vector<ParamSlot>& slots);
void load_slots(const std::filesystem::path& path, std::vector<ParamSlot>& slots);

template <ParameterSet P>
void save_params(const std::filesystem::path& path, const P& params) {
  save_slots(path, slots_of(params));
}

template <ParameterSet P>
void load_params(const std::filesystem::path& path, P& params) {
  auto slots = slots_of(params);
  load_slots(path, slots);
  params.touch();
}

}  // namespace threadtrack::nn
