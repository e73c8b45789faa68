#pragma once

#include <iosfwd>
#include <string>

#include "lrmr/model_sim.hpp"

namespace lrmr {

/// Binary dataset format, version 1. Layout in docs/FORMATS.md.
/// Round trips are bit-exact.
void write_dataset(std::ostream& os, const Dataset& data);
Dataset read_dataset(std::istream& is);

void save_dataset(const std::string& path, const Dataset& data);
Dataset load_dataset(const std::string& path);

}  // namespace lrmr
