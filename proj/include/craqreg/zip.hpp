#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "craqreg/pipeline.hpp"

namespace craqreg {

/// Uncompressed (stored) zip archive with a fixed 1980-01-01 timestamp, so
/// identical inputs give identical bytes.
std::vector<std::uint8_t> make_zip(const std::vector<BundleFile>& files);

/// Names of the entries in a stored zip, in archive order. Throws
/// Error(InvalidInput) on a malformed archive.
std::vector<std::string> zip_entry_names(const std::vector<std::uint8_t>& archive);

}  // namespace craqreg
