#pragma once

#include <cstdint>

#include "handwash/manifest.hpp"

namespace handwash {

// Validation count for one class: round-half-up(count * fraction), clamped
// to [1, count - 1] so neither stratum ever ends up empty.
std::size_t val_count_for_class(std::size_t class_count, double val_fraction);

// Deterministic stratified train/validation assignment. Identical
// (manifest, val_fraction, seed) triples produce identical splits.
DatasetManifest make_split(const DatasetManifest& manifest, double val_fraction,
                           std::uint64_t seed);

}  // namespace handwash
