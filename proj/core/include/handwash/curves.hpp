#pragma once

#include <filesystem>

#include "handwash/trainer.hpp"

namespace handwash {

/// Renders one plot with four series (train/val loss and accuracy) against
/// epoch and writes it as a PNG. A single-epoch history draws point markers.
void emit_curves(const TrainHistory& history, const std::filesystem::path& out);

}  // namespace handwash
