#pragma once

#include <string>
#include <vector>

#include "vitalcast/attention.hpp"

namespace vitalcast {

/// Maps a value in [0,1] onto the five-stop color ramp
/// {0: #440154, 0.25: #3b528b, 0.5: #21918c, 0.75: #5ec962, 1: #fde725}
/// by linear RGB interpolation between neighbouring stops. Values outside
/// [0,1] are clamped. Dark means low, bright means high.
std::string ramp_color(double v);

/// Renders the attention map as one SVG with a panel per input series:
/// forecast steps down, history steps across, one 10x10 px rect per cell.
/// Each panel is normalized by its own maximum; a legend states the
/// direction of the color mapping.
std::string attention_svg(const AttentionArtifacts& art,
                          const std::vector<std::string>& series_names);

} // namespace vitalcast
