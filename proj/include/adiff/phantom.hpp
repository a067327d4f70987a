#pragma once

#include "adiff/volume.hpp"

namespace adiff {

/// Piecewise-constant ground-truth image for quantitative experiments:
/// background at 25% of peak, a large centered disk at 50%, and a concentric
/// inner disk at 85%. Disk radii scale with the short image side (5/16 and
/// 5/32 of it), so the default 128x128 phantom has radii 40 and 20.
Volume make_phantom(int nx = 128, int ny = 128, double peak = 100.0);

}  // namespace adiff
