#pragma once

#include <mutex>

#include "beamsr/dispersion.hpp"

namespace beamsr {

struct KernelCache {
  std::once_flag higgs_once;
  std::once_flag goldstone_once;
  TimeKernel higgs;
  TimeKernel goldstone;
};

}  // namespace beamsr
