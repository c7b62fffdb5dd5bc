#pragma once

#include <string>

#include "iterdet/detector.hpp"

namespace iterdet {

inline constexpr const char* kCheckpointMagic = "ITERDET-CKPT-1";

struct Checkpoint {
  DetectorConfig config;
  DetectorParams params;
};

// JSON document: magic string, detector config, then one entry per
// parameter with name, shape, and row-major values.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace iterdet
