#pragma once

#include <cstdint>
#include <ostream>

#include <nlohmann/json.hpp>

#include "bbm/model.hpp"

namespace bbm {

/// Streams cloud snapshots as CSV rows:
///   replicate_id, t, epoch, tau, particle_id, x0..x{d-1}
/// A "# schema=1" comment line precedes the header.
class CsvSnapshotWriter {
 public:
  CsvSnapshotWriter(std::ostream& os, int dim);
  void write(std::uint32_t replicate, double t, const ParticleCloud& cloud);

 private:
  std::ostream& os_;
};

/// Same records as JSON objects, one per line.
class JsonlSnapshotWriter {
 public:
  explicit JsonlSnapshotWriter(std::ostream& os) : os_(os) {}
  void write(std::uint32_t replicate, double t, const ParticleCloud& cloud);

 private:
  std::ostream& os_;
};

/// Shortest round-trippable decimal representation, used everywhere a
/// number reaches an output byte stream so identical runs produce
/// identical files.
std::string format_double(double v);

}  // namespace bbm
