#include "bbm/sinks.hpp"

#include <cstdio>

namespace bbm {

std::string format_double(double v) {
  char buf[40];
  // %.17g round-trips any double; trim to the shortest form that does.
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) break;
  }
  return buf;
}

CsvSnapshotWriter::CsvSnapshotWriter(std::ostream& os, int dim) : os_(os) {
  os_ << "# schema=1\n";
  os_ << "replicate_id,t,epoch,tau,particle_id";
  for (int k = 0; k < dim; ++k) os_ << ",x" << k;
  os_ << "\n";
}

void CsvSnapshotWriter::write(std::uint32_t replicate, double t,
                              const ParticleCloud& cloud) {
  const std::size_t n = cloud.count();
  for (std::size_t i = 0; i < n; ++i) {
    os_ << replicate << ',' << format_double(t) << ',' << cloud.epoch << ','
        << format_double(cloud.tau) << ',' << i;
    for (int k = 0; k < cloud.dim; ++k)
      os_ << ',' << format_double(cloud.pos(i, k));
    os_ << '\n';
  }
}

void JsonlSnapshotWriter::write(std::uint32_t replicate, double t,
                                const ParticleCloud& cloud) {
  const std::size_t n = cloud.count();
  for (std::size_t i = 0; i < n; ++i) {
    nlohmann::json row{{"replicate_id", replicate},
                       {"t", t},
                       {"epoch", cloud.epoch},
                       {"tau", cloud.tau},
                       {"particle_id", i}};
    nlohmann::json xs = nlohmann::json::array();
    for (int k = 0; k < cloud.dim; ++k) xs.push_back(cloud.pos(i, k));
    row["x"] = xs;
    os_ << row.dump() << '\n';
  }
}

}  // namespace bbm
