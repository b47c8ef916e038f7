#include "widedoa/geometry.hpp"

#include <cmath>
#include <string>

#include "widedoa/errors.hpp"

namespace widedoa {
namespace {

void check_angle(double doa_deg) {
  if (!(doa_deg >= -90.0 && doa_deg <= 90.0)) {
    throw DomainError("direction " + std::to_string(doa_deg) + " deg outside [-90, 90]");
  }
}

}  // namespace

void ArrayGeometry::validate() const {
  if (num_sensors < 2) throw DomainError("array needs at least two sensors");
  if (!(spacing > 0.0)) throw DomainError("sensor spacing must be positive");
  if (!(sound_speed > 0.0)) throw DomainError("sound speed must be positive");
}

double ArrayGeometry::sensor_delay(int p, double doa_deg) const {
  return p * spacing * std::sin(deg2rad(doa_deg)) / sound_speed;
}

CMatrix steering_matrix(const ArrayGeometry& geom, double frequency,
                        std::span<const double> doas_deg) {
  geom.validate();
  if (!(frequency > 0.0)) throw DomainError("steering frequency must be positive");
  CMatrix a(geom.num_sensors, static_cast<Eigen::Index>(doas_deg.size()));
  for (std::size_t q = 0; q < doas_deg.size(); ++q) {
    check_angle(doas_deg[q]);
    for (int p = 0; p < geom.num_sensors; ++p) {
      const double phase = -2.0 * kPi * frequency * geom.sensor_delay(p, doas_deg[q]);
      a(p, static_cast<Eigen::Index>(q)) = std::polar(1.0, phase);
    }
  }
  return a;
}

CVector steering_vector(const ArrayGeometry& geom, double frequency, double doa_deg) {
  const double doas[] = {doa_deg};
  return steering_matrix(geom, frequency, doas).col(0);
}

double aliasing_frequency(const ArrayGeometry& geom, double doa_deg) {
  geom.validate();
  check_angle(doa_deg);
  const double s = std::abs(std::sin(deg2rad(doa_deg)));
  if (s == 0.0) return std::numeric_limits<double>::infinity();
  return geom.sound_speed / (2.0 * geom.spacing * s);
}

double lowest_aliasing_frequency(const ArrayGeometry& geom) {
  geom.validate();
  return geom.sound_speed / (2.0 * geom.spacing);
}

}  // namespace widedoa
