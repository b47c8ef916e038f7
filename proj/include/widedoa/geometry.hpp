#pragma once

#include <limits>
#include <span>

#include "widedoa/linalg.hpp"

namespace widedoa {

inline constexpr double kDefaultSoundSpeed = 343.0;

// Uniform linear array. Sensor p (zero-based) sits at p * spacing along the
// array axis; angles are measured from broadside (0 deg) to endfire (+-90 deg).
struct ArrayGeometry {
  int num_sensors = 5;
  double spacing = 0.044;
  double sound_speed = kDefaultSoundSpeed;

  // Throws DomainError unless P >= 2, spacing > 0 and sound speed > 0.
  void validate() const;

  // Delay of sensor p relative to sensor 0 for a plane wave from `doa_deg`.
  double sensor_delay(int p, double doa_deg) const;
};

// P x Q matrix with entry (p, q) = exp(-j 2 pi f p d sin(theta_q) / c).
// Throws DomainError for f <= 0 or angles outside [-90, 90].
CMatrix steering_matrix(const ArrayGeometry& geom, double frequency,
                        std::span<const double> doas_deg);

CVector steering_vector(const ArrayGeometry& geom, double frequency, double doa_deg);

// Spatial-aliasing limit c / (2 d |sin theta|) in continuous hertz. Returns
// +infinity at broadside, where no aliasing limit exists. Quantization to the
// bin grid is the caller's business.
double aliasing_frequency(const ArrayGeometry& geom, double doa_deg);

// Worst case over all directions (endfire): c / (2 d).
double lowest_aliasing_frequency(const ArrayGeometry& geom);

inline bool has_aliasing_limit(double f) { return f != std::numeric_limits<double>::infinity(); }

}  // namespace widedoa
