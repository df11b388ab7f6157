#pragma once

// Constants calibrated once against the fixture flow family and then frozen.
namespace fixtures {

// max over {zero, shear A = 0.5, 1, 2, alternating A = 2} of tau2 / (tau1 (1 + |u|_C2 tau1))
// at n = 32, gamma = 0.05 is 0.0253303 (the flow-free value).
inline constexpr double kCcal = 0.026;

// Largest C_d required by the five n = 64 transport-difference fixtures
// (gamma = 3e-5, t <= 0.5, datum = sum of the 4 lowest modes) is 0.002865.
inline constexpr double kCd = 0.004;

}  // namespace fixtures
