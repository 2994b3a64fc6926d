// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>

namespace agwire {

/// Exponentially scaled modified Bessel functions of integer order for complex argument
/// with Re z > 0: scaled_i(n, z) = exp(-z) I_n(z), scaled_k(n, z) = exp(z) K_n(z).
std::complex<double> scaled_i(int n, std::complex<double> z);
std::complex<double> scaled_k(int n, std::complex<double> z);

}  // namespace agwire
