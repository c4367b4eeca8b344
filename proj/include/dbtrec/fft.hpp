#pragma once

#include <complex>
#include <vector>

namespace dbtrec {

/// In-place iterative radix-2 FFT; length must be a power of two.
/// The inverse includes the 1/N scaling.
void fft(std::vector<std::complex<double>>& a, bool inverse);

std::size_t next_pow2(std::size_t n);

}  // namespace dbtrec
