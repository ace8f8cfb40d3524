#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "speckle_cs/image.hpp"

namespace speckle_cs {

/// Illumination settings. `cutoff` is the normalized diffraction cutoff nu in
/// (0,1]: the pass band keeps centered frequencies with |k| <= nu * N/2, and
/// nu == 1 keeps every representable frequency.
struct SpeckleConfig {
    int grid = kMnistSide;
    double cutoff = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// N x N complex amplitudes, row-major.
struct ComplexField {
    int side = 0;
    std::vector<std::complex<double>> values;
};

void validate_cutoff(double cutoff);

/// Signed frequency index of DFT bin `index` on an `n`-point grid (range [-n/2, n/2)).
int centered_frequency(int index, int n);

/// Pass-band indicator in FFT (unshifted) order, row-major n x n.
std::vector<bool> pass_band(int n, double cutoff);

/// In-place 2-D DFT. The inverse is scaled by 1/(n*n).
void fft2(ComplexField& field, bool inverse);

/// Circular-Gaussian field: real and imaginary parts i.i.d. standard normal.
ComplexField random_field(int side, std::uint64_t seed);

/// DFT of the random field with every coefficient outside the pass band set to zero.
ComplexField filtered_spectrum(const SpeckleConfig& config);

/// Random field after the Fourier-domain low-pass (the amplitude whose squared
/// modulus is the speckle intensity).
ComplexField filtered_field(const SpeckleConfig& config);

/// Fully developed speckle intensity |low_pass(field)|^2, unnormalized.
GrayImage generate_speckle(const SpeckleConfig& config);

/// Ideal low-pass filter; returns the real part of the filtered image.
GrayImage low_pass(const GrayImage& image, double cutoff);

/// Diffraction-limited view of `truth`. Values are left unclipped; use
/// clip_nonnegative for display.
GrayImage diffraction_limited_image(const GrayImage& truth, double cutoff);

GrayImage clip_nonnegative(GrayImage image);

}  // namespace speckle_cs
