#pragma once

#include "pvdamp/core.hpp"

namespace pvdamp {

// Centered, unitary 2-D DFT: DC sits at (H/2, W/2) and both directions are scaled
// by 1/sqrt(H*W), so ifft2c is both the inverse and the adjoint of fft2c.
// Dimensions must be even. Non-finite input is rejected.

ComplexImage fft2c(const ComplexImage& img);
ComplexImage ifft2c(const ComplexImage& ksp);

// In-place variants over a row-major (rows x cols) buffer.
void fft2c_inplace(std::span<cplx> data, int rows, int cols);
void ifft2c_inplace(std::span<cplx> data, int rows, int cols);

}  // namespace pvdamp
