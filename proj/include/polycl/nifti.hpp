#pragma once

#include <array>
#include <string>
#include <vector>

#include "polycl/common.hpp"

namespace polycl {

// Minimal single-file NIfTI-1 support (.nii and .nii.gz): 3D scalar images,
// voxel spacing from pixdim, scl_slope/scl_inter applied on read. The affine
// is ignored beyond spacing.
struct NiftiImage {
    int nx = 0, ny = 0, nz = 0;          // fastest to slowest varying
    float dx = 1.f, dy = 1.f, dz = 1.f;  // spacing in mm
    std::vector<float> data;             // size nx*ny*nz, x fastest

    float at(int x, int y, int z) const {
        return data[(static_cast<size_t>(z) * ny + y) * nx + x];
    }
};

NiftiImage nifti_read(const std::string& path);

enum class NiftiDtype { Float32, Int16, Uint8 };

void nifti_write(const std::string& path, const NiftiImage& img,
                 NiftiDtype dtype = NiftiDtype::Float32);

}  // namespace polycl
