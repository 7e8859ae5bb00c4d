#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "polycl/image.hpp"

namespace polycl {

// A 3D CT scan. Voxels are Hounsfield units on load and dimensionless in
// [0,1] once `normalized` is set by window_level. Slices run along the third
// axis and are stored contiguously (index (i,j,k) -> data[k*H*W + i*W + j]).
struct Volume {
    int height = 0;  // H, rows
    int width = 0;   // W, cols
    int depth = 0;   // D, slice count
    std::array<float, 3> spacing = {1.f, 1.f, 1.f};
    std::vector<float> voxels;
    std::vector<uint8_t> label;  // empty or H*W*D binary
    std::string scan_id;
    std::string provenance;  // free-form generation note (phantoms)
    bool normalized = false;

    bool has_label() const { return !label.empty(); }
    size_t voxel_count() const { return static_cast<size_t>(height) * width * depth; }
    float& at(int i, int j, int k) {
        return voxels[(static_cast<size_t>(k) * height + i) * width + j];
    }
    float at(int i, int j, int k) const {
        return voxels[(static_cast<size_t>(k) * height + i) * width + j];
    }
    uint8_t label_at(int i, int j, int k) const {
        return label[(static_cast<size_t>(k) * height + i) * width + j];
    }

    Image2D slice(int k) const;
    Mask2D label_slice(int k) const;

    void validate() const;
};

enum class OrganPresence { Absent, Present, Unknown };

// One preprocessed 2D slice plus provenance.
struct SliceRecord {
    std::string scan_id;
    int slice_index = 0;
    Image2D pixels;               // target-resolution, values in [0,1]
    OrganPresence organ = OrganPresence::Unknown;
    std::optional<Mask2D> mask;   // target-resolution binary mask

    bool organ_present() const { return organ == OrganPresence::Present; }
    bool organ_known() const { return organ != OrganPresence::Unknown; }
};

// Load a 3D NIfTI scan; attaches `labels/<id>` sibling when the file lives
// under an `images/` directory and the sibling exists, or an explicit label
// path is given. Raw HU intensities are kept as stored.
Volume load_volume(const std::string& image_path, const std::string& label_path = "");

// Write volume (and label when present, under labels/) using the
// images/<id>.nii.gz, labels/<id>.nii.gz layout rooted at `root`.
void save_volume(const std::string& root, const Volume& v);

// Clip to [center - width/2, center + width/2] and map affinely to [0,1].
// Must be applied exactly once; re-application is rejected.
Volume window_level(const Volume& v, float center, float width);

// The ceil(fraction*D) slices centered on floor(D/2); ties put the extra
// slice on the low-index side. Slices are resized to target_resolution
// (bilinear; label nearest-neighbour).
std::vector<SliceRecord> extract_middle_slices(const Volume& v, float fraction,
                                               int target_resolution = 256);

struct PhantomConfig {
    std::array<int, 3> shape = {64, 64, 40};   // H, W, D
    std::array<int, 2> organ_radius = {5, 10};  // voxel radius range (inclusive)
    float background_hu = 20.f;
    float background_noise = 15.f;
    float organ_hu_min = 70.f;
    float organ_hu_max = 130.f;
    float organ_noise = 10.f;
};

// Deterministic synthetic scan: one ellipsoid of elevated intensity in a
// noisy background, exact voxel mask as label. Guarantees at least one slice
// with the organ and one without; retries with consecutive seeds when a draw
// violates that, recording attempts in `provenance`.
Volume make_phantom(uint64_t seed, const PhantomConfig& cfg = {});

}  // namespace polycl
