#include "polycl/volume.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "polycl/nifti.hpp"

namespace fs = std::filesystem;

namespace polycl {

Image2D Volume::slice(int k) const {
    Image2D img(height, width);
    const size_t base = static_cast<size_t>(k) * height * width;
    std::copy_n(voxels.begin() + base, img.size(), img.data.begin());
    return img;
}

Mask2D Volume::label_slice(int k) const {
    Mask2D m(height, width);
    const size_t base = static_cast<size_t>(k) * height * width;
    std::copy_n(label.begin() + base, m.size(), m.data.begin());
    return m;
}

void Volume::validate() const {
    if (height < 8 || width < 8 || depth < 1)
        throw InvalidArgumentError("Volume: shape must satisfy H,W >= 8 and D >= 1");
    if (voxels.size() != voxel_count()) throw InvalidArgumentError("Volume: voxel buffer size mismatch");
    if (!label.empty()) {
        if (label.size() != voxel_count())
            throw ShapeMismatchError("Volume: label shape differs from image shape");
        for (uint8_t v : label)
            if (v > 1) throw InvalidArgumentError("Volume: label is not binary");
    }
    if (normalized)
        for (float v : voxels)
            if (v < 0.f || v > 1.f)
                throw InvalidArgumentError("Volume: normalized voxels outside [0,1]");
}

namespace {

Volume from_nifti(const NiftiImage& img, std::string scan_id) {
    Volume v;
    // NIfTI x is the fastest axis; map x->columns, y->rows, z->slices.
    v.height = img.ny;
    v.width = img.nx;
    v.depth = img.nz;
    v.spacing = {img.dy, img.dx, img.dz};
    v.scan_id = std::move(scan_id);
    v.voxels.resize(v.voxel_count());
    for (int k = 0; k < v.depth; ++k)
        for (int i = 0; i < v.height; ++i)
            for (int j = 0; j < v.width; ++j) v.at(i, j, k) = img.at(j, i, k);
    return v;
}

std::string strip_nii_suffix(std::string name) {
    for (const char* suf : {".nii.gz", ".nii"}) {
        const size_t n = std::string(suf).size();
        if (name.size() > n && name.compare(name.size() - n, n, suf) == 0)
            return name.substr(0, name.size() - n);
    }
    return name;
}

std::string sibling_label_path(const std::string& image_path) {
    const fs::path p(image_path);
    if (p.parent_path().filename() != "images") return "";
    const fs::path labels_dir = p.parent_path().parent_path() / "labels";
    for (const char* suf : {".nii.gz", ".nii"}) {
        const fs::path cand = labels_dir / (strip_nii_suffix(p.filename().string()) + suf);
        if (fs::exists(cand)) return cand.string();
    }
    return "";
}

}  // namespace

Volume load_volume(const std::string& image_path, const std::string& label_path) {
    if (!fs::exists(image_path)) throw MissingFileError("load_volume: no such file: " + image_path);
    const NiftiImage img = nifti_read(image_path);
    Volume v = from_nifti(img, strip_nii_suffix(fs::path(image_path).filename().string()));

    std::string lbl = label_path.empty() ? sibling_label_path(image_path) : label_path;
    if (!lbl.empty()) {
        if (!fs::exists(lbl)) throw MissingFileError("load_volume: no such label file: " + lbl);
        const NiftiImage lab = nifti_read(lbl);
        if (lab.nx != img.nx || lab.ny != img.ny || lab.nz != img.nz)
            throw ShapeMismatchError("load_volume: label grid differs from image grid: " + lbl);
        v.label.resize(v.voxel_count());
        for (int k = 0; k < v.depth; ++k)
            for (int i = 0; i < v.height; ++i)
                for (int j = 0; j < v.width; ++j)
                    v.label[(static_cast<size_t>(k) * v.height + i) * v.width + j] =
                        lab.at(j, i, k) > 0.5f ? 1 : 0;
    }
    v.validate();
    return v;
}

void save_volume(const std::string& root, const Volume& v) {
    const fs::path images = fs::path(root) / "images";
    fs::create_directories(images);
    NiftiImage img;
    img.nx = v.width;
    img.ny = v.height;
    img.nz = v.depth;
    img.dx = v.spacing[1];
    img.dy = v.spacing[0];
    img.dz = v.spacing[2];
    img.data.resize(v.voxel_count());
    for (int k = 0; k < v.depth; ++k)
        for (int i = 0; i < v.height; ++i)
            for (int j = 0; j < v.width; ++j)
                img.data[(static_cast<size_t>(k) * img.ny + i) * img.nx + j] = v.at(i, j, k);
    nifti_write((images / (v.scan_id + ".nii.gz")).string(), img);

    if (v.has_label()) {
        const fs::path labels = fs::path(root) / "labels";
        fs::create_directories(labels);
        NiftiImage lab = img;
        for (size_t idx = 0; idx < v.label.size(); ++idx) lab.data[idx] = v.label[idx];
        // Note label uses the same memory layout as the image written above.
        for (int k = 0; k < v.depth; ++k)
            for (int i = 0; i < v.height; ++i)
                for (int j = 0; j < v.width; ++j)
                    lab.data[(static_cast<size_t>(k) * img.ny + i) * img.nx + j] =
                        v.label[(static_cast<size_t>(k) * v.height + i) * v.width + j];
        nifti_write((labels / (v.scan_id + ".nii.gz")).string(), lab, NiftiDtype::Uint8);
    }
}

Volume window_level(const Volume& v, float center, float width) {
    if (width <= 0.f) throw InvalidArgumentError("window_level: width must be positive");
    if (v.normalized)
        throw InvalidArgumentError("window_level: volume already normalized; apply once");
    const float lo = center - width / 2.f;
    Volume out = v;
    for (float& x : out.voxels) x = std::clamp((x - lo) / width, 0.f, 1.f);
    out.normalized = true;
    return out;
}

std::vector<SliceRecord> extract_middle_slices(const Volume& v, float fraction,
                                               int target_resolution) {
    if (!v.normalized) throw InvalidArgumentError("extract_middle_slices: volume not normalized");
    if (fraction <= 0.f || fraction > 1.f)
        throw InvalidArgumentError("extract_middle_slices: fraction outside (0,1]");
    const int d = v.depth;
    const int count = std::min(d, static_cast<int>(std::ceil(double(fraction) * d)));
    const int center = d / 2;
    int start = center - count / 2;
    start = std::max(0, std::min(start, d - count));

    std::vector<SliceRecord> out;
    out.reserve(count);
    for (int k = start; k < start + count; ++k) {
        SliceRecord rec;
        rec.scan_id = v.scan_id;
        rec.slice_index = k;
        rec.pixels = resize_bilinear(v.slice(k), target_resolution, target_resolution);
        if (v.has_label()) {
            Mask2D m = resize_nearest(v.label_slice(k), target_resolution, target_resolution);
            rec.organ = m.empty_mask() ? OrganPresence::Absent : OrganPresence::Present;
            rec.mask = std::move(m);
        }
        out.push_back(std::move(rec));
    }
    return out;
}

namespace {

bool organ_spans_all_slices(const Volume& v) {
    bool any_present = false, any_absent = false;
    for (int k = 0; k < v.depth; ++k) {
        bool fg = false;
        for (int i = 0; i < v.height && !fg; ++i)
            for (int j = 0; j < v.width; ++j)
                if (v.label_at(i, j, k)) {
                    fg = true;
                    break;
                }
        (fg ? any_present : any_absent) = true;
    }
    return !(any_present && any_absent);
}

Volume phantom_attempt(uint64_t seed, const PhantomConfig& cfg) {
    const auto [h, w, d] = cfg.shape;
    Volume v;
    v.height = h;
    v.width = w;
    v.depth = d;
    v.scan_id = "phantom-" + std::to_string(seed);
    v.voxels.resize(v.voxel_count());
    v.label.assign(v.voxel_count(), 0);

    std::mt19937_64 rng = make_rng(seed, /*stream=*/0xC7);
    std::normal_distribution<float> bg_noise(0.f, cfg.background_noise);
    std::normal_distribution<float> organ_noise(0.f, cfg.organ_noise);
    std::uniform_real_distribution<float> organ_hu(cfg.organ_hu_min, cfg.organ_hu_max);

    // Semi-axes: in-plane from the configured range, through-plane capped so
    // that at least one slice stays organ-free (interior test is strict, so
    // the occupied slice range is [ck-rk+1, ck+rk-1], 2rk-1 <= d-1 slices).
    std::uniform_int_distribution<int> rad(cfg.organ_radius[0], cfg.organ_radius[1]);
    const int ri = rad(rng), rj = rad(rng);
    const int rk = std::clamp(rad(rng), 1, std::max(1, d / 2));
    if (2 * ri + 1 > h || 2 * rj + 1 > w)
        throw InvalidArgumentError("make_phantom: organ radii exceed volume bounds");

    std::uniform_int_distribution<int> ci_d(ri, h - 1 - ri);
    std::uniform_int_distribution<int> cj_d(rj, w - 1 - rj);
    std::uniform_int_distribution<int> ck_d(rk - 1, d - rk);
    const int ci = ci_d(rng), cj = cj_d(rng), ck = ck_d(rng);
    const float hu = organ_hu(rng);

    for (int k = 0; k < d; ++k)
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                const float di = float(i - ci) / ri, dj = float(j - cj) / rj,
                            dk = float(k - ck) / rk;
                const bool inside = di * di + dj * dj + dk * dk < 1.f;
                if (inside) {
                    v.at(i, j, k) = hu + organ_noise(rng);
                    v.label[(static_cast<size_t>(k) * h + i) * w + j] = 1;
                } else {
                    v.at(i, j, k) = cfg.background_hu + bg_noise(rng);
                }
            }
    return v;
}

}  // namespace

Volume make_phantom(uint64_t seed, const PhantomConfig& cfg) {
    const auto [h, w, d] = cfg.shape;
    if (h < 8 || w < 8 || d < 1) throw InvalidArgumentError("make_phantom: shape too small");
    if (cfg.organ_radius[0] < 1 || cfg.organ_radius[0] > cfg.organ_radius[1])
        throw InvalidArgumentError("make_phantom: bad radius range");
    if (2 * cfg.organ_radius[0] + 1 > h || 2 * cfg.organ_radius[0] + 1 > w)
        throw InvalidArgumentError("make_phantom: organ radii exceed volume bounds");

    constexpr int kMaxAttempts = 16;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Volume v = phantom_attempt(seed + attempt, cfg);
        if (d >= 2 && organ_spans_all_slices(v)) continue;  // retry with next seed
        v.scan_id = "phantom-" + std::to_string(seed);
        v.provenance = "seed=" + std::to_string(seed) + ";used_seed=" +
                       std::to_string(seed + attempt) + ";attempts=" +
                       std::to_string(attempt + 1);
        v.validate();
        return v;
    }
    throw Error("make_phantom: could not place organ with empty slices after retries");
}

}  // namespace polycl
