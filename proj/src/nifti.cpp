#include "polycl/nifti.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <memory>

namespace polycl {

namespace {

// NIfTI-1 header, 348 bytes. Only the fields we touch are named; the rest
// live in padding blocks so offsets stay exact.
#pragma pack(push, 1)
struct Nifti1Header {
    int32_t sizeof_hdr;     // 0   : must be 348
    char pad0[36];          // 4
    int16_t dim[8];         // 40  : dim[0]=rank, dim[1..3]=nx,ny,nz
    char pad1[14];          // 56
    int16_t datatype;       // 70
    int16_t bitpix;         // 72
    int16_t slice_start;    // 74
    float pixdim[8];        // 76
    float vox_offset;       // 108
    float scl_slope;        // 112
    float scl_inter;        // 116
    char pad2[224];         // 120
    char magic[4];          // 344 : "n+1\0"
};
#pragma pack(pop)
static_assert(sizeof(Nifti1Header) == 348, "NIfTI-1 header must be 348 bytes");

constexpr int16_t kDtUint8 = 2;
constexpr int16_t kDtInt16 = 4;
constexpr int16_t kDtInt32 = 8;
constexpr int16_t kDtFloat32 = 16;
constexpr int16_t kDtFloat64 = 64;
constexpr int16_t kDtUint16 = 512;

struct GzFileCloser {
    void operator()(gzFile f) const {
        if (f) gzclose(f);
    }
};
using GzHandle = std::unique_ptr<std::remove_pointer_t<gzFile>, GzFileCloser>;

void gz_read_exact(gzFile f, void* dst, size_t bytes, const std::string& path) {
    size_t done = 0;
    auto* p = static_cast<char*>(dst);
    while (done < bytes) {
        const unsigned chunk = static_cast<unsigned>(std::min<size_t>(bytes - done, 1u << 28));
        const int got = gzread(f, p + done, chunk);
        if (got <= 0) throw FormatError("nifti_read: truncated file: " + path);
        done += static_cast<size_t>(got);
    }
}

void gz_write_exact(gzFile f, const void* src, size_t bytes, const std::string& path) {
    size_t done = 0;
    const auto* p = static_cast<const char*>(src);
    while (done < bytes) {
        const unsigned chunk = static_cast<unsigned>(std::min<size_t>(bytes - done, 1u << 28));
        const int put = gzwrite(f, p + done, chunk);
        if (put <= 0) throw Error("nifti_write: write failed: " + path);
        done += static_cast<size_t>(put);
    }
}

template <typename T>
void convert_voxels(const std::vector<char>& raw, size_t count, float slope, float inter,
                    std::vector<float>& out) {
    const T* src = reinterpret_cast<const T*>(raw.data());
    out.resize(count);
    for (size_t i = 0; i < count; ++i)
        out[i] = static_cast<float>(src[i]) * slope + inter;
}

}  // namespace

NiftiImage nifti_read(const std::string& path) {
    if (!std::filesystem::exists(path)) throw MissingFileError("nifti_read: no such file: " + path);
    // gzread handles plain (uncompressed) files transparently.
    GzHandle f(gzopen(path.c_str(), "rb"));
    if (!f) throw MissingFileError("nifti_read: cannot open: " + path);

    Nifti1Header hdr{};
    gz_read_exact(f.get(), &hdr, sizeof(hdr), path);
    if (hdr.sizeof_hdr != 348 || std::strncmp(hdr.magic, "n+1", 3) != 0)
        throw FormatError("nifti_read: not a single-file NIfTI-1 image: " + path);
    // Accept rank-3 images, or higher ranks whose trailing dims are all 1.
    if (hdr.dim[0] < 3) throw FormatError("nifti_read: image is not 3D: " + path);
    for (int d = 4; d <= hdr.dim[0]; ++d)
        if (hdr.dim[d] > 1) throw FormatError("nifti_read: image is not 3D: " + path);

    NiftiImage img;
    img.nx = hdr.dim[1];
    img.ny = hdr.dim[2];
    img.nz = hdr.dim[3];
    if (img.nx <= 0 || img.ny <= 0 || img.nz <= 0)
        throw FormatError("nifti_read: bad dimensions: " + path);
    img.dx = hdr.pixdim[1] > 0 ? hdr.pixdim[1] : 1.f;
    img.dy = hdr.pixdim[2] > 0 ? hdr.pixdim[2] : 1.f;
    img.dz = hdr.pixdim[3] > 0 ? hdr.pixdim[3] : 1.f;

    const float slope = hdr.scl_slope == 0.f ? 1.f : hdr.scl_slope;
    const float inter = hdr.scl_slope == 0.f ? 0.f : hdr.scl_inter;

    const size_t count = size_t(img.nx) * img.ny * img.nz;
    const int bytes_per = hdr.bitpix / 8;
    if (bytes_per <= 0) throw FormatError("nifti_read: bad bitpix: " + path);

    // Skip any extension bytes between header end and vox_offset.
    const long skip = static_cast<long>(hdr.vox_offset) - static_cast<long>(sizeof(hdr));
    if (skip < 0) throw FormatError("nifti_read: bad vox_offset: " + path);
    if (skip > 0) {
        std::vector<char> junk(static_cast<size_t>(skip));
        gz_read_exact(f.get(), junk.data(), junk.size(), path);
    }

    std::vector<char> raw(count * static_cast<size_t>(bytes_per));
    gz_read_exact(f.get(), raw.data(), raw.size(), path);

    switch (hdr.datatype) {
        case kDtUint8: convert_voxels<uint8_t>(raw, count, slope, inter, img.data); break;
        case kDtInt16: convert_voxels<int16_t>(raw, count, slope, inter, img.data); break;
        case kDtUint16: convert_voxels<uint16_t>(raw, count, slope, inter, img.data); break;
        case kDtInt32: convert_voxels<int32_t>(raw, count, slope, inter, img.data); break;
        case kDtFloat32: convert_voxels<float>(raw, count, slope, inter, img.data); break;
        case kDtFloat64: convert_voxels<double>(raw, count, slope, inter, img.data); break;
        default:
            throw FormatError("nifti_read: unsupported datatype " + std::to_string(hdr.datatype) +
                              ": " + path);
    }
    return img;
}

void nifti_write(const std::string& path, const NiftiImage& img, NiftiDtype dtype) {
    if (img.nx <= 0 || img.ny <= 0 || img.nz <= 0)
        throw InvalidArgumentError("nifti_write: empty image");
    const size_t count = size_t(img.nx) * img.ny * img.nz;
    if (img.data.size() != count) throw InvalidArgumentError("nifti_write: data/shape mismatch");

    Nifti1Header hdr{};
    hdr.sizeof_hdr = 348;
    hdr.dim[0] = 3;
    hdr.dim[1] = static_cast<int16_t>(img.nx);
    hdr.dim[2] = static_cast<int16_t>(img.ny);
    hdr.dim[3] = static_cast<int16_t>(img.nz);
    for (int d = 4; d < 8; ++d) hdr.dim[d] = 1;
    hdr.pixdim[0] = 1.f;
    hdr.pixdim[1] = img.dx;
    hdr.pixdim[2] = img.dy;
    hdr.pixdim[3] = img.dz;
    hdr.vox_offset = 352.f;
    hdr.scl_slope = 1.f;
    hdr.scl_inter = 0.f;
    std::memcpy(hdr.magic, "n+1", 4);

    std::vector<char> payload;
    switch (dtype) {
        case NiftiDtype::Float32: {
            hdr.datatype = kDtFloat32;
            hdr.bitpix = 32;
            payload.resize(count * 4);
            std::memcpy(payload.data(), img.data.data(), payload.size());
            break;
        }
        case NiftiDtype::Int16: {
            hdr.datatype = kDtInt16;
            hdr.bitpix = 16;
            payload.resize(count * 2);
            auto* dst = reinterpret_cast<int16_t*>(payload.data());
            for (size_t i = 0; i < count; ++i) dst[i] = static_cast<int16_t>(std::lround(img.data[i]));
            break;
        }
        case NiftiDtype::Uint8: {
            hdr.datatype = kDtUint8;
            hdr.bitpix = 8;
            payload.resize(count);
            auto* dst = reinterpret_cast<uint8_t*>(payload.data());
            for (size_t i = 0; i < count; ++i) dst[i] = static_cast<uint8_t>(std::lround(img.data[i]));
            break;
        }
    }

    const bool gz = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
    GzHandle f(gzopen(path.c_str(), gz ? "wb" : "wT"));  // "T" stores without compression
    if (!f) throw Error("nifti_write: cannot open for writing: " + path);
    gz_write_exact(f.get(), &hdr, sizeof(hdr), path);
    const char ext[4] = {0, 0, 0, 0};  // no header extensions
    gz_write_exact(f.get(), ext, 4, path);
    gz_write_exact(f.get(), payload.data(), payload.size(), path);
}

}  // namespace polycl
