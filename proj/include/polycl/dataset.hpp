#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "polycl/volume.hpp"

namespace polycl {

enum class Split { Train, Val, Test, Unassigned };

// Scan-level split assignment plus the label-subsampling knobs. Scans never
// straddle splits, which keeps slices of one scan out of two sets.
struct SplitSpec {
    std::set<std::string> train_ids, val_ids, test_ids;
    double label_fraction = 1.0;
    uint64_t seed = 0;

    void validate() const;
    std::string to_json() const;
    static SplitSpec from_json(const std::string& text);
};

// Queryable index over all extracted slices.
class DatasetIndex {
  public:
    static DatasetIndex build(std::vector<SliceRecord> records);

    const std::vector<SliceRecord>& records() const { return records_; }
    const SliceRecord& record(size_t i) const { return records_[i]; }
    size_t size() const { return records_.size(); }

    // Indices of all slices of one scan / one organ class.
    const std::vector<size_t>& scan_slices(const std::string& scan_id) const;
    const std::vector<size_t>& organ_slices(OrganPresence p) const;
    const std::vector<std::string>& scan_ids() const { return scan_ids_; }

    bool fully_labeled() const;

    // Split handling.
    void assign_split(const SplitSpec& spec);
    Split split_of(size_t record_idx) const { return splits_.empty() ? Split::Unassigned : splits_[record_idx]; }
    std::vector<size_t> split_slices(Split s) const;

    // Labeled-subset handling (reduced-label fine-tuning). Before any
    // subsampling every labeled train slice is in the subset.
    bool in_labeled_subset(size_t record_idx) const;
    std::vector<size_t> labeled_train_slices() const;

  private:
    std::vector<SliceRecord> records_;
    std::map<std::string, std::vector<size_t>> by_scan_;
    std::map<OrganPresence, std::vector<size_t>> by_organ_;
    std::vector<std::string> scan_ids_;
    std::vector<Split> splits_;            // per record
    std::vector<uint8_t> labeled_subset_;  // per record; empty = all labeled

    friend DatasetIndex subsample_labels(const DatasetIndex&, double, uint64_t);
};

// Build an index from preprocessed volumes (window-leveled, slice-extracted).
DatasetIndex build_index(const std::vector<Volume>& volumes, float middle_fraction,
                         int target_resolution = 256);

// Uniformly keep ceil(fraction * N_train) labeled training slices, without
// replacement, deterministic per seed. Subsets nest across fractions under a
// fixed seed: the selection is a prefix of one seeded permutation.
DatasetIndex subsample_labels(const DatasetIndex& index, double fraction, uint64_t seed);

// Shuffle scans and split by fractions (rounded down for val/test, remainder
// to train).
SplitSpec make_split(const std::vector<std::string>& scan_ids, double val_fraction,
                     double test_fraction, uint64_t seed, double label_fraction = 1.0);

}  // namespace polycl
