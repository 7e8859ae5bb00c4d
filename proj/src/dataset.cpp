#include "polycl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

namespace polycl {

using nlohmann::json;

void SplitSpec::validate() const {
    auto overlap = [](const std::set<std::string>& a, const std::set<std::string>& b) {
        return std::any_of(a.begin(), a.end(), [&](const std::string& id) { return b.count(id); });
    };
    if (overlap(train_ids, val_ids) || overlap(train_ids, test_ids) || overlap(val_ids, test_ids))
        throw InvalidArgumentError("SplitSpec: train/val/test scan sets must be disjoint");
    if (label_fraction <= 0.0 || label_fraction > 1.0)
        throw InvalidArgumentError("SplitSpec: label_fraction outside (0,1]");
}

std::string SplitSpec::to_json() const {
    json j;
    j["train"] = std::vector<std::string>(train_ids.begin(), train_ids.end());
    j["val"] = std::vector<std::string>(val_ids.begin(), val_ids.end());
    j["test"] = std::vector<std::string>(test_ids.begin(), test_ids.end());
    j["seed"] = seed;
    j["label_fraction"] = label_fraction;
    return j.dump(2);
}

SplitSpec SplitSpec::from_json(const std::string& text) {
    const json j = json::parse(text);
    SplitSpec s;
    for (const auto& id : j.at("train")) s.train_ids.insert(id.get<std::string>());
    for (const auto& id : j.at("val")) s.val_ids.insert(id.get<std::string>());
    for (const auto& id : j.at("test")) s.test_ids.insert(id.get<std::string>());
    s.seed = j.at("seed").get<uint64_t>();
    s.label_fraction = j.at("label_fraction").get<double>();
    s.validate();
    return s;
}

DatasetIndex DatasetIndex::build(std::vector<SliceRecord> records) {
    DatasetIndex idx;
    idx.records_ = std::move(records);
    for (size_t i = 0; i < idx.records_.size(); ++i) {
        const auto& rec = idx.records_[i];
        auto [it, inserted] = idx.by_scan_.try_emplace(rec.scan_id);
        if (inserted) idx.scan_ids_.push_back(rec.scan_id);
        it->second.push_back(i);
        idx.by_organ_[rec.organ].push_back(i);
    }
    return idx;
}

namespace {
const std::vector<size_t> kEmptyIndices;
}

const std::vector<size_t>& DatasetIndex::scan_slices(const std::string& scan_id) const {
    const auto it = by_scan_.find(scan_id);
    return it == by_scan_.end() ? kEmptyIndices : it->second;
}

const std::vector<size_t>& DatasetIndex::organ_slices(OrganPresence p) const {
    const auto it = by_organ_.find(p);
    return it == by_organ_.end() ? kEmptyIndices : it->second;
}

bool DatasetIndex::fully_labeled() const {
    return organ_slices(OrganPresence::Unknown).empty();
}

void DatasetIndex::assign_split(const SplitSpec& spec) {
    spec.validate();
    splits_.assign(records_.size(), Split::Unassigned);
    for (size_t i = 0; i < records_.size(); ++i) {
        const std::string& id = records_[i].scan_id;
        if (spec.train_ids.count(id))
            splits_[i] = Split::Train;
        else if (spec.val_ids.count(id))
            splits_[i] = Split::Val;
        else if (spec.test_ids.count(id))
            splits_[i] = Split::Test;
    }
}

std::vector<size_t> DatasetIndex::split_slices(Split s) const {
    std::vector<size_t> out;
    for (size_t i = 0; i < records_.size(); ++i)
        if (split_of(i) == s) out.push_back(i);
    return out;
}

bool DatasetIndex::in_labeled_subset(size_t record_idx) const {
    return labeled_subset_.empty() || labeled_subset_[record_idx];
}

std::vector<size_t> DatasetIndex::labeled_train_slices() const {
    std::vector<size_t> out;
    for (size_t i = 0; i < records_.size(); ++i)
        if (split_of(i) == Split::Train && records_[i].mask.has_value() && in_labeled_subset(i))
            out.push_back(i);
    return out;
}

DatasetIndex build_index(const std::vector<Volume>& volumes, float middle_fraction,
                         int target_resolution) {
    std::set<std::string> seen;
    std::vector<SliceRecord> records;
    for (const Volume& v : volumes) {
        if (!seen.insert(v.scan_id).second)
            throw InvalidArgumentError("build_index: duplicate scan_id '" + v.scan_id + "'");
        auto slices = extract_middle_slices(v, middle_fraction, target_resolution);
        std::move(slices.begin(), slices.end(), std::back_inserter(records));
    }
    return DatasetIndex::build(std::move(records));
}

DatasetIndex subsample_labels(const DatasetIndex& index, double fraction, uint64_t seed) {
    if (fraction <= 0.0 || fraction > 1.0)
        throw InvalidArgumentError("subsample_labels: fraction outside (0,1]");
    std::vector<size_t> train;
    for (size_t i = 0; i < index.size(); ++i)
        if (index.split_of(i) == Split::Train && index.record(i).mask.has_value()) train.push_back(i);
    if (train.empty()) throw InvalidArgumentError("subsample_labels: empty labeled training set");

    // One permutation per seed; every fraction keeps a prefix of it, so
    // smaller fractions are subsets of larger ones.
    std::mt19937_64 rng = make_rng(seed, /*stream=*/0x5B);
    std::shuffle(train.begin(), train.end(), rng);
    const size_t keep = static_cast<size_t>(std::ceil(fraction * double(train.size())));

    DatasetIndex out = index;
    out.labeled_subset_.assign(index.size(), 0);
    for (size_t i = 0; i < index.size(); ++i)
        if (out.split_of(i) != Split::Train) out.labeled_subset_[i] = 1;  // val/test untouched
    for (size_t i = 0; i < keep; ++i) out.labeled_subset_[train[i]] = 1;
    return out;
}

SplitSpec make_split(const std::vector<std::string>& scan_ids, double val_fraction,
                     double test_fraction, uint64_t seed, double label_fraction) {
    if (val_fraction < 0 || test_fraction < 0 || val_fraction + test_fraction >= 1.0)
        throw InvalidArgumentError("make_split: fractions must be nonnegative and sum below 1");
    std::vector<std::string> ids = scan_ids;
    std::mt19937_64 rng = make_rng(seed, /*stream=*/0x51);
    std::shuffle(ids.begin(), ids.end(), rng);

    const size_t n = ids.size();
    const size_t n_val = static_cast<size_t>(std::floor(val_fraction * double(n)));
    const size_t n_test = static_cast<size_t>(std::floor(test_fraction * double(n)));
    SplitSpec spec;
    spec.seed = seed;
    spec.label_fraction = label_fraction;
    size_t i = 0;
    for (; i < n_val; ++i) spec.val_ids.insert(ids[i]);
    for (; i < n_val + n_test; ++i) spec.test_ids.insert(ids[i]);
    for (; i < n; ++i) spec.train_ids.insert(ids[i]);
    spec.validate();
    return spec;
}

}  // namespace polycl
