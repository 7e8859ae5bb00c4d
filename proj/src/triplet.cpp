#include "polycl/triplet.hpp"

#include <algorithm>
#include <fstream>

namespace polycl {

Strategy strategy_from_string(const std::string& s) {
    if (s == "S" || s == "s") return Strategy::S;
    if (s == "O" || s == "o") return Strategy::O;
    if (s == "M" || s == "m") return Strategy::M;
    throw InvalidArgumentError("unknown strategy '" + s + "' (expected S, O or M)");
}

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::S: return "S";
        case Strategy::O: return "O";
        case Strategy::M: return "M";
    }
    return "?";
}

namespace {

size_t pick(const std::vector<size_t>& candidates, std::mt19937_64& rng) {
    std::uniform_int_distribution<size_t> d(0, candidates.size() - 1);
    return candidates[d(rng)];
}

size_t pick_excluding(const std::vector<size_t>& candidates, size_t excluded,
                      std::mt19937_64& rng) {
    // Uniform over candidates minus one known element, without materializing
    // the filtered set.
    const size_t n = candidates.size();
    std::uniform_int_distribution<size_t> d(0, n - 2);
    size_t i = d(rng);
    if (candidates[i] == excluded) i = n - 1;
    return candidates[i];
}

OrganPresence opposite(OrganPresence p) {
    return p == OrganPresence::Present ? OrganPresence::Absent : OrganPresence::Present;
}

}  // namespace

Triplet sample_scan_based(const DatasetIndex& index, size_t anchor, std::mt19937_64& rng) {
    const auto& rec = index.record(anchor);
    const auto& same_scan = index.scan_slices(rec.scan_id);
    if (same_scan.size() < 2)
        throw SamplingError("scan-based: scan '" + rec.scan_id + "' has no positive candidate");
    if (index.scan_ids().size() < 2)
        throw SamplingError("scan-based: dataset has a single scan, no negative candidate");

    Triplet t;
    t.anchor = anchor;
    t.strategy = Strategy::S;
    t.positive = pick_excluding(same_scan, anchor, rng);

    // Negative: uniform over slices of all other scans.
    size_t other_total = index.size() - same_scan.size();
    std::uniform_int_distribution<size_t> d(0, other_total - 1);
    size_t target = d(rng);
    for (size_t i = 0; i < index.size(); ++i) {
        if (index.record(i).scan_id == rec.scan_id) continue;
        if (target-- == 0) {
            t.negative = i;
            break;
        }
    }
    return t;
}

Triplet sample_organ_based(const DatasetIndex& index, size_t anchor, std::mt19937_64& rng) {
    const auto& rec = index.record(anchor);
    if (!rec.organ_known())
        throw SamplingError("organ-based: anchor has unknown organ presence");
    const auto& same_class = index.organ_slices(rec.organ);
    const auto& opp_class = index.organ_slices(opposite(rec.organ));
    if (same_class.size() < 2)
        throw SamplingError("organ-based: no positive candidate in anchor's organ class");
    if (opp_class.empty())
        throw SamplingError("organ-based: opposite organ class is empty");

    Triplet t;
    t.anchor = anchor;
    t.strategy = Strategy::O;
    t.positive = pick_excluding(same_class, anchor, rng);
    t.negative = pick(opp_class, rng);
    return t;
}

Triplet sample_mixed(const DatasetIndex& index, size_t anchor, std::mt19937_64& rng) {
    const auto& rec = index.record(anchor);
    if (!rec.organ_known())
        throw SamplingError("mixed: anchor has unknown organ presence");
    const auto& same_scan = index.scan_slices(rec.scan_id);

    std::vector<size_t> pos_cand, neg_cand;
    for (size_t i : same_scan) {
        if (!index.record(i).organ_known())
            throw SamplingError("mixed: scan '" + rec.scan_id + "' has slices with unknown organ presence");
        if (index.record(i).organ == rec.organ) {
            if (i != anchor) pos_cand.push_back(i);
        } else {
            neg_cand.push_back(i);
        }
    }
    if (pos_cand.empty())
        throw SamplingError("mixed: no same-scan same-class positive candidate for anchor");

    Triplet t;
    t.anchor = anchor;
    t.strategy = Strategy::M;
    t.positive = pick(pos_cand, rng);
    if (!neg_cand.empty()) {
        t.negative = pick(neg_cand, rng);
    } else {
        // Degenerate scan: every slice shares the anchor's class. Fall back
        // to a cross-scan organ-based negative and flag it.
        const auto& opp_class = index.organ_slices(opposite(rec.organ));
        if (opp_class.empty())
            throw SamplingError("mixed: fallback failed, opposite organ class empty dataset-wide");
        t.negative = pick(opp_class, rng);
        t.fallback_used = true;
    }
    return t;
}

Triplet sample_triplet(Strategy s, const DatasetIndex& index, size_t anchor,
                       std::mt19937_64& rng) {
    switch (s) {
        case Strategy::S: return sample_scan_based(index, anchor, rng);
        case Strategy::O: return sample_organ_based(index, anchor, rng);
        case Strategy::M: return sample_mixed(index, anchor, rng);
    }
    throw InvalidArgumentError("sample_triplet: bad strategy");
}

bool satisfies_strategy(const Triplet& t, const DatasetIndex& index) {
    const auto& a = index.record(t.anchor);
    const auto& p = index.record(t.positive);
    const auto& n = index.record(t.negative);
    if (t.anchor == t.positive) return false;

    switch (t.strategy) {
        case Strategy::S:
            return p.scan_id == a.scan_id && n.scan_id != a.scan_id;
        case Strategy::O:
            return a.organ_known() && p.organ_known() && n.organ_known() &&
                   p.organ == a.organ && n.organ != a.organ;
        case Strategy::M: {
            if (!(a.organ_known() && p.organ_known() && n.organ_known())) return false;
            const bool pos_ok = p.scan_id == a.scan_id && p.organ == a.organ;
            if (t.fallback_used)
                return pos_ok && n.scan_id != a.scan_id && n.organ != a.organ;
            return pos_ok && n.scan_id == a.scan_id && n.organ != a.organ;
        }
    }
    return false;
}

bool anchor_eligible(Strategy s, const DatasetIndex& index, size_t anchor) {
    const auto& rec = index.record(anchor);
    switch (s) {
        case Strategy::S:
            return index.scan_slices(rec.scan_id).size() >= 2 && index.scan_ids().size() >= 2;
        case Strategy::O: {
            if (!rec.organ_known()) return false;
            return index.organ_slices(rec.organ).size() >= 2 &&
                   !index.organ_slices(opposite(rec.organ)).empty();
        }
        case Strategy::M: {
            if (!rec.organ_known()) return false;
            const auto& same_scan = index.scan_slices(rec.scan_id);
            bool has_pos = false;
            for (size_t i : same_scan) {
                if (!index.record(i).organ_known()) return false;
                if (i != anchor && index.record(i).organ == rec.organ) has_pos = true;
            }
            if (!has_pos) return false;
            // A fallback negative must exist even if the scan is degenerate.
            return !index.organ_slices(opposite(rec.organ)).empty();
        }
    }
    return false;
}

struct TripletTrace::Impl {
    std::ofstream out;
};

TripletTrace::TripletTrace(const std::string& csv_path) : impl_(std::make_unique<Impl>()) {
    impl_->out.open(csv_path);
    if (!impl_->out) throw Error("TripletTrace: cannot open " + csv_path);
    impl_->out << "epoch,anchor_id,pos_id,neg_id,strategy,fallback\n";
}

TripletTrace::~TripletTrace() = default;

void TripletTrace::append(int epoch, const DatasetIndex& index, const Triplet& t) {
    auto slice_id = [&](size_t i) {
        const auto& r = index.record(i);
        return r.scan_id + ":" + std::to_string(r.slice_index);
    };
    impl_->out << epoch << ',' << slice_id(t.anchor) << ',' << slice_id(t.positive) << ','
               << slice_id(t.negative) << ',' << to_string(t.strategy) << ','
               << (t.fallback_used ? 1 : 0) << '\n';
}

}  // namespace polycl
