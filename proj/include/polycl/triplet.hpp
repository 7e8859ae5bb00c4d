#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "polycl/dataset.hpp"

namespace polycl {

// The three example-selection strategies. S pairs within/across scans, O
// pairs by organ presence across the whole dataset, M combines both within
// the anchor's scan.
enum class Strategy { S, O, M };

Strategy strategy_from_string(const std::string& s);
std::string to_string(Strategy s);

struct Triplet {
    size_t anchor = 0;
    size_t positive = 0;
    size_t negative = 0;
    Strategy strategy = Strategy::S;
    bool fallback_used = false;
};

// Positive from the anchor's scan (excluding the anchor), negative from any
// other scan. Organ information is never consulted.
Triplet sample_scan_based(const DatasetIndex& index, size_t anchor, std::mt19937_64& rng);

// Positive shares the anchor's organ-presence class, negative has the
// opposite class; both drawn over all scans.
Triplet sample_organ_based(const DatasetIndex& index, size_t anchor, std::mt19937_64& rng);

// Positive: same scan and same organ class as the anchor. Negative: same
// scan, opposite class; when the anchor's scan has no opposite-class slice
// the negative falls back to a cross-scan organ-based draw and the triplet
// carries fallback_used.
Triplet sample_mixed(const DatasetIndex& index, size_t anchor, std::mt19937_64& rng);

Triplet sample_triplet(Strategy s, const DatasetIndex& index, size_t anchor, std::mt19937_64& rng);

// Independent re-check of the defining set-membership predicate for a
// triplet, evaluated directly against the index.
bool satisfies_strategy(const Triplet& t, const DatasetIndex& index);

// Anchors usable by a strategy (e.g. O/M need a known organ flag and
// nonempty candidate sets). Sampling an unusable anchor throws instead.
bool anchor_eligible(Strategy s, const DatasetIndex& index, size_t anchor);

// Audit trace, one row per triplet: epoch,anchor,positive,negative,strategy,fallback.
class TripletTrace {
  public:
    explicit TripletTrace(const std::string& csv_path);
    ~TripletTrace();
    void append(int epoch, const DatasetIndex& index, const Triplet& t);

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace polycl
