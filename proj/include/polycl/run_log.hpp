#pragma once

#include <chrono>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "polycl/common.hpp"

namespace polycl {

struct EpochRecord {
    int epoch = 0;
    double mean_loss = 0.0;
    double lr = 0.0;
    double wall_time = 0.0;              // seconds since run start
    std::optional<double> val_dice;

    nlohmann::json to_json() const {
        nlohmann::json j{{"epoch", epoch}, {"mean_loss", mean_loss}, {"lr", lr},
                         {"wall_time", wall_time}};
        if (val_dice) j["val_dice"] = *val_dice;
        return j;
    }
};

// JSON-lines metrics log, one record per epoch.
class RunLogger {
  public:
    explicit RunLogger(const std::string& path) {
        if (!path.empty()) {
            out_.open(path);
            if (!out_) throw Error("RunLogger: cannot open " + path);
        }
        start_ = std::chrono::steady_clock::now();
    }

    double elapsed_seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

    void append(EpochRecord rec) {
        rec.wall_time = elapsed_seconds();
        if (out_.is_open()) out_ << rec.to_json().dump() << "\n" << std::flush;
        records_.push_back(rec);
    }

    const std::vector<EpochRecord>& records() const { return records_; }

  private:
    std::ofstream out_;
    std::vector<EpochRecord> records_;
    std::chrono::steady_clock::time_point start_;
};

// Canonical form of a metrics log for determinism comparisons: wall-clock
// fields are dropped (they are the one intentionally nondeterministic value),
// everything else is re-serialized byte-stably.
inline std::string canonical_metrics_log(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw MissingFileError("canonical_metrics_log: cannot open " + path);
    std::string line, out;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        j.erase("wall_time");
        out += j.dump();
        out += "\n";
    }
    return out;
}

}  // namespace polycl
