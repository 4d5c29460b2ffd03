#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mftune {

// Cost categories used when splitting a run's total spend for reporting.
enum class CostTag {
    Pilot,      // reusable pilot evaluations (shared points, optimal-beta columns)
    TuningOverhead, // non-reusable candidate-beta pilot columns
    Allocation, // estimator evaluations beyond the reused pilot
    Offline,    // reference/oracle work excluded from the budget
};

inline const char* cost_tag_name(CostTag t) {
    switch (t) {
        case CostTag::Pilot: return "pilot";
        case CostTag::TuningOverhead: return "tuning_overhead";
        case CostTag::Allocation: return "allocation";
        case CostTag::Offline: return "offline";
    }
    return "?";
}

// Append-only evaluation log. Not thread-safe: parallel workers keep their own
// ledger and merge afterwards.
class CostLedger {
  public:
    struct Entry {
        int model_id;
        std::size_t count;
        double unit_cost;
        CostTag tag;
        std::string note;
    };

    void charge(int model_id, std::size_t count, double unit_cost, CostTag tag, std::string note = {}) {
        entries_.push_back({model_id, count, unit_cost, tag, std::move(note)});
        double amount = static_cast<double>(count) * unit_cost;
        total_ += amount;
        if (tag != CostTag::Offline) budgeted_ += amount;
    }

    void merge(const CostLedger& other) {
        for (const auto& e : other.entries_) entries_.push_back(e);
        total_ += other.total_;
        budgeted_ += other.budgeted_;
    }

    double total() const { return total_; }
    double budgeted() const { return budgeted_; }

    double total_for(CostTag tag) const {
        double s = 0.0;
        for (const auto& e : entries_)
            if (e.tag == tag) s += static_cast<double>(e.count) * e.unit_cost;
        return s;
    }

    std::size_t evaluations_of(int model_id) const {
        std::size_t n = 0;
        for (const auto& e : entries_)
            if (e.model_id == model_id) n += e.count;
        return n;
    }

    const std::vector<Entry>& entries() const { return entries_; }

  private:
    std::vector<Entry> entries_;
    double total_ = 0.0;
    double budgeted_ = 0.0;
};

} // namespace mftune
