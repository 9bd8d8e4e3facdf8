#pragma once

#include <string>
#include <vector>

#include "msvol/errors.hpp"

namespace msvol {

// One frozen oracle result. The digest ties the stored values to the exact
// inputs they were computed from, so silent drift in either direction (code
// or fixture) is caught instead of absorbed.
struct GoldenRecord {
    std::string name;
    std::string digest;               // hex of the input-description hash
    std::vector<std::string> labels;  // one per value; empty = use indices
    std::vector<double> values;
    double tolerance = 0.0;
    std::string oracle;  // how the values were produced, for regeneration
};

// FNV-1a over the canonical input description string.
std::string golden_digest(const std::string& input_description);

// Throws DataError with regeneration instructions when the record is absent
// or unreadable.
GoldenRecord load_golden(const std::string& dir, const std::string& name);

void save_golden(const std::string& dir, const GoldenRecord& record);

// Throws DataError when the stored digest does not match the current inputs;
// records must then be regenerated deliberately, never in CI.
void require_fresh(const GoldenRecord& record,
                   const std::string& input_description);

struct GoldenCheck {
    bool pass = true;
    std::string diff;  // names each component out of tolerance
};

GoldenCheck golden_check(const GoldenRecord& record,
                         const std::vector<double>& computed);

} // namespace msvol
