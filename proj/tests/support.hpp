#pragma once

// shared fixtures for the test suites: data-file loading and golden records

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "msvol/golden.hpp"
#include "msvol/params.hpp"

namespace testsup {

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "cannot open " << path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline msvol::GroupParams load_params(const std::string& name) {
    return msvol::params_from_json(slurp(std::string(MSVOL_DATA_DIR) + "/" + name));
}

// loads a record and pins it to the inputs this test uses
inline msvol::GoldenRecord fresh_golden(const std::string& name,
                                        const std::string& input_desc) {
    msvol::GoldenRecord rec = msvol::load_golden(MSVOL_GOLDEN_DIR, name);
    msvol::require_fresh(rec, input_desc);
    return rec;
}

inline void check_golden(const msvol::GoldenRecord& rec,
                         const std::vector<double>& computed) {
    const msvol::GoldenCheck res = msvol::golden_check(rec, computed);
    INFO(rec.name, ": ", res.diff);
    CHECK(res.pass);
}

} // namespace testsup
