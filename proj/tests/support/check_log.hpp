#pragma once

#include <sstream>
#include <string>

// shared pass/fail collector for the acceptance criteria
struct CheckLog {
    std::ostringstream detail;
    bool ok = true;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << "  FAILED: " << what << "\n";
        }
    }
    void note(const std::string& what) { detail << "  " << what << "\n"; }
};
