// One PASS/FAIL line per acceptance criterion; diagnostics indented below.
#include <cstdio>

#include "hsks/verify.hpp"

int main() {
    using namespace hsks::verify;
    int failures = 0;
    for (const auto& check : acceptance_checks()) {
        const auto r = run_check(check);
        std::printf("%-4s %s  %s | %s (%.1f s)\n", r.id.c_str(), r.pass ? "PASS" : "FAIL", r.title.c_str(), r.detail.c_str(), r.seconds);
        for (const auto& n : r.notes) std::printf("       %s\n", n.c_str());
        std::fflush(stdout);
        failures += r.pass ? 0 : 1;
    }
    std::printf("%d of 12 criteria failed\n", failures);
    return failures ? 1 : 0;
}
