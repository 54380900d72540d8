// Acceptance gate: runs every verification check at full scale and prints one
// pass/fail line per criterion. Exit status is the number of failures.
//
// Usage: acceptance [path-to-esim-cli]
// When the CLI path is given, the determinism check spawns it twice on the
// same spec and compares the emitted files byte for byte; otherwise the sweep
// is replayed in process.
#include <cstdio>

#include "esim/verify.hpp"

int main(int argc, char** argv) {
    std::string cli_path = argc > 1 ? argv[1] : "";
    int failures = esim::verify::run_suite(esim::verify::Scale::full(),
                                           /*workers=*/1, cli_path);
    if (failures == 0)
        std::printf("ALL CHECKS PASSED\n");
    else
        std::printf("%d CHECK(S) FAILED\n", failures);
    return failures;
}
