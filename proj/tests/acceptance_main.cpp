#include <acceptance.hpp>

#include <cstdio>
#include <exception>
#include <iostream>

// One line per check; nonzero exit if any fails.
int main() {
    using namespace kdvist::acceptance;
    int failed = 0;
    try {
        const auto results = run_suite("acceptance", [](const std::string& s) { std::cerr << "  " << s << "\n"; });
        for (const auto& r : results) {
            std::printf("[%s] %d %s: %s (%.1fs)\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(), r.summary.c_str(),
                        r.seconds);
            if (!r.pass) ++failed;
        }
    } catch (const std::exception& e) {
        std::printf("[FAIL] acceptance aborted: %s\n", e.what());
        return 2;
    }
    std::printf("%d check(s) failed\n", failed);
    return failed ? 1 : 0;
}
