// Prints one PASS/FAIL line per acceptance criterion; exit 0 iff all pass.
#include "spinlab/acceptance.hpp"

#include <cstring>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
    std::vector<int> ids;
    std::uint64_t seed = 20260810ULL;
    for (int i = 1; i < argc; ++i) {
        if (!std::strcmp(argv[i], "--criteria") && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            std::string tok;
            while (std::getline(ss, tok, ',')) ids.push_back(std::stoi(tok));
        } else if (!std::strcmp(argv[i], "--seed") && i + 1 < argc) {
            seed = std::stoull(argv[++i]);
        } else {
            std::cerr << "usage: spinlab_acceptance [--criteria 1,2,...] [--seed N]\n";
            return 2;
        }
    }
    const auto results = spinlab::run_acceptance(ids, seed);
    bool ok = !results.empty();
    for (const auto& r : results) {
        std::cout << spinlab::format_result(r) << std::endl;
        ok = ok && r.passed;
    }
    return ok ? 0 : 1;
}
