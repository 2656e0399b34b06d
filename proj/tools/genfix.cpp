// Maintenance tool: regenerates the bundled fixture content (suites, mock
// script, corpus) into a directory. The repo's fixtures/ tree is produced by
// this binary; a test asserts the two stay in sync.

#include <cstdint>
#include <iostream>
#include <string>

#include "mirage/fixtures.hpp"

int main(int argc, char** argv) {
    std::string out = argc > 1 ? argv[1] : "fixtures";
    std::uint64_t seed = argc > 2 ? std::stoull(argv[2]) : 7;
    mirage::fixtures::write_all(out, seed);
    std::cout << "fixtures written to " << out << " (seed " << seed << ")\n";
    return 0;
}
