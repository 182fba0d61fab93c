#include <cstdio>
#include <iostream>

#include "stoavg/acceptance.hpp"

int main() {
    bool all = true;
    for (const auto& v : stoavg::run_acceptance()) {
        std::cout << (v.pass ? "PASS" : "FAIL") << "  " << v.name << "  " << v.detail
                  << std::endl;
        all = all && v.pass;
    }
    return all ? 0 : 1;
}
