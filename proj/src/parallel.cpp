#include "tornadocast/parallel.hpp"

#include <atomic>

namespace tornadocast::parallel {

namespace {
std::atomic<int> g_max_threads{1};
}

void set_max_threads(int n) {
    g_max_threads.store(n < 1 ? 1 : n);
}

int max_threads() {
    return g_max_threads.load();
}

bool available() {
#ifdef _OPENMP
    return true;
#else
    return false;
#endif
}

bool enabled() {
    return available() && max_threads() > 1;
}

}  // namespace tornadocast::parallel
