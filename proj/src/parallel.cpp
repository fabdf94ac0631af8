#include "dde/parallel.hpp"

#include <cstdlib>
#include <string>

namespace dde {
namespace {

thread_local Index t_override = 0;
std::atomic<Index> g_override{0};

Index configured_threads() {
  if (const char* env = std::getenv("DDE_THREADS")) {
    try {
      const long value = std::stol(env);
      if (value >= 1) return static_cast<Index>(value);
    } catch (...) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<Index>(hw);
}

}  // namespace

Index thread_count() {
  if (t_override > 0) return t_override;
  if (const Index g = g_override.load(); g > 0) return g;
  static const Index configured = configured_threads();
  return configured;
}

void set_default_threads(Index threads) { g_override.store(threads > 0 ? threads : 0); }

ThreadLimit::ThreadLimit(Index limit) : previous_(t_override) { t_override = limit; }
ThreadLimit::~ThreadLimit() { t_override = previous_; }

}  // namespace dde
