#include "fw/parallel.hpp"

#include <atomic>

#include "fw/error.hpp"

namespace fw {
namespace {
std::atomic<int> g_workers{1};
}

void set_num_workers(int workers) {
  if (workers < 1) throw InvalidConfig("worker count must be >= 1");
  g_workers.store(workers);
}

int num_workers() { return g_workers.load(); }

}  // namespace fw
