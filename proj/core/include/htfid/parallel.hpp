#ifndef HTFID_PARALLEL_HPP
#define HTFID_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace htfid {

// Worker count from the HTFID_WORKERS environment variable, falling back
// to hardware concurrency.  Always >= 1.
int default_worker_count();

// Runs fn(i) for i in [0, n).  Each index owns its output slot, so the
// result is deterministic regardless of scheduling.  The first exception
// thrown by any worker is rethrown after all workers join.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace htfid

#endif  // HTFID_PARALLEL_HPP
